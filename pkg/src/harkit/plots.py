"""Dependency-free SVG rendering: t-SNE scatter plots and confusion-matrix
heatmaps.  Output bytes are deterministic for identical inputs (fixed float
formatting, fixed palette keyed by activity code)."""

import numpy as np

from .data import ACTIVITY_NAMES, N_CLASSES
from .exceptions import LengthMismatch

# qualitative palette keyed by activity code 1..6
PALETTE = {
    1: "#1b9e77",  # WALKING
    2: "#d95f02",  # WALKING_UPSTAIRS
    3: "#7570b3",  # WALKING_DOWNSTAIRS
    4: "#e7298a",  # SITTING
    5: "#66a61e",  # STANDING
    6: "#e6ab02",  # LAYING
}


def _fmt(v):
    return f"{v:.2f}"


def scatter_svg(points, labels, title="t-SNE embedding", size=640):
    """Scatter of n 2-D points colored by activity code, with a legend."""
    points = np.asarray(points, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if points.ndim != 2 or points.shape[1] != 2 or points.shape[0] != labels.shape[0]:
        raise LengthMismatch("points must be n x 2 with matching labels")
    margin = 40.0
    lo = points.min(axis=0)
    hi = points.max(axis=0)
    span = np.maximum(hi - lo, 1e-9)
    scale = (size - 2 * margin) / span.max()
    xy = (points - lo) * scale + margin
    legend_w = 220
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size + legend_w}" '
        f'height="{size}" viewBox="0 0 {size + legend_w} {size}">',
        f'<rect width="{size + legend_w}" height="{size}" fill="white"/>',
        f'<text x="{_fmt(size / 2)}" y="24" text-anchor="middle" '
        f'font-family="sans-serif" font-size="16">{title}</text>',
    ]
    for (x, y), code in zip(xy, labels):
        out.append(
            f'<circle cx="{_fmt(x)}" cy="{_fmt(size - y)}" r="2.2" '
            f'fill="{PALETTE[int(code)]}" fill-opacity="0.75"/>')
    for i, code in enumerate(range(1, N_CLASSES + 1)):
        ly = 60 + 26 * i
        out.append(
            f'<circle cx="{size + 20}" cy="{ly}" r="6" fill="{PALETTE[code]}"/>')
        out.append(
            f'<text x="{size + 34}" y="{ly + 5}" font-family="sans-serif" '
            f'font-size="13">{ACTIVITY_NAMES[code]}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _heat_color(frac):
    """White -> deep blue ramp."""
    frac = min(max(float(frac), 0.0), 1.0)
    r = round(255 + (8 - 255) * frac)
    g = round(255 + (48 - 255) * frac)
    b = round(255 + (107 - 255) * frac)
    return f"#{r:02x}{g:02x}{b:02x}"


def confusion_svg(counts, title="Confusion matrix"):
    """Heatmap table of a 6x6 confusion matrix, rows true, columns predicted."""
    counts = np.asarray(counts, dtype=np.int64)
    if counts.shape != (N_CLASSES, N_CLASSES):
        raise LengthMismatch(f"confusion matrix must be 6x6, got {counts.shape}")
    cell = 72
    left, top = 190, 120
    width = left + N_CLASSES * cell + 20
    height = top + N_CLASSES * cell + 20
    names = [ACTIVITY_NAMES[c] for c in range(1, N_CLASSES + 1)]
    row_max = np.maximum(counts.max(axis=1), 1)
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{_fmt(width / 2)}" y="28" text-anchor="middle" '
        f'font-family="sans-serif" font-size="16">{title}</text>',
    ]
    for j, name in enumerate(names):
        x = left + j * cell + cell / 2
        out.append(
            f'<text x="{_fmt(x)}" y="{top - 8}" text-anchor="end" '
            f'font-family="sans-serif" font-size="11" '
            f'transform="rotate(-40 {_fmt(x)} {top - 8})">{name}</text>')
    for i, name in enumerate(names):
        y = top + i * cell + cell / 2
        out.append(
            f'<text x="{left - 8}" y="{_fmt(y + 4)}" text-anchor="end" '
            f'font-family="sans-serif" font-size="11">{name}</text>')
        for j in range(N_CLASSES):
            x = left + j * cell
            v = int(counts[i, j])
            fill = _heat_color(v / row_max[i])
            out.append(
                f'<rect x="{x}" y="{top + i * cell}" width="{cell}" height="{cell}" '
                f'fill="{fill}" stroke="#cccccc"/>')
            text_fill = "#ffffff" if v / row_max[i] > 0.55 else "#000000"
            out.append(
                f'<text x="{_fmt(x + cell / 2)}" y="{_fmt(top + i * cell + cell / 2 + 5)}" '
                f'text-anchor="middle" font-family="sans-serif" font-size="13" '
                f'fill="{text_fill}">{v}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def embedding_csv(points, labels):
    """CSV text: x,y,label_code,label_name with full-precision coordinates."""
    points = np.asarray(points, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if points.shape[0] != labels.shape[0]:
        raise LengthMismatch("points and labels disagree")
    lines = ["x,y,label_code,label_name"]
    for (x, y), code in zip(points, labels):
        lines.append(f"{float(x)!r},{float(y)!r},{int(code)},{ACTIVITY_NAMES[int(code)]}")
    return "\n".join(lines) + "\n"
