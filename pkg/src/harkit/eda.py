"""Exploratory summaries over the expert features.

The one substantive computation here is the 1-D threshold sweep on
tBodyAccMag-mean(): static activities (SITTING, STANDING, LAYING) sit near
the low end of that feature and dynamic ones (the three WALKING variants)
near the high end, so a single cut separates them almost perfectly.
"""

from dataclasses import dataclass

import numpy as np

from .data import ACTIVITY_NAMES, STATIC_CODES
from .exceptions import LengthMismatch

EDA_FEATURE = "tBodyAccMag-mean()"


def is_static(labels):
    """Boolean mask: True for SITTING/STANDING/LAYING codes."""
    labels = np.asarray(labels, dtype=np.int64)
    return np.isin(labels, STATIC_CODES)


@dataclass(frozen=True)
class ThresholdRule:
    """Classify static when value <= threshold (side 'below') or when
    value > threshold (side 'above')."""

    threshold: float
    side: str
    accuracy: float

    def predict_static(self, values):
        values = np.asarray(values, dtype=np.float64)
        below = values <= self.threshold
        return below if self.side == "below" else ~below


def best_threshold(values, static_mask):
    """Exhaustive 1-D sweep over midpoints between consecutive sorted values
    (plus the two outer boundaries).  Ties prefer the lower threshold with
    side 'below' checked first."""
    values = np.asarray(values, dtype=np.float64)
    static_mask = np.asarray(static_mask, dtype=bool)
    if values.shape != static_mask.shape or values.ndim != 1 or values.size == 0:
        raise LengthMismatch("values and static mask must be equal-length 1-d arrays")
    order = np.argsort(values, kind="stable")
    v = values[order]
    s = static_mask[order].astype(np.int64)
    n = v.size
    n_static = int(s.sum())
    # statics_below[k] = statics among the first k sorted values
    statics_below = np.concatenate([[0], np.cumsum(s)])
    dynamics_below = np.arange(n + 1) - statics_below
    # candidate cut k puts the first k sorted values at or below the
    # threshold; cuts between duplicate values are not realizable
    acc_below = (statics_below + (n - n_static - dynamics_below)) / n
    acc_above = ((n_static - statics_below) + dynamics_below) / n
    thresholds = np.concatenate([[v[0] - 1.0], (v[:-1] + v[1:]) / 2.0, [v[-1] + 1.0]])
    realizable = np.concatenate([[True], v[:-1] < v[1:], [True]])
    acc_below = np.where(realizable, acc_below, -1.0)
    acc_above = np.where(realizable, acc_above, -1.0)
    best = None
    for side, acc in (("below", acc_below), ("above", acc_above)):
        k = int(np.argmax(acc))  # first maximum = lowest threshold
        cand = (float(acc[k]), side, float(thresholds[k]))
        if best is None or cand[0] > best[0]:
            best = cand
    accuracy, side, threshold = best
    return ThresholdRule(threshold=threshold, side=side, accuracy=accuracy)


def feature_summaries(values, labels):
    """Per-class five-number summary + mean of one feature column.

    Returns {class name: {min, q1, median, q3, max, mean}} over the codes
    present in labels.
    """
    values = np.asarray(values, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if values.shape != labels.shape:
        raise LengthMismatch("values and labels must be equal length")
    out = {}
    for code in np.unique(labels):
        x = values[labels == code]
        q1, med, q3 = np.percentile(x, [25, 50, 75])
        out[ACTIVITY_NAMES[int(code)]] = {
            "min": float(x.min()),
            "q1": float(q1),
            "median": float(med),
            "q3": float(q3),
            "max": float(x.max()),
            "mean": float(x.mean()),
        }
    return out


def static_dynamic_report(features, labels, feature_names, feature=EDA_FEATURE):
    """Threshold rule + summaries for the named feature column."""
    from .data import feature_index

    col = feature_index(feature_names, feature)
    values = np.asarray(features, dtype=np.float64)[:, col]
    rule = best_threshold(values, is_static(labels))
    return {
        "feature": feature,
        "column": int(col),
        "threshold": rule.threshold,
        "side": rule.side,
        "train_accuracy": rule.accuracy,
        "summaries": feature_summaries(values, labels),
    }
