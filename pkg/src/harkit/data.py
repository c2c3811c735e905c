"""Load and validate the UCI HAR directory layout, plus synthetic fixtures.

Expected layout under the dataset root::

    activity_labels.txt                6 lines "code NAME"
    features.txt                       561 lines "index name"
    {train,test}/X_{split}.txt         n x 561 expert features
    {train,test}/y_{split}.txt         n x 1 activity codes 1..6
    {train,test}/subject_{split}.txt   n x 1 subject ids
    {train,test}/Inertial Signals/{signal}_{axis}_{split}.txt   n x 128

The nine raw channels are always ordered body_acc_{x,y,z}, body_gyro_{x,y,z},
total_acc_{x,y,z}; acceleration is in g, angular velocity in rad/s.
"""

import itertools
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .exceptions import (
    DataError,
    EmptyInput,
    InvalidCode,
    MissingFile,
    NonNumericToken,
    RowCountMismatch,
    RowWidthMismatch,
    UnknownFeature,
)
from .numkit import make_rng

N_FEATURES = 561
N_CHANNELS = 9
WINDOW_LEN = 128
N_CLASSES = 6

ACTIVITY_NAMES = {
    1: "WALKING",
    2: "WALKING_UPSTAIRS",
    3: "WALKING_DOWNSTAIRS",
    4: "SITTING",
    5: "STANDING",
    6: "LAYING",
}

STATIC_CODES = (4, 5, 6)   # SITTING, STANDING, LAYING
DYNAMIC_CODES = (1, 2, 3)  # the three walking variants

CHANNEL_NAMES = [
    f"{sensor}_{axis}"
    for sensor in ("body_acc", "body_gyro", "total_acc")
    for axis in ("x", "y", "z")
]

# Official split sizes, used by `har verify` and the acceptance suite.
OFFICIAL_TRAIN_ROWS = 7352
OFFICIAL_TEST_ROWS = 2947
OFFICIAL_TOTAL_ROWS = 10299


def parse_matrix_file(text, expected_cols):
    """Parse whitespace-separated numeric rows into an (n, expected_cols) array.

    Raises RowWidthMismatch / NonNumericToken with 1-based row and column
    numbers.  Tokens that parse to nan/inf count as non-numeric: every stored
    value must be finite.
    """
    rows = [line.split() for line in text.splitlines() if line.strip()]
    if not rows:
        raise EmptyInput("empty matrix text")
    for i, tokens in enumerate(rows):
        if len(tokens) != expected_cols:
            raise RowWidthMismatch(row=i + 1, found=len(tokens), expected=expected_cols)
    flat = list(itertools.chain.from_iterable(rows))
    try:
        values = np.array(flat, dtype=np.float64)
    except ValueError:
        values = None
    if values is None or not np.all(np.isfinite(values)):
        for i, tokens in enumerate(rows):
            for j, tok in enumerate(tokens):
                try:
                    v = float(tok)
                except ValueError:
                    raise NonNumericToken(row=i + 1, col=j + 1, token=tok) from None
                if not np.isfinite(v):
                    raise NonNumericToken(row=i + 1, col=j + 1, token=tok)
        raise AssertionError("unreachable: vectorized parse failed but scan passed")
    return values.reshape(len(rows), expected_cols)


def format_matrix(matrix):
    """Inverse of parse_matrix_file, at full double precision."""
    matrix = np.atleast_2d(np.asarray(matrix, dtype=np.float64))
    return "\n".join(" ".join(repr(float(v)) for v in row) for row in matrix) + "\n"


@dataclass(frozen=True, eq=False)
class HarSplit:
    """One dataset split: expert features, raw windows, labels, subjects."""

    features: np.ndarray  # (n, 561)
    windows: np.ndarray   # (n, 9, 128)
    labels: np.ndarray    # (n,) activity codes 1..6
    subjects: np.ndarray  # (n,) subject ids

    def __post_init__(self):
        n = self.features.shape[0]
        for name in ("windows", "labels", "subjects"):
            if getattr(self, name).shape[0] != n:
                raise RowCountMismatch(name, getattr(self, name).shape[0], n)
        if self.windows.shape[1:] != (N_CHANNELS, WINDOW_LEN):
            raise RowCountMismatch("windows", self.windows.shape[1], N_CHANNELS)
        bad = (self.labels < 1) | (self.labels > N_CLASSES)
        if np.any(bad):
            raise InvalidCode(int(self.labels[bad][0]))
        for name in ("features", "windows", "labels", "subjects"):
            getattr(self, name).flags.writeable = False

    @property
    def n(self):
        return self.features.shape[0]


@dataclass(frozen=True, eq=False)
class HarDataset:
    train: HarSplit
    test: HarSplit
    feature_names: tuple = ()
    source: str = ""

    def feature_index(self, name):
        return feature_index(self.feature_names, name)


def feature_index(feature_names, name):
    """0-based position of a named feature, per the shipped features.txt order."""
    try:
        return list(feature_names).index(name)
    except ValueError:
        raise UnknownFeature(name) from None


def class_distribution(labels):
    """Counts per activity code; all six codes present as keys."""
    labels = np.asarray(labels, dtype=np.int64)
    return {code: int(np.sum(labels == code)) for code in range(1, N_CLASSES + 1)}


def _read_text(root, relpath):
    path = Path(root) / relpath
    if not path.is_file():
        raise MissingFile(str(relpath))
    return path.read_text()


def _split_files(which):
    files = {
        "X": f"{which}/X_{which}.txt",
        "y": f"{which}/y_{which}.txt",
        "subject": f"{which}/subject_{which}.txt",
    }
    for ch in CHANNEL_NAMES:
        files[ch] = f"{which}/Inertial Signals/{ch}_{which}.txt"
    return files


def load_split(root_dir, which):
    """Load one split; all 13 per-split files must agree on the row count."""
    if which not in ("train", "test"):
        raise ValueError(f"split must be 'train' or 'test', got {which!r}")
    files = _split_files(which)
    features = parse_matrix_file(_read_text(root_dir, files["X"]), N_FEATURES)
    n = features.shape[0]

    def one_column(key):
        mat = parse_matrix_file(_read_text(root_dir, files[key]), 1)
        if mat.shape[0] != n:
            raise RowCountMismatch(files[key], mat.shape[0], n)
        return mat[:, 0]

    labels = one_column("y")
    if not np.allclose(labels, np.round(labels)):
        raise InvalidCode(float(labels[labels != np.round(labels)][0]))
    subjects = one_column("subject").astype(np.int64)

    channels = []
    for ch in CHANNEL_NAMES:
        mat = parse_matrix_file(_read_text(root_dir, files[ch]), WINDOW_LEN)
        if mat.shape[0] != n:
            raise RowCountMismatch(files[ch], mat.shape[0], n)
        channels.append(mat)
    windows = np.stack(channels, axis=1)  # (n, 9, 128)

    return HarSplit(features=features, windows=windows,
                    labels=labels.astype(np.int64), subjects=subjects)


def load_feature_names(root_dir):
    lines = [ln for ln in _read_text(root_dir, "features.txt").splitlines() if ln.strip()]
    if len(lines) != N_FEATURES:
        raise RowCountMismatch("features.txt", len(lines), N_FEATURES)
    return tuple(ln.split(maxsplit=1)[1].strip() for ln in lines)


def load_activity_names(root_dir):
    lines = [ln for ln in _read_text(root_dir, "activity_labels.txt").splitlines() if ln.strip()]
    if len(lines) != N_CLASSES:
        raise RowCountMismatch("activity_labels.txt", len(lines), N_CLASSES)
    mapping = {}
    for ln in lines:
        code_str, name = ln.split(maxsplit=1)
        code = int(code_str)
        if code not in ACTIVITY_NAMES:
            raise InvalidCode(code)
        mapping[code] = name.strip()
    if mapping != ACTIVITY_NAMES:
        raise DataError(f"activity_labels.txt does not list the six expected activities: {mapping}")
    return mapping


def load_dataset(root_dir):
    load_activity_names(root_dir)
    names = load_feature_names(root_dir)
    return HarDataset(
        train=load_split(root_dir, "train"),
        test=load_split(root_dir, "test"),
        feature_names=names,
        source=str(root_dir),
    )


def write_dataset(dataset, root_dir):
    """Write a HarDataset in the official directory layout (fixtures, tests)."""
    root = Path(root_dir)
    root.mkdir(parents=True, exist_ok=True)
    (root / "activity_labels.txt").write_text(
        "".join(f"{code} {name}\n" for code, name in sorted(ACTIVITY_NAMES.items())))
    names = dataset.feature_names or tuple(f"feature{i:03d}" for i in range(N_FEATURES))
    (root / "features.txt").write_text(
        "".join(f"{i + 1} {name}\n" for i, name in enumerate(names)))
    for which in ("train", "test"):
        split = getattr(dataset, which)
        files = _split_files(which)
        for relpath in files.values():
            (root / relpath).parent.mkdir(parents=True, exist_ok=True)
        (root / files["X"]).write_text(format_matrix(split.features))
        (root / files["y"]).write_text(format_matrix(split.labels[:, None].astype(float)))
        (root / files["subject"]).write_text(format_matrix(split.subjects[:, None].astype(float)))
        for i, ch in enumerate(CHANNEL_NAMES):
            (root / files[ch]).write_text(format_matrix(split.windows[:, i, :]))


def _synthetic_split(rng, n_per_class, centers, freqs, amps, phases, noise):
    n = n_per_class * N_CLASSES
    labels = np.repeat(np.arange(1, N_CLASSES + 1), n_per_class)
    features = np.empty((n, N_FEATURES))
    windows = np.empty((n, N_CHANNELS, WINDOW_LEN))
    t = np.arange(WINDOW_LEN) / WINDOW_LEN
    for i, code in enumerate(labels):
        k = code - 1
        features[i] = centers[k] + noise * rng.standard_normal(N_FEATURES)
        for c in range(N_CHANNELS):
            windows[i, c] = (amps[k, c] * np.sin(2 * np.pi * freqs[k] * t + phases[k, c])
                             + noise * rng.standard_normal(WINDOW_LEN))
    subjects = (np.arange(n) % 30) + 1
    order = rng.permutation(n)
    return HarSplit(features=features[order], windows=windows[order],
                    labels=labels[order], subjects=subjects[order])


def make_synthetic(seed, n_per_class, noise=0.05):
    """Deterministic fixture dataset: six Gaussian clusters in feature space
    and six sinusoid families (distinct frequency and per-channel amplitude
    signature) over the raw windows, labelled consistently.

    Default noise keeps inter-center feature distance far above within-class
    spread, so nearest-neighbor accuracy on the features is 1.0.
    """
    if n_per_class < 1:
        raise ValueError("n_per_class must be >= 1")
    rng = make_rng(seed)
    centers = rng.uniform(-0.8, 0.8, size=(N_CLASSES, N_FEATURES))
    # column 200 mimics the official tBodyAccMag-mean(): near -1 for the
    # static postures, clearly higher for the walking activities
    for code in range(1, N_CLASSES + 1):
        centers[code - 1, 200] = -0.95 + 0.01 * code if code in STATIC_CODES \
            else 0.3 + 0.1 * code
    freqs = np.arange(2, 2 + N_CLASSES, dtype=np.float64)  # cycles per window
    amps = rng.uniform(0.4, 1.0, size=(N_CLASSES, N_CHANNELS))
    phases = rng.uniform(0, 2 * np.pi, size=(N_CLASSES, N_CHANNELS))
    train = _synthetic_split(rng, n_per_class, centers, freqs, amps, phases, noise)
    test = _synthetic_split(rng, n_per_class, centers, freqs, amps, phases, noise)
    names = list(f"feature{i:03d}" for i in range(N_FEATURES))
    names[200] = "tBodyAccMag-mean()"  # official name at its official index
    names = tuple(names)
    return HarDataset(train=train, test=test, feature_names=names,
                      source=f"synthetic(seed={seed}, n_per_class={n_per_class})")
