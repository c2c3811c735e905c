"""Multiclass evaluation: confusion matrix, per-class recall/precision,
stratified k-fold cross-validated grid search.

Per-class "accuracy" throughout this package means recall: the diagonal
confusion count divided by the true-class support.  Reports say so in their
serialized form.
"""

import itertools
from dataclasses import dataclass, field

import numpy as np

from .data import ACTIVITY_NAMES, N_CLASSES
from .exceptions import InvalidCode, LengthMismatch
from .numkit import make_rng


@dataclass(frozen=True, eq=False)
class ConfusionMatrix:
    counts: np.ndarray  # (6, 6), rows = true code order, cols = predicted

    @classmethod
    def from_labels(cls, y_true, y_pred):
        y_true = np.asarray(y_true, dtype=np.int64)
        y_pred = np.asarray(y_pred, dtype=np.int64)
        if y_true.shape != y_pred.shape or y_true.ndim != 1:
            raise LengthMismatch(f"label vectors disagree: {y_true.shape} vs {y_pred.shape}")
        for v in (y_true, y_pred):
            bad = (v < 1) | (v > N_CLASSES)
            if np.any(bad):
                raise InvalidCode(int(v[bad][0]))
        counts = np.zeros((N_CLASSES, N_CLASSES), dtype=np.int64)
        np.add.at(counts, (y_true - 1, y_pred - 1), 1)
        return cls(counts=counts)

    @property
    def total(self):
        return int(self.counts.sum())

    @property
    def accuracy(self):
        total = self.total
        return float(np.trace(self.counts) / total) if total else 0.0

    def per_class_recall(self):
        return _safe_ratio(np.diag(self.counts), self.counts.sum(axis=1))

    def per_class_precision(self):
        return _safe_ratio(np.diag(self.counts), self.counts.sum(axis=0))

    def to_csv(self):
        names = [ACTIVITY_NAMES[c] for c in range(1, N_CLASSES + 1)]
        lines = ["true\\predicted," + ",".join(names)]
        for i, name in enumerate(names):
            lines.append(name + "," + ",".join(str(int(v)) for v in self.counts[i]))
        return "\n".join(lines) + "\n"


def _safe_ratio(num, den):
    out = np.zeros(len(num), dtype=np.float64)
    nz = den > 0
    out[nz] = num[nz] / den[nz]
    return out


def confusion(y_true, y_pred):
    return ConfusionMatrix.from_labels(y_true, y_pred)


def per_class_recall(cm):
    """Recall for each of the six activities, in code order 1..6."""
    return cm.per_class_recall()


@dataclass(eq=False)
class Report:
    """Evaluation result for one trained model on one labelled set."""

    model_kind: str
    hyperparameters: dict
    seed: int
    confusion: ConfusionMatrix
    dataset_fingerprint: dict = field(default_factory=dict)
    # wall-clock timing lives in the run manifest, not here, so that report
    # bytes are reproducible; the field stays for callers that want it in
    # memory and serializes as null unless explicitly set
    timing_seconds: float = None

    @property
    def overall_accuracy(self):
        return self.confusion.accuracy

    @property
    def per_class_recall(self):
        return self.confusion.per_class_recall()

    @property
    def per_class_precision(self):
        return self.confusion.per_class_precision()


def build_report(model_kind, hyperparameters, seed, y_true, y_pred, fingerprint=None):
    return Report(
        model_kind=model_kind,
        hyperparameters=dict(hyperparameters),
        seed=int(seed),
        confusion=confusion(y_true, y_pred),
        dataset_fingerprint=dict(fingerprint or {}),
    )


def stratified_folds(labels, k, seed):
    """Partition indices into k folds preserving class proportions within +-1.

    Per class, indices are shuffled with the seeded generator and dealt
    round-robin; every index lands in exactly one fold.
    """
    if k < 2:
        raise ValueError("folds must be >= 2")
    labels = np.asarray(labels, dtype=np.int64)
    rng = make_rng(seed)
    folds = [[] for _ in range(k)]
    for code in np.unique(labels):
        idx = np.flatnonzero(labels == code)
        idx = idx[rng.permutation(len(idx))]
        for pos, i in enumerate(idx):
            folds[pos % k].append(int(i))
    out = []
    for f in range(k):
        val = np.array(sorted(folds[f]), dtype=np.int64)
        train = np.array(sorted(itertools.chain.from_iterable(
            folds[g] for g in range(k) if g != f)), dtype=np.int64)
        out.append((train, val))
    return out


@dataclass(frozen=True)
class GridSpec:
    """Named hyperparameter axes; every cell of the cartesian product is tried."""

    axes: dict
    folds: int = 5
    seed: int = 0

    def cells(self):
        names = sorted(self.axes)
        if not names:
            raise ValueError("grid has no axes")
        for name in names:
            if not list(self.axes[name]):
                raise ValueError(f"grid axis {name!r} is empty")
        for combo in itertools.product(*(self.axes[n] for n in names)):
            yield dict(zip(names, combo))


@dataclass(eq=False)
class GridSearchResult:
    best_params: dict
    table: list  # one row per cell: params, fold accuracies, mean, error


def grid_search(trainer, grid, X, y):
    """Pick the grid cell with the best mean stratified-CV accuracy.

    trainer(params, X_fit, y_fit) must return an object with predict().
    Cells are enumerated with axes sorted by name and values in the given
    order; ties go to the earliest cell in that enumeration.  Trainer
    failures mark the cell failed and the search continues.
    """
    folds = stratified_folds(y, grid.folds, grid.seed)
    y = np.asarray(y)
    table = []
    best = None
    for cell_index, params in enumerate(grid.cells()):
        accs = []
        error = None
        for train_idx, val_idx in folds:
            try:
                model = trainer(params, _index(X, train_idx), y[train_idx])
                pred = np.asarray(model.predict(_index(X, val_idx)))
            except Exception as exc:  # noqa: BLE001 - cell failure is recorded, not fatal
                error = f"{type(exc).__name__}: {exc}"
                break
            accs.append(float(np.mean(pred == y[val_idx])))
        row = {
            "params": dict(params),
            "fold_accuracies": accs if error is None else [],
            "mean_accuracy": float(np.mean(accs)) if error is None else None,
            "error": error,
        }
        table.append(row)
        if error is None:
            key = (-row["mean_accuracy"], cell_index)
            if best is None or key < best[0]:
                best = (key, dict(params))
    if best is None:
        raise RuntimeError("every grid cell failed")
    return GridSearchResult(best_params=best[1], table=table)


def _index(X, idx):
    if isinstance(X, np.ndarray):
        return X[idx]
    return [X[i] for i in idx]
