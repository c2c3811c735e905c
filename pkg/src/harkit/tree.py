"""CART-style axis-parallel decision tree with exhaustive Gini splits.

Splits are scanned over every candidate feature and every midpoint between
consecutive distinct sorted values; x[feature] <= threshold routes left.
Tie-breaks are deterministic: highest gain, then lowest feature index, then
lowest threshold.  Gains are computed from exact integer class counts so the
vectorized scan agrees bit-for-bit with a naive double loop.
"""

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from .data import N_CLASSES
from .exceptions import EmptyNode, NotFittedError, ShapeMismatch
from .numkit import check_matrix


def gini(counts):
    """Gini impurity 1 - sum((c_k / n)^2) of a class-count vector."""
    counts = np.asarray(counts, dtype=np.int64)
    n = int(counts.sum())
    if n == 0:
        raise EmptyNode("gini of an empty node")
    return 1.0 - float(np.sum(counts.astype(np.float64) ** 2)) / (float(n) * float(n))


@dataclass
class Split:
    feature: int
    threshold: float
    gain: float


def _class_counts(y):
    return np.bincount(y - 1, minlength=N_CLASSES).astype(np.int64)


def best_split(X, y, candidate_features=None):
    """Best (feature, threshold, gain) by Gini decrease, or None.

    Midpoints between consecutive distinct sorted values are the only
    candidate thresholds; a split must strictly reduce impurity to qualify.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    n = y.shape[0]
    if n < 2:
        return None
    if candidate_features is None:
        candidate_features = range(X.shape[1])
    total = _class_counts(y)
    parent_gini = gini(total)
    best = None
    for f in candidate_features:
        order = np.argsort(X[:, f], kind="stable")
        xs = X[order, f]
        ys = y[order]
        cut = np.flatnonzero(xs[:-1] < xs[1:])  # split after position i
        if cut.size == 0:
            continue
        onehot = np.zeros((n, N_CLASSES), dtype=np.int64)
        onehot[np.arange(n), ys - 1] = 1
        cum = np.cumsum(onehot, axis=0)
        left = cum[cut].astype(np.float64)
        left_n = (cut + 1).astype(np.float64)
        right_n = n - left_n
        left_sq = np.sum(left**2, axis=1)
        right_sq = np.sum((total.astype(np.float64) - left) ** 2, axis=1)
        gini_left = 1.0 - left_sq / (left_n * left_n)
        gini_right = 1.0 - right_sq / (right_n * right_n)
        weighted = (left_n * gini_left + right_n * gini_right) / n
        gains = parent_gini - weighted
        k = int(np.argmax(gains))  # first max = lowest threshold
        if gains[k] > 0.0 and (best is None or gains[k] > best.gain):
            threshold = (xs[cut[k]] + xs[cut[k] + 1]) / 2.0
            best = Split(feature=int(f), threshold=float(threshold), gain=float(gains[k]))
    return best


@dataclass
class TreeNode:
    """Internal nodes carry (feature, threshold, left, right); leaves carry
    class_counts, with label = argmax and ties to the lowest code."""

    class_counts: np.ndarray
    feature: int = -1
    threshold: float = 0.0
    left: "TreeNode" = None
    right: "TreeNode" = None

    @property
    def is_leaf(self):
        return self.left is None

    @property
    def label(self):
        return int(np.argmax(self.class_counts)) + 1

    def depth(self):
        if self.is_leaf:
            return 0
        return 1 + max(self.left.depth(), self.right.depth())

    def n_leaves(self):
        if self.is_leaf:
            return 1
        return self.left.n_leaves() + self.right.n_leaves()


def grow_tree(X, y, max_depth=None, min_samples_split=2):
    """Deterministic recursive construction (explicit stack; depth-safe)."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    root = TreeNode(class_counts=_class_counts(y))
    stack = [(root, np.arange(y.shape[0]), 0)]
    while stack:
        node, idx, depth = stack.pop()
        counts = node.class_counts
        pure = np.count_nonzero(counts) == 1
        depth_capped = max_depth is not None and depth >= max_depth
        if pure or depth_capped or idx.size < min_samples_split:
            continue
        split = best_split(X[idx], y[idx])
        if split is None:
            continue
        go_left = X[idx, split.feature] <= split.threshold
        left_idx, right_idx = idx[go_left], idx[~go_left]
        node.feature = split.feature
        node.threshold = split.threshold
        node.left = TreeNode(class_counts=_class_counts(y[left_idx]))
        node.right = TreeNode(class_counts=_class_counts(y[right_idx]))
        stack.append((node.left, left_idx, depth + 1))
        stack.append((node.right, right_idx, depth + 1))
    return root


def predict_tree(root, x):
    node = root
    while not node.is_leaf:
        node = node.left if x[node.feature] <= node.threshold else node.right
    return node.label


class DecisionTreeModel(BaseEstimator, ClassifierMixin):
    """Gini CART classifier; depth limiting is the only capacity control."""

    kind = "decision_tree"

    def __init__(self, max_depth=None, min_samples_split=2):
        self.max_depth = max_depth
        self.min_samples_split = min_samples_split

    def fit(self, X, y):
        X = check_matrix(X)
        y = np.asarray(y, dtype=np.int64)
        if y.shape[0] != X.shape[0]:
            raise ShapeMismatch("X and y row counts differ")
        if self.min_samples_split < 2:
            raise ValueError("min_samples_split must be >= 2")
        self.classes_ = np.unique(y)
        self.n_features_in_ = X.shape[1]
        self.root_ = grow_tree(X, y, self.max_depth, self.min_samples_split)
        return self

    def predict(self, X):
        if not hasattr(self, "root_"):
            raise NotFittedError("DecisionTreeModel is not fitted")
        X = check_matrix(X, cols=self.n_features_in_)
        return np.array([predict_tree(self.root_, row) for row in X], dtype=np.int64)
