"""RBF-kernel soft-margin SVM trained by a two-variable SMO dual solver,
assembled into a one-vs-one multiclass classifier.

The solver maximizes the standard dual

    D(alpha) = sum_i alpha_i - 0.5 * sum_ij alpha_i alpha_j y_i y_j K_ij
    subject to 0 <= alpha_i <= c and sum_i alpha_i y_i = 0

by repeatedly taking the analytic optimum over one (i, j) pair: i is the
point with the largest KKT violation, j maximizes |E_i - E_j|.  Full-set
selection passes alternate with passes restricted to non-bound points.
Kernel rows are computed on demand and cached per problem; no global Gram
matrix is formed.
"""

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from .exceptions import (
    KernelNotSymmetric,
    NotConverged,
    NotFittedError,
    ShapeMismatch,
)
from .numkit import check_matrix


def rbf_kernel(x, z, gamma):
    """exp(-gamma * ||x - z||^2), in (0, 1]."""
    x = np.asarray(x, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    if x.shape != z.shape:
        raise ShapeMismatch(f"rbf_kernel shapes differ: {x.shape} vs {z.shape}")
    if gamma <= 0:
        raise ValueError("gamma must be > 0")
    d = x - z
    return float(np.exp(-gamma * (d @ d)))


def rbf_kernel_matrix(A, B, gamma):
    """Pairwise kernel block exp(-gamma * ||a - b||^2) for rows of A and B."""
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    sq = (A * A).sum(axis=1)[:, None] + (B * B).sum(axis=1)[None, :] - 2.0 * (A @ B.T)
    np.maximum(sq, 0.0, out=sq)
    return np.exp(-gamma * sq)


def kkt_violation(alpha_i, y_i, decision_i, c, tol):
    """Positive excess over the KKT band for one training point, else 0.

    alpha=0 requires y*f >= 1-tol, interior alpha requires |y*f - 1| <= tol,
    alpha=c requires y*f <= 1+tol.
    """
    margin = y_i * decision_i
    if alpha_i <= 0.0:
        return max(0.0, (1.0 - tol) - margin)
    if alpha_i >= c:
        return max(0.0, margin - (1.0 + tol))
    return max(0.0, abs(margin - 1.0) - tol)


def _violations(alpha, y, decisions, c, tol):
    margin = y * decisions
    at_zero = alpha <= 0.0
    at_c = alpha >= c
    interior = ~(at_zero | at_c)
    out = np.zeros_like(alpha)
    out[at_zero] = np.maximum(0.0, (1.0 - tol) - margin[at_zero])
    out[at_c] = np.maximum(0.0, margin[at_c] - (1.0 + tol))
    out[interior] = np.maximum(0.0, np.abs(margin[interior] - 1.0) - tol)
    return out


def _bias(alpha, y, u, c):
    """Working bias: mean over non-bound support vectors, else the midpoint
    of the interval the bound points allow."""
    g = y - u
    non_bound = (alpha > 0.0) & (alpha < c)
    if np.any(non_bound):
        return float(np.mean(g[non_bound]))
    lower = ((alpha == 0.0) & (y > 0)) | ((alpha == c) & (y < 0))
    upper = ((alpha == 0.0) & (y < 0)) | ((alpha == c) & (y > 0))
    lo = np.max(g[lower]) if np.any(lower) else None
    hi = np.min(g[upper]) if np.any(upper) else None
    if lo is None and hi is None:
        return 0.0
    if lo is None:
        return float(hi)
    if hi is None:
        return float(lo)
    return float((lo + hi) / 2.0)


class _RowCache:
    """On-demand kernel rows keyed by training-point index."""

    def __init__(self, row_fn, n):
        self.row_fn = row_fn
        self.n = n
        self._rows = {}

    def row(self, i):
        r = self._rows.get(i)
        if r is None:
            r = self.row_fn(i)
            self._rows[i] = r
        return r


def _smo(rows, y, c, tol, max_passes, diag=None):
    """Core solver on a row provider; returns (alpha, bias, stats)."""
    m = y.shape[0]
    alpha = np.zeros(m)
    u = np.zeros(m)  # bias-free decision values sum_j alpha_j y_j K_jk
    if diag is None:
        diag = np.array([rows.row(i)[i] for i in range(m)])
    snap = 1e-12
    updates = 0
    examine_all = True
    for _ in range(max_passes):
        b = _bias(alpha, y, u, c)
        viol = _violations(alpha, y, u + b, c, tol)
        if examine_all:
            candidates = np.arange(m)
        else:
            candidates = np.flatnonzero((alpha > 0.0) & (alpha < c))
        if candidates.size == 0 or np.max(viol[candidates]) <= 0.0:
            if examine_all:
                return alpha, b, {"updates": updates}
            examine_all = True
            continue
        i = int(candidates[np.argmax(viol[candidates])])
        E = u + b - y
        non_bound = (alpha > 0.0) & (alpha < c)
        order_pool = np.flatnonzero(non_bound) if np.any(non_bound) else np.arange(m)
        order_pool = order_pool[order_pool != i]
        if order_pool.size == 0:
            order_pool = np.flatnonzero(np.arange(m) != i)
        order = order_pool[np.argsort(-np.abs(E[i] - E[order_pool]), kind="stable")]
        stepped = False
        for j in order:
            if _take_step(int(i), int(j), alpha, y, u, rows, diag, c, snap):
                stepped = True
                updates += 1
                break
        if not stepped and not examine_all:
            examine_all = True
        elif not stepped and examine_all:
            # widest pairing failed everywhere: try pairing the violator
            # with every other point before giving up
            rest = np.flatnonzero(np.arange(m) != i)
            for j in rest:
                if _take_step(int(i), int(j), alpha, y, u, rows, diag, c, snap):
                    stepped = True
                    updates += 1
                    break
            if not stepped:
                b = _bias(alpha, y, u, c)
                return alpha, b, {"updates": updates}
        else:
            examine_all = False
    raise NotConverged(max_passes)


def _take_step(i, j, alpha, y, u, rows, diag, c, snap):
    if i == j:
        return False
    s = y[i] * y[j]
    if s < 0:
        lo = max(0.0, alpha[j] - alpha[i])
        hi = min(c, c + alpha[j] - alpha[i])
    else:
        lo = max(0.0, alpha[i] + alpha[j] - c)
        hi = min(c, alpha[i] + alpha[j])
    if hi - lo < snap:
        return False
    row_i = rows.row(i)
    k_ij = row_i[j]
    eta = diag[i] + diag[j] - 2.0 * k_ij
    du = u[j] - u[i]
    if eta > 0.0:
        t = ((1.0 - s) - y[j] * du) / eta
        new_aj = np.clip(alpha[j] + t, lo, hi)
    else:
        # flat or concave direction: the dual gain is linear in t, take the
        # better box corner if it improves the objective
        def gain(t):
            return (1.0 - s) * t - 0.5 * eta * t * t - t * y[j] * du
        g_lo = gain(lo - alpha[j])
        g_hi = gain(hi - alpha[j])
        if max(g_lo, g_hi) <= snap:
            return False
        new_aj = lo if g_lo > g_hi else hi
    if abs(new_aj - alpha[j]) < snap:
        return False
    if new_aj < snap:
        new_aj = 0.0
    elif new_aj > c - snap:
        new_aj = c
    new_ai = alpha[i] + s * (alpha[j] - new_aj)
    if new_ai < snap:
        new_ai = 0.0
    elif new_ai > c - snap:
        new_ai = c
    row_j = rows.row(j)
    u += (new_ai - alpha[i]) * y[i] * row_i + (new_aj - alpha[j]) * y[j] * row_j
    alpha[i] = new_ai
    alpha[j] = new_aj
    return True


def dual_objective(K, y, alpha):
    """D(alpha) = sum alpha - 0.5 alpha' (yy' * K) alpha."""
    ay = alpha * y
    return float(np.sum(alpha) - 0.5 * ay @ (K @ ay))


def smo_solve(K, y, c, tol=1e-3, max_passes=100_000):
    """Solve the dual for a precomputed kernel matrix; returns (alpha, bias).

    K must be symmetric within 1e-8.  At return the box constraints hold
    exactly, sum(alpha * y) = 0 within 1e-8, and no point violates its KKT
    band by more than tol.
    """
    K = np.asarray(K, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if K.ndim != 2 or K.shape[0] != K.shape[1] or K.shape[0] != y.shape[0]:
        raise ShapeMismatch(f"kernel {K.shape} incompatible with labels {y.shape}")
    if np.max(np.abs(K - K.T)) > 1e-8:
        raise KernelNotSymmetric("kernel matrix is not symmetric within 1e-8")
    if c <= 0 or tol <= 0:
        raise ValueError("c and tol must be > 0")
    rows = _RowCache(lambda i: K[i], y.shape[0])
    alpha, bias, _ = _smo(rows, y, c, tol, max_passes, diag=np.diag(K).copy())
    return alpha, bias


@dataclass(eq=False)
class BinarySvm:
    """One pairwise machine: label a maps to y=+1, label b to y=-1."""

    class_pair: tuple
    support_vectors: np.ndarray
    alpha_signed: np.ndarray  # alpha_i * y_i for support vectors
    bias: float
    gamma: float
    c: float

    def decision(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.support_vectors.shape[1]:
            raise ShapeMismatch(
                f"expected {self.support_vectors.shape[1]} features, got {X.shape[1]}")
        K = rbf_kernel_matrix(X, self.support_vectors, self.gamma)
        return K @ self.alpha_signed + self.bias


def train_pair(X, y, code_a, code_b, c, gamma, tol=1e-3, max_passes=100_000):
    """Train one pairwise machine on the rows of its two classes only."""
    mask = (y == code_a) | (y == code_b)
    Xp = X[mask]
    yp = np.where(y[mask] == code_a, 1.0, -1.0)
    if not (np.any(yp > 0) and np.any(yp < 0)):
        raise ValueError(f"pair ({code_a}, {code_b}) is missing a class")
    rows = _RowCache(lambda i: rbf_kernel_matrix(Xp[i:i + 1], Xp, gamma)[0], Xp.shape[0])
    alpha, bias, _ = _smo(rows, yp, c, tol, max_passes, diag=np.ones(Xp.shape[0]))
    sv = alpha > 1e-8
    return BinarySvm(
        class_pair=(int(code_a), int(code_b)),
        support_vectors=Xp[sv].copy(),
        alpha_signed=alpha[sv] * yp[sv],
        bias=float(bias),
        gamma=float(gamma),
        c=float(c),
    )


class RbfSvmOvO(BaseEstimator, ClassifierMixin):
    """One-vs-one multiclass RBF SVM: one machine per unordered class pair,
    pairs in lexicographic code order.

    Prediction: each machine votes for one of its two labels by the sign of
    its decision value (ties at exactly zero go to the lower code).  The
    plurality label wins; vote ties break by the summed |decision| of the
    machines that voted for each tied label, then by the lowest code.
    """

    kind = "rbf_svm_ovo"

    def __init__(self, c=100.0, gamma=0.01, tol=1e-3, max_passes=100_000):
        self.c = c
        self.gamma = gamma
        self.tol = tol
        self.max_passes = max_passes

    def fit(self, X, y):
        X = check_matrix(X)
        y = np.asarray(y, dtype=np.int64)
        if y.shape[0] != X.shape[0]:
            raise ShapeMismatch("X and y row counts differ")
        self.classes_ = np.unique(y)
        self.n_features_in_ = X.shape[1]
        self.machines_ = []
        for ai in range(len(self.classes_)):
            for bi in range(ai + 1, len(self.classes_)):
                self.machines_.append(train_pair(
                    X, y, self.classes_[ai], self.classes_[bi],
                    self.c, self.gamma, self.tol, self.max_passes))
        return self

    def predict(self, X):
        if not hasattr(self, "machines_"):
            raise NotFittedError("RbfSvmOvO is not fitted")
        X = check_matrix(X, cols=self.n_features_in_)
        code_to_col = {int(code): k for k, code in enumerate(self.classes_)}
        votes = np.zeros((X.shape[0], len(self.classes_)))
        strength = np.zeros_like(votes)
        for machine in self.machines_:
            d = machine.decision(X)
            a, b = machine.class_pair
            for_a = d >= 0.0
            votes[for_a, code_to_col[a]] += 1
            votes[~for_a, code_to_col[b]] += 1
            strength[for_a, code_to_col[a]] += np.abs(d[for_a])
            strength[~for_a, code_to_col[b]] += np.abs(d[~for_a])
        top_votes = votes.max(axis=1, keepdims=True)
        in_vote_tie = votes == top_votes
        masked = np.where(in_vote_tie, strength, -np.inf)
        top_strength = masked.max(axis=1, keepdims=True)
        winner = np.argmax(in_vote_tie & (masked == top_strength), axis=1)
        return self.classes_[winner]
