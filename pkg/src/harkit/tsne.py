"""Exact t-SNE (no Barnes-Hut) for embedding the 561-dimensional expert
features into 2-D.

Affinities follow the standard construction: per-row Gaussian conditionals
with sigma chosen by binary search so the row's perplexity (2^entropy) hits
the target, then symmetrized P = (p_{j|i} + p_{i|j}) / (2n) with a 1e-12
floor off the diagonal.  The low-dimensional similarities use the Student-t
kernel.  Optimization is gradient descent with the usual momentum schedule
(0.5 then 0.8 from iteration 250) and x4 early exaggeration for the first
100 iterations.  Points are never re-centered, so the final layout is
translation-equivariant in the initial coordinates.
"""

from dataclasses import dataclass, field

import numpy as np

from .exceptions import NonFiniteConfiguration, ShapeMismatch
from .numkit import make_rng

P_FLOOR = 1e-12


def pairwise_sq_dists(X):
    """Symmetric matrix of squared Euclidean distances, zero diagonal."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ShapeMismatch(f"need a 2-d array with at least 2 rows, got {X.shape}")
    sq = (X * X).sum(axis=1)
    D = sq[:, None] + sq[None, :] - 2.0 * (X @ X.T)
    np.maximum(D, 0.0, out=D)
    D = (D + D.T) / 2.0
    np.fill_diagonal(D, 0.0)
    return D


def _row_perplexity(dists, beta):
    """Conditional probabilities and 2^entropy for one row at precision beta."""
    shifted = -beta * (dists - dists.min())
    w = np.exp(shifted)
    total = w.sum()
    p = w / total
    # entropy in bits, guarding 0 log 0
    nz = p > 0.0
    h = -np.sum(p[nz] * np.log2(p[nz]))
    return p, 2.0 ** h


def cond_probs_for_perplexity(dists_row, perplexity, tol=1e-4, max_iter=50):
    """Binary search the Gaussian bandwidth for one row of squared
    distances (self-distance excluded).

    Returns (p_row, sigma, converged); when the search cannot reach the
    target within max_iter the boundary sigma is returned with
    converged=False rather than raising.
    """
    d = np.asarray(dists_row, dtype=np.float64)
    if d.ndim != 1 or d.size < 2:
        raise ShapeMismatch("distance row must be 1-d with at least 2 entries")
    if not 1.0 < perplexity < d.size + 1:
        raise ValueError(f"perplexity {perplexity} out of range for {d.size} neighbors")
    beta, beta_lo, beta_hi = 1.0, 0.0, np.inf
    p, achieved = _row_perplexity(d, beta)
    for _ in range(max_iter):
        if abs(achieved - perplexity) <= tol:
            return p, float(np.sqrt(0.5 / beta)), True
        if achieved > perplexity:
            beta_lo = beta
            beta = beta * 2.0 if np.isinf(beta_hi) else (beta + beta_hi) / 2.0
        else:
            beta_hi = beta
            beta = (beta + beta_lo) / 2.0
        p, achieved = _row_perplexity(d, beta)
    return p, float(np.sqrt(0.5 / beta)), False


def symmetrize_p(conditionals):
    """P_ij = (p_{j|i} + p_{i|j}) / (2n), floored at 1e-12 off-diagonal."""
    C = np.asarray(conditionals, dtype=np.float64)
    if C.ndim != 2 or C.shape[0] != C.shape[1]:
        raise ShapeMismatch(f"conditionals must be square, got {C.shape}")
    n = C.shape[0]
    P = (C + C.T) / (2.0 * n)
    off = ~np.eye(n, dtype=bool)
    P[off] = np.maximum(P[off], P_FLOOR)
    np.fill_diagonal(P, 0.0)
    return P


def _student_t(Y):
    """(num, Q): unnormalized Student-t weights and normalized similarities."""
    D = pairwise_sq_dists(Y)
    num = 1.0 / (1.0 + D)
    np.fill_diagonal(num, 0.0)
    Q = num / num.sum()
    return num, Q


def kl_and_gradient(P, Y):
    """KL(P || Q) and its gradient 4 sum_j (P-Q)_ij (y_i - y_j) / (1+d^2)."""
    P = np.asarray(P, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    if Y.ndim != 2 or Y.shape[1] != 2 or P.shape != (Y.shape[0], Y.shape[0]):
        raise ShapeMismatch(f"incompatible shapes P{P.shape}, Y{Y.shape}")
    num, Q = _student_t(Y)
    mask = P > 0.0
    kl = float(np.sum(P[mask] * np.log(P[mask] / np.maximum(Q[mask], P_FLOOR))))
    W = (P - Q) * num
    grad = 4.0 * (np.diag(W.sum(axis=1)) - W) @ Y
    return kl, grad


@dataclass
class TsneConfig:
    perplexity: float = 30.0
    iterations: int = 1000
    learning_rate: float = 200.0
    early_exaggeration_factor: float = 4.0
    early_exaggeration_iters: int = 100
    momentum_start: float = 0.5
    momentum_final: float = 0.8
    momentum_switch_iter: int = 250
    seed: int = 0


@dataclass(eq=False)
class Embedding:
    points: np.ndarray  # n x 2
    labels: np.ndarray  # n codes, or None
    final_kl: float
    kl_trace: list = field(default_factory=list)
    sigmas: np.ndarray = None
    search_converged: np.ndarray = None


def affinities(X, perplexity, tol=1e-4, max_iter=50):
    """Row-wise perplexity calibration + symmetrization for a data matrix.
    Returns (P, sigmas, converged_flags)."""
    D = pairwise_sq_dists(X)
    n = D.shape[0]
    C = np.zeros((n, n))
    sigmas = np.empty(n)
    flags = np.empty(n, dtype=bool)
    others = np.arange(n)
    for i in range(n):
        sel = others != i
        p, sigma, ok = cond_probs_for_perplexity(D[i, sel], perplexity, tol, max_iter)
        C[i, sel] = p
        sigmas[i] = sigma
        flags[i] = ok
    return symmetrize_p(C), sigmas, flags


def embed(X, cfg=None, labels=None):
    """Run the full pipeline on a data matrix; deterministic per seed."""
    cfg = cfg or TsneConfig()
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 10:
        raise ShapeMismatch(f"embed expects at least 10 rows, got {X.shape}")
    n = X.shape[0]
    if not 1.0 < cfg.perplexity < n:
        raise ValueError(f"perplexity {cfg.perplexity} out of range for n={n}")
    P, sigmas, flags = affinities(X, cfg.perplexity)
    rng = make_rng(cfg.seed)
    Y = rng.normal(0.0, 1e-4, size=(n, 2))
    V = np.zeros_like(Y)
    trace = []
    for it in range(cfg.iterations):
        exaggerating = it < cfg.early_exaggeration_iters
        P_used = P * cfg.early_exaggeration_factor if exaggerating else P
        kl, grad = kl_and_gradient(P_used, Y)
        momentum = (cfg.momentum_start if it < cfg.momentum_switch_iter
                    else cfg.momentum_final)
        V = momentum * V - cfg.learning_rate * grad
        Y = Y + V
        if not np.all(np.isfinite(Y)):
            raise NonFiniteConfiguration(it)
        trace.append(kl)
    final_kl, _ = kl_and_gradient(P, Y)
    if labels is not None:
        labels = np.asarray(labels, dtype=np.int64)
        if labels.shape[0] != n:
            raise ShapeMismatch("labels length does not match X rows")
    return Embedding(points=Y, labels=labels, final_kl=float(final_kl),
                     kl_trace=trace, sigmas=sigmas, search_converged=flags)


def stratified_sample(labels, size, seed):
    """Indices of a class-stratified subsample: proportional allocation with
    largest-remainder rounding, seeded shuffle within each class."""
    labels = np.asarray(labels, dtype=np.int64)
    n = labels.shape[0]
    if not 0 < size <= n:
        raise ValueError(f"sample size {size} out of range for {n} rows")
    rng = make_rng(seed)
    codes = np.unique(labels)
    counts = {int(c): int(np.sum(labels == c)) for c in codes}
    quota = {c: size * cnt / n for c, cnt in counts.items()}
    alloc = {c: int(np.floor(q)) for c, q in quota.items()}
    short = size - sum(alloc.values())
    remainders = sorted(((quota[c] - alloc[c], c) for c in alloc),
                        key=lambda t: (-t[0], t[1]))
    for _, c in remainders[:short]:
        alloc[c] += 1
    picks = []
    for c in sorted(alloc):
        idx = np.flatnonzero(labels == c)
        picks.append(rng.permutation(idx)[:alloc[c]])
    out = np.concatenate(picks)
    out.sort()
    return out


def nn_confusion(points, labels):
    """6x6 table: entry [a-1][b-1] counts points of class a whose nearest
    other point belongs to class b."""
    points = np.asarray(points, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    D = pairwise_sq_dists(points)
    np.fill_diagonal(D, np.inf)
    nn = np.argmin(D, axis=1)
    table = np.zeros((6, 6), dtype=np.int64)
    np.add.at(table, (labels - 1, labels[nn] - 1), 1)
    return table


def nn_accuracy(points, labels):
    """Fraction of points whose nearest neighbor shares their label."""
    table = nn_confusion(points, labels)
    return float(np.trace(table)) / float(table.sum())


def top_confused_pair(points, labels):
    """The unordered class pair with the largest total cross-class
    nearest-neighbor count; ties go to the lexicographically smallest pair.
    Returns ((code_a, code_b), count)."""
    table = nn_confusion(points, labels)
    best_pair, best_count = None, -1
    for a in range(6):
        for b in range(a + 1, 6):
            cross = int(table[a, b] + table[b, a])
            if cross > best_count:
                best_pair, best_count = (a + 1, b + 1), cross
    return best_pair, best_count
