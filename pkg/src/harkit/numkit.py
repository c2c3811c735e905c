"""Deterministic numeric kernel: RNG, activations, initializers, checks.

All stochastic code in the repository draws from :func:`make_rng`.  The
generator is numpy's PCG64 with an explicit 64-bit seed, so identical seeds
give identical streams on every platform numpy supports.  Uniforms come from
``Generator.random`` (53-bit doubles in [0, 1)), Gaussians from
``Generator.standard_normal`` (numpy's ziggurat rejection transform of the
same stream).  Golden vectors for both are pinned in the test suite.
"""

import numpy as np

from .exceptions import EmptyInput, NonFiniteEvaluation, ShapeMismatch


def make_rng(seed):
    """Seeded PCG64 generator; the only entropy source used by harkit."""
    return np.random.Generator(np.random.PCG64(int(seed)))


def softmax(v):
    """Probability vector from a score vector, stable under large inputs."""
    v = np.asarray(v, dtype=np.float64)
    if v.size == 0:
        raise EmptyInput("softmax of an empty vector")
    shifted = v - np.max(v, axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / np.sum(e, axis=-1, keepdims=True)


def sigmoid(x):
    """1 / (1 + exp(-x)), computed without overflow for any finite input."""
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    if out.ndim == 0:
        return float(out)
    return out


def init_weights(rng, fan_in, fan_out, scheme="xavier"):
    """Weight matrix of shape (fan_out, fan_in).

    xavier: uniform in +/- sqrt(6 / (fan_in + fan_out)), for tanh/sigmoid
    units.  he: Gaussian with std sqrt(2 / fan_in), for relu units.
    """
    if fan_in < 1 or fan_out < 1:
        raise ShapeMismatch("fan_in and fan_out must be >= 1")
    if scheme == "xavier":
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        return rng.uniform(-limit, limit, size=(fan_out, fan_in))
    if scheme == "he":
        std = np.sqrt(2.0 / fan_in)
        return rng.standard_normal((fan_out, fan_in)) * std
    raise ValueError(f"unknown init scheme {scheme!r}")


def standardize(X):
    """Column-wise zero mean, unit population std.

    Constant columns get std clamped to 1 and become all-zero; the clamped
    value (1.0) is what the returned stds vector records for them.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ShapeMismatch("standardize expects a matrix with at least 2 rows")
    means = X.mean(axis=0)
    stds = X.std(axis=0)
    stds = np.where(stds == 0.0, 1.0, stds)
    return (X - means) / stds, means, stds


def check_gradient(f, g, point, step=1e-5):
    """Max relative error between analytic gradient g and central differences.

    Relative error per coordinate is |a - n| / max(1, |a|, |n|), so tiny
    gradients are compared absolutely.
    """
    point = np.asarray(point, dtype=np.float64)
    analytic = np.asarray(g(point), dtype=np.float64)
    numeric = np.empty_like(point)
    for i in range(point.size):
        shift = np.zeros_like(point)
        shift.flat[i] = step
        hi = f(point + shift)
        lo = f(point - shift)
        if not (np.isfinite(hi) and np.isfinite(lo)):
            raise NonFiniteEvaluation(f"f not finite near coordinate {i}")
        numeric.flat[i] = (hi - lo) / (2.0 * step)
    denom = np.maximum(1.0, np.maximum(np.abs(analytic), np.abs(numeric)))
    return float(np.max(np.abs(analytic - numeric) / denom))


def check_matrix(X, name="X", cols=None):
    """Validate a 2-D finite float matrix; returns a float64 view/copy."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ShapeMismatch(f"{name} must be 2-D, got shape {X.shape}")
    if cols is not None and X.shape[1] != cols:
        raise ShapeMismatch(f"{name} must have {cols} columns, got {X.shape[1]}")
    if not np.all(np.isfinite(X)):
        raise ShapeMismatch(f"{name} contains non-finite values")
    return X


def check_vector(v, name="v", length=None):
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1:
        raise ShapeMismatch(f"{name} must be 1-D, got shape {v.shape}")
    if length is not None and v.shape[0] != length:
        raise ShapeMismatch(f"{name} must have length {length}, got {v.shape[0]}")
    if not np.isfinite(v).all():
        raise ShapeMismatch(f"{name} contains non-finite values")
    return v


def spectral_norm_sq(X, iters=30, seed=0):
    """Power-iteration estimate of the largest squared singular value."""
    rng = make_rng(seed)
    v = rng.standard_normal(X.shape[1])
    v /= np.linalg.norm(v)
    for _ in range(iters):
        w = X.T @ (X @ v)
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return 0.0
        v = w / norm
    return float(v @ (X.T @ (X @ v)))
