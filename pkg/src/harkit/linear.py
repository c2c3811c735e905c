"""One-vs-rest linear classifiers trained by full-batch (sub)gradient descent.

Logistic regression minimizes, per binary problem,

    sum_i log(1 + exp(-y_i (w.x_i + b))) + lambda * w.w

and the linear SVM minimizes

    0.5 * ||w||^2 + c * (1/n) * sum_i max(0, 1 - y_i (w.x_i + b)).

The bias is unregularized in both.  Six binary problems are trained, one per
activity code in ascending order, each with y=+1 for its class and -1 for
the rest; prediction takes the argmax score with ties going to the lowest
code.
"""

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from .exceptions import DivergenceDetected, NotFittedError, ShapeMismatch
from .numkit import check_matrix, sigmoid, spectral_norm_sq


def _margins(w, b, X, y):
    w = np.asarray(w, dtype=np.float64)
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.shape[1] != w.shape[0] or X.shape[0] != y.shape[0]:
        raise ShapeMismatch(
            f"X {X.shape} incompatible with w {w.shape} / y {y.shape}")
    return y * (X @ w + b)


def logistic_loss(w, b, X, y, lam):
    """Summed logistic loss plus lambda * w.w, stable for large margins."""
    m = _margins(w, b, X, y)
    w = np.asarray(w, dtype=np.float64)
    return float(np.sum(np.logaddexp(0.0, -m)) + lam * (w @ w))


def logistic_grad(w, b, X, y, lam):
    m = _margins(w, b, X, y)
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    coeff = -y * sigmoid(-m)  # d/d(score) of the summed loss
    gw = X.T @ coeff + 2.0 * lam * np.asarray(w, dtype=np.float64)
    gb = float(np.sum(coeff))
    return gw, gb


def hinge_objective(w, b, X, y, c):
    """0.5 ||w||^2 + c * mean hinge slack."""
    m = _margins(w, b, X, y)
    w = np.asarray(w, dtype=np.float64)
    slack = np.maximum(0.0, 1.0 - m)
    return float(0.5 * (w @ w) + c * slack.mean())


def hinge_subgrad(w, b, X, y, c):
    """A subgradient of hinge_objective; the gradient wherever margins != 1."""
    m = _margins(w, b, X, y)
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    active = m < 1.0
    scale = c / X.shape[0]
    gw = np.asarray(w, dtype=np.float64) - scale * (X[active].T @ y[active])
    gb = float(-scale * np.sum(y[active]))
    return gw, gb


def logistic_lipschitz(X, lam, seed=0):
    """Upper bound on the gradient Lipschitz constant of the summed logistic
    loss over (w, b): 0.25 * ||[X, 1]||_2^2 + 2 * lambda."""
    X = np.asarray(X, dtype=np.float64)
    aug = np.hstack([X, np.ones((X.shape[0], 1))])
    return 0.25 * spectral_norm_sq(aug, seed=seed) + 2.0 * lam


def _descend_logistic(X, y, lam, learning_rate, epochs):
    """Full-batch gradient descent.  With an explicit learning rate the step
    is fixed; otherwise a monotone backtracking step is used (halve on loss
    increase, grow 1.2x on success), seeded from the 1/L estimate."""
    w = np.zeros(X.shape[1])
    b = 0.0
    loss = logistic_loss(w, b, X, y, lam)
    history = [loss]
    adaptive = learning_rate is None
    step = 1.0 / logistic_lipschitz(X, lam) if adaptive else float(learning_rate)
    for _ in range(epochs):
        gw, gb = logistic_grad(w, b, X, y, lam)
        if adaptive:
            for _ in range(60):
                cand_loss = logistic_loss(w - step * gw, b - step * gb, X, y, lam)
                if np.isfinite(cand_loss) and cand_loss <= loss:
                    break
                step *= 0.5
            w, b = w - step * gw, b - step * gb
            loss = cand_loss
            step *= 1.2
        else:
            w, b = w - step * gw, b - step * gb
            loss = logistic_loss(w, b, X, y, lam)
        if not np.isfinite(loss):
            raise DivergenceDetected(f"logistic loss became {loss}")
        history.append(loss)
    return w, b, history


def _descend_hinge(X, y, c, learning_rate, epochs):
    """Subgradient descent with the strongly-convex 1/t schedule
    (eta_t = learning_rate / (t + 1)); returns the best-objective iterate.

    After each step w is projected onto the ball of radius sqrt(2c): the
    optimum satisfies 0.5*||w*||^2 <= objective(0) = c, so the projection
    never excludes it but keeps early iterates bounded (Pegasos-style).
    """
    w = np.zeros(X.shape[1])
    b = 0.0
    radius = np.sqrt(2.0 * c)
    best = (hinge_objective(w, b, X, y, c), w.copy(), b)
    history = [best[0]]
    for t in range(epochs):
        gw, gb = hinge_subgrad(w, b, X, y, c)
        eta = learning_rate / (t + 1.0)
        w -= eta * gw
        b -= eta * gb
        norm = np.linalg.norm(w)
        if norm > radius:
            w *= radius / norm
        obj = hinge_objective(w, b, X, y, c)
        if not np.isfinite(obj):
            raise DivergenceDetected(f"hinge objective became {obj}")
        history.append(obj)
        if obj < best[0]:
            best = (obj, w.copy(), b)
    return best[1], best[2], history


class _LinearOvR(BaseEstimator, ClassifierMixin):
    """Shared one-vs-rest machinery; subclasses supply the binary solver."""

    kind = None

    def fit(self, X, y):
        X = check_matrix(X)
        y = np.asarray(y, dtype=np.int64)
        if y.shape[0] != X.shape[0]:
            raise ShapeMismatch("X and y row counts differ")
        self.classes_ = np.unique(y)
        self.n_features_in_ = X.shape[1]
        coefs, intercepts, histories = [], [], []
        for code in self.classes_:
            targets = np.where(y == code, 1.0, -1.0)
            w, b, history = self._solve_binary(X, targets)
            coefs.append(w)
            intercepts.append(b)
            histories.append(np.asarray(history))
        self.coef_ = np.vstack(coefs)
        self.intercept_ = np.asarray(intercepts)
        self.history_ = histories
        return self

    def decision_function(self, X):
        if not hasattr(self, "coef_"):
            raise NotFittedError(f"{type(self).__name__} is not fitted")
        X = check_matrix(X, cols=self.n_features_in_)
        return X @ self.coef_.T + self.intercept_

    def predict(self, X):
        scores = self.decision_function(X)
        return self.classes_[np.argmax(scores, axis=1)]


class LogisticRegressionOvR(_LinearOvR):
    """One-vs-rest logistic regression on the expert feature matrix.

    lam is the L2 strength on the summed loss (lam=0.5 matches the common
    "C=1" operating point of mean-loss formulations).  learning_rate=None
    selects the monotone backtracking step.
    """

    kind = "logistic"

    def __init__(self, lam=0.5, learning_rate=None, epochs=300, seed=0):
        self.lam = lam
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.seed = seed

    def _solve_binary(self, X, targets):
        return _descend_logistic(X, targets, self.lam, self.learning_rate, self.epochs)

    def predict_proba(self, X):
        """Per-class sigmoids of the decision scores, normalized per row
        (the usual one-vs-rest convention)."""
        p = sigmoid(self.decision_function(X))
        return p / p.sum(axis=1, keepdims=True)


class LinearSvmOvR(_LinearOvR):
    """One-vs-rest soft-margin linear SVM via subgradient descent.

    c multiplies the mean hinge slack, so its useful range grows with the
    training-set size; c around n matches the common "C=1" per-example
    parameterization.
    """

    kind = "hinge"

    def __init__(self, c=1000.0, learning_rate=1.0, epochs=2000, seed=0):
        self.c = c
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.seed = seed

    def _solve_binary(self, X, targets):
        return _descend_hinge(X, targets, self.c, self.learning_rate, self.epochs)
