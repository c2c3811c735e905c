"""Recurrent classifiers over raw inertial windows: vanilla RNN, LSTM, GRU,
and bidirectional variants, trained by exact backpropagation through time
with Adam and global-norm gradient clipping.

Layout conventions.  A cell is a dict with stacked per-gate arrays:

    wx: (gates, hidden, input)    input weights
    wh: (gates, hidden, hidden)   recurrent weights
    b:  (gates, hidden)           one shared bias vector per gate

Gate order is [f, i, o, g] for LSTM and [z, r, hbar] for GRU.  The dense
head maps the final hidden state (forward‖backward concatenated when
bidirectional) to 6 logits; inverted dropout is applied to that state only,
never between time steps.  Windows arrive as (channels, steps) = (9, 128)
and are consumed step-major internally.
"""

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from .exceptions import (
    DivergenceDetected,
    NonFiniteGradient,
    NotFittedError,
    ShapeMismatch,
)
from .numkit import init_weights, make_rng, sigmoid

GATE_COUNTS = {"rnn": 1, "lstm": 4, "gru": 3}
CELL_KINDS = ("rnn", "lstm", "gru")


def canonical_kind(kind):
    """Map a model name to (cell_kind, bidirectional).  Accepts the plain
    cell kinds plus 'bilstm' / 'bi-<kind>' sugar."""
    k = kind.lower().replace("-", "")
    if k.startswith("bi"):
        base = k[2:]
        if base not in CELL_KINDS:
            raise ValueError(f"unknown cell kind: {kind!r}")
        return base, True
    if k not in CELL_KINDS:
        raise ValueError(f"unknown cell kind: {kind!r}")
    return k, False


def count_params(kind, hidden=32, input_dim=9, classes=6, bidirectional=False):
    """Total trainable scalars: gates*(hidden*(hidden+input)+hidden) per
    direction plus the dense head."""
    base, bi = canonical_kind(kind)
    bi = bi or bidirectional
    gates = GATE_COUNTS[base]
    cell = gates * (hidden * (hidden + input_dim) + hidden)
    directions = 2 if bi else 1
    head_in = hidden * directions
    return directions * cell + classes * head_in + classes


@dataclass
class TrainConfig:
    epochs: int = 30
    batch_size: int = 32
    learning_rate: float = 1e-3
    dropout_rate: float = 0.5
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    gradient_clip_norm: float = 5.0
    normalize: bool = False  # opt-in per-channel standardization of windows


@dataclass(eq=False)
class RecurrentModel:
    kind: str  # rnn | lstm | gru
    bidirectional: bool
    hidden: int
    input_dim: int
    classes: np.ndarray  # label codes in head-output order
    params: dict
    channel_means: np.ndarray = None
    channel_stds: np.ndarray = None

    @property
    def n_classes(self):
        return len(self.classes)


def _init_cell(rng, kind, hidden, input_dim):
    gates = GATE_COUNTS[kind]
    wx = np.stack([init_weights(rng, input_dim, hidden, "xavier") for _ in range(gates)])
    wh = np.stack([init_weights(rng, hidden, hidden, "xavier") for _ in range(gates)])
    b = np.zeros((gates, hidden))
    return wx, wh, b


def init_model(kind, hidden=32, input_dim=9, classes=None, seed=0):
    base, bi = canonical_kind(kind)
    if classes is None:
        classes = np.arange(1, 7)
    classes = np.asarray(classes, dtype=np.int64)
    rng = make_rng(seed)
    params = {}
    params["wx"], params["wh"], params["b"] = _init_cell(rng, base, hidden, input_dim)
    if bi:
        params["wx_r"], params["wh_r"], params["b_r"] = _init_cell(rng, base, hidden, input_dim)
    head_in = hidden * (2 if bi else 1)
    params["wd"] = init_weights(rng, head_in, len(classes), "xavier")
    params["bd"] = np.zeros(len(classes))
    return RecurrentModel(
        kind=base, bidirectional=bi, hidden=hidden, input_dim=input_dim,
        classes=classes, params=params)


def apply_dropout(rng, rate, v):
    """Inverted dropout: zero with probability rate, scale survivors by
    1/(1-rate) so the expectation is unchanged.  rate 0 is the identity."""
    if not 0.0 <= rate < 1.0:
        raise ValueError("dropout rate must be in [0, 1)")
    v = np.asarray(v, dtype=np.float64)
    if rate == 0.0:
        return v.copy()
    mask = (rng.random(v.shape) >= rate) / (1.0 - rate)
    return v * mask


def _input_projections(X, wx, b):
    """Per-gate input pre-activations: list of (B, T, H) arrays."""
    B, T, I = X.shape
    flat = X.reshape(B * T, I)
    return [(flat @ wx[g].T).reshape(B, T, -1) + b[g] for g in range(wx.shape[0])]


def cell_forward(kind, weights, x_t, h_prev, c_prev=None):
    """One recurrence step.  x_t: (..., input), h_prev: (..., hidden).
    Returns h_t for RNN/GRU and (h_t, c_t) for LSTM."""
    base, _ = canonical_kind(kind)
    wx, wh, b = weights["wx"], weights["wh"], weights["b"]
    x_t = np.asarray(x_t, dtype=np.float64)
    h_prev = np.asarray(h_prev, dtype=np.float64)
    if x_t.shape[-1] != wx.shape[2] or h_prev.shape[-1] != wh.shape[2]:
        raise ShapeMismatch(
            f"cell expects input {wx.shape[2]}, hidden {wh.shape[2]}; "
            f"got {x_t.shape[-1]}, {h_prev.shape[-1]}")
    pre = [x_t @ wx[g].T + b[g] for g in range(wx.shape[0])]
    if base == "rnn":
        return np.tanh(pre[0] + h_prev @ wh[0].T)
    if base == "gru":
        z = sigmoid(pre[0] + h_prev @ wh[0].T)
        r = sigmoid(pre[1] + h_prev @ wh[1].T)
        hbar = np.tanh(pre[2] + (r * h_prev) @ wh[2].T)
        return (1.0 - z) * h_prev + z * hbar
    # lstm
    if c_prev is None:
        c_prev = np.zeros_like(h_prev)
    f = sigmoid(pre[0] + h_prev @ wh[0].T)
    i = sigmoid(pre[1] + h_prev @ wh[1].T)
    o = sigmoid(pre[2] + h_prev @ wh[2].T)
    g = np.tanh(pre[3] + h_prev @ wh[3].T)
    c = f * c_prev + i * g
    return o * np.tanh(c), c


def _run_direction(kind, wx, wh, b, X):
    """Unroll one direction over X (B, T, I).  Returns (h_final, cache)."""
    B, T, _ = X.shape
    H = wh.shape[1]
    zx = _input_projections(X, wx, b)
    hs = np.zeros((T + 1, B, H))
    if kind == "rnn":
        h = hs[0]
        for t in range(T):
            h = np.tanh(zx[0][:, t] + h @ wh[0].T)
            hs[t + 1] = h
        return hs[T], {"hs": hs}
    if kind == "gru":
        Z = np.empty((T, B, H))
        R = np.empty((T, B, H))
        HB = np.empty((T, B, H))
        h = hs[0]
        for t in range(T):
            z = sigmoid(zx[0][:, t] + h @ wh[0].T)
            r = sigmoid(zx[1][:, t] + h @ wh[1].T)
            hbar = np.tanh(zx[2][:, t] + (r * h) @ wh[2].T)
            h = (1.0 - z) * h + z * hbar
            Z[t], R[t], HB[t] = z, r, hbar
            hs[t + 1] = h
        return hs[T], {"hs": hs, "z": Z, "r": R, "hbar": HB}
    # lstm
    F = np.empty((T, B, H))
    I_ = np.empty((T, B, H))
    O = np.empty((T, B, H))
    G = np.empty((T, B, H))
    cs = np.zeros((T + 1, B, H))
    tc = np.empty((T, B, H))
    h = hs[0]
    c = cs[0]
    for t in range(T):
        f = sigmoid(zx[0][:, t] + h @ wh[0].T)
        i = sigmoid(zx[1][:, t] + h @ wh[1].T)
        o = sigmoid(zx[2][:, t] + h @ wh[2].T)
        g = np.tanh(zx[3][:, t] + h @ wh[3].T)
        c = f * c + i * g
        tch = np.tanh(c)
        h = o * tch
        F[t], I_[t], O[t], G[t] = f, i, o, g
        cs[t + 1] = c
        tc[t] = tch
        hs[t + 1] = h
    return hs[T], {"hs": hs, "cs": cs, "f": F, "i": I_, "o": O, "g": G, "tanh_c": tc}


def _backprop_direction(kind, wx, wh, X, cache, dh_final):
    """BPTT through one direction; returns (dwx, dwh, db) with stacked gate
    layout matching the forward arrays."""
    B, T, I = X.shape
    G_n, H = wh.shape[0], wh.shape[1]
    dwx = np.zeros_like(wx)
    dwh = np.zeros_like(wh)
    db = np.zeros((G_n, H))
    hs = cache["hs"]
    dh = dh_final.copy()
    if kind == "rnn":
        for t in range(T - 1, -1, -1):
            h = hs[t + 1]
            h_prev = hs[t]
            da = dh * (1.0 - h * h)
            dwx[0] += da.T @ X[:, t]
            dwh[0] += da.T @ h_prev
            db[0] += da.sum(axis=0)
            dh = da @ wh[0]
        return dwx, dwh, db
    if kind == "gru":
        Z, R, HB = cache["z"], cache["r"], cache["hbar"]
        for t in range(T - 1, -1, -1):
            h_prev = hs[t]
            z, r, hbar = Z[t], R[t], HB[t]
            dz = dh * (hbar - h_prev)
            dhbar = dh * z
            dh_prev = dh * (1.0 - z)
            dah = dhbar * (1.0 - hbar * hbar)
            dwh[2] += dah.T @ (r * h_prev)
            drh = dah @ wh[2]
            dr = drh * h_prev
            dh_prev = dh_prev + drh * r
            daz = dz * z * (1.0 - z)
            dar = dr * r * (1.0 - r)
            dwh[0] += daz.T @ h_prev
            dwh[1] += dar.T @ h_prev
            dh_prev = dh_prev + daz @ wh[0] + dar @ wh[1]
            for g, da in ((0, daz), (1, dar), (2, dah)):
                dwx[g] += da.T @ X[:, t]
                db[g] += da.sum(axis=0)
            dh = dh_prev
        return dwx, dwh, db
    # lstm
    F, I_, O, Gg = cache["f"], cache["i"], cache["o"], cache["g"]
    cs, tc = cache["cs"], cache["tanh_c"]
    dc = np.zeros_like(dh)
    for t in range(T - 1, -1, -1):
        h_prev = hs[t]
        c_prev = cs[t]
        f, i, o, g = F[t], I_[t], O[t], Gg[t]
        tch = tc[t]
        do = dh * tch
        dc = dc + dh * o * (1.0 - tch * tch)
        df = dc * c_prev
        di = dc * g
        dg = dc * i
        da_f = df * f * (1.0 - f)
        da_i = di * i * (1.0 - i)
        da_o = do * o * (1.0 - o)
        da_g = dg * (1.0 - g * g)
        dh = np.zeros_like(dh)
        for gi, da in ((0, da_f), (1, da_i), (2, da_o), (3, da_g)):
            dwx[gi] += da.T @ X[:, t]
            dwh[gi] += da.T @ h_prev
            db[gi] += da.sum(axis=0)
            dh = dh + da @ wh[gi]
        dc = dc * f
    return dwx, dwh, db


def _windows_to_steps(windows):
    """(N, channels, steps) -> (N, steps, channels) float64."""
    W = np.asarray(windows, dtype=np.float64)
    if W.ndim == 2:
        W = W[None]
    if W.ndim != 3:
        raise ShapeMismatch(f"windows must be 3-d, got shape {W.shape}")
    return np.ascontiguousarray(W.transpose(0, 2, 1))


def _final_hidden(model, X_steps):
    """Forward to the head input (final state, both directions concatenated
    when bidirectional), plus per-direction caches for BPTT."""
    p = model.params
    h_fwd, cache_f = _run_direction(model.kind, p["wx"], p["wh"], p["b"], X_steps)
    if not model.bidirectional:
        return h_fwd, (cache_f, None, None)
    X_rev = X_steps[:, ::-1, :]
    h_bwd, cache_r = _run_direction(model.kind, p["wx_r"], p["wh_r"], p["b_r"], X_rev)
    return np.concatenate([h_fwd, h_bwd], axis=1), (cache_f, cache_r, X_rev)


def sequence_forward(model, window, dropout_mask=None):
    """Logits for one inertial window (channels, steps); the mask, when
    given, is applied to the final hidden state (training mode)."""
    X = _windows_to_steps(window)
    if model.channel_means is not None:
        X = (X - model.channel_means) / model.channel_stds
    if X.shape[2] != model.input_dim:
        raise ShapeMismatch(f"expected {model.input_dim} channels, got {X.shape[2]}")
    h, _ = _final_hidden(model, X)
    if dropout_mask is not None:
        h = h * np.asarray(dropout_mask, dtype=np.float64)
    logits = h @ model.params["wd"].T + model.params["bd"]
    return logits[0]


def forward_logits(model, X_steps, dropout_mask=None):
    h, caches = _final_hidden(model, X_steps)
    h_used = h if dropout_mask is None else h * dropout_mask
    logits = h_used @ model.params["wd"].T + model.params["bd"]
    return logits, h_used, caches


def _softmax_xent(logits, target_idx):
    """Mean cross-entropy and d(loss)/d(logits) for integer targets."""
    m = logits.max(axis=1, keepdims=True)
    ex = np.exp(logits - m)
    denom = ex.sum(axis=1, keepdims=True)
    probs = ex / denom
    B = logits.shape[0]
    picked = logits[np.arange(B), target_idx]
    loss = float(np.mean(np.log(denom[:, 0]) + m[:, 0] - picked))
    dlogits = probs.copy()
    dlogits[np.arange(B), target_idx] -= 1.0
    dlogits /= B
    return loss, dlogits


def clip_global_norm(grads, max_norm):
    """Scale all gradients so the joint L2 norm is at most max_norm.
    Returns the post-clip global norm."""
    total = 0.0
    for g in grads.values():
        total += float(np.sum(g * g))
    norm = np.sqrt(total)
    if not np.isfinite(norm):
        raise NonFiniteGradient("gradient global norm is not finite")
    if max_norm is not None and norm > max_norm:
        scale = max_norm / norm
        for g in grads.values():
            g *= scale
        total = 0.0
        for g in grads.values():
            total += float(np.sum(g * g))
        norm = np.sqrt(total)
    return norm


def bptt_grad(model, windows, labels, cfg=None, dropout_mask=None):
    """Exact gradients of mean softmax cross-entropy through the full
    unroll.  Returns (loss, grads, global_norm) with clipping at
    cfg.gradient_clip_norm already applied (pass cfg=None to skip)."""
    X = _windows_to_steps(windows)
    if model.channel_means is not None:
        X = (X - model.channel_means) / model.channel_stds
    labels = np.asarray(labels, dtype=np.int64)
    if labels.shape[0] != X.shape[0]:
        raise ShapeMismatch("windows and labels disagree on batch size")
    if labels.shape[0] == 0:
        raise ShapeMismatch("empty batch")
    code_to_idx = {int(c): k for k, c in enumerate(model.classes)}
    target = np.array([code_to_idx[int(c)] for c in labels])
    logits, h_used, (cache_f, cache_r, X_rev) = forward_logits(model, X, dropout_mask)
    loss, dlogits = _softmax_xent(logits, target)
    p = model.params
    grads = {k: np.zeros_like(v) for k, v in p.items()}
    grads["wd"] = dlogits.T @ h_used
    grads["bd"] = dlogits.sum(axis=0)
    dh = dlogits @ p["wd"]
    if dropout_mask is not None:
        dh = dh * dropout_mask
    H = model.hidden
    dh_fwd = dh[:, :H]
    grads["wx"], grads["wh"], grads["b"] = _backprop_direction(
        model.kind, p["wx"], p["wh"], X, cache_f, dh_fwd)
    if model.bidirectional:
        dh_bwd = dh[:, H:]
        grads["wx_r"], grads["wh_r"], grads["b_r"] = _backprop_direction(
            model.kind, p["wx_r"], p["wh_r"], X_rev, cache_r, dh_bwd)
    for k, g in grads.items():
        if not np.all(np.isfinite(g)):
            raise NonFiniteGradient(f"non-finite gradient in {k}")
    clip = cfg.gradient_clip_norm if cfg is not None else None
    norm = clip_global_norm(grads, clip)
    return loss, grads, norm


def adam_state(params):
    return {
        "m": {k: np.zeros_like(v) for k, v in params.items()},
        "v": {k: np.zeros_like(v) for k, v in params.items()},
        "t": 0,
    }


def adam_step(params, grads, state, cfg):
    """In-place bias-corrected Adam update; returns (params, state)."""
    state["t"] += 1
    t = state["t"]
    b1, b2, eps = cfg.beta1, cfg.beta2, cfg.eps
    lr = cfg.learning_rate
    c1 = 1.0 - b1 ** t
    c2 = 1.0 - b2 ** t
    for k, g in grads.items():
        m = state["m"][k]
        v = state["v"][k]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * (g * g)
        params[k] -= lr * (m / c1) / (np.sqrt(v / c2) + eps)
    return params, state


def predict_model(model, windows, batch_size=512):
    """Label codes for an array of windows (inference mode, no dropout)."""
    X = _windows_to_steps(windows)
    if model.channel_means is not None:
        X = (X - model.channel_means) / model.channel_stds
    out = np.empty(X.shape[0], dtype=np.int64)
    for start in range(0, X.shape[0], batch_size):
        chunk = X[start:start + batch_size]
        logits, _, _ = forward_logits(model, chunk)
        out[start:start + chunk.shape[0]] = model.classes[np.argmax(logits, axis=1)]
    return out


def _accuracy(model, X_steps, labels, batch_size=512):
    hits = 0
    for start in range(0, X_steps.shape[0], batch_size):
        chunk = X_steps[start:start + batch_size]
        logits, _, _ = forward_logits(model, chunk)
        pred = model.classes[np.argmax(logits, axis=1)]
        hits += int(np.sum(pred == labels[start:start + chunk.shape[0]]))
    return hits / X_steps.shape[0]


def _channel_stats(X_steps):
    means = X_steps.mean(axis=(0, 1))
    stds = X_steps.std(axis=(0, 1))
    stds = np.where(stds < 1e-12, 1.0, stds)
    return means, stds


def train_arrays(windows, labels, kind, cfg, eval_windows=None, eval_labels=None):
    """Core training loop on arrays; returns (model, history).  history is a
    list of per-epoch dicts; the returned model carries the parameters of
    the best-eval-accuracy epoch."""
    labels = np.asarray(labels, dtype=np.int64)
    classes = np.unique(labels)
    model = init_model(kind, hidden=32, input_dim=9, classes=classes, seed=cfg.seed)
    X = _windows_to_steps(windows)
    if cfg.normalize:
        model.channel_means, model.channel_stds = _channel_stats(X)
    if model.channel_means is not None:
        X = (X - model.channel_means) / model.channel_stds
    if eval_windows is None:
        X_eval, y_eval = X, labels
    else:
        X_eval = _windows_to_steps(eval_windows)
        if model.channel_means is not None:
            X_eval = (X_eval - model.channel_means) / model.channel_stds
        y_eval = np.asarray(eval_labels, dtype=np.int64)
    code_to_idx = {int(c): k for k, c in enumerate(classes)}
    target_all = np.array([code_to_idx[int(c)] for c in labels])
    rng = make_rng(cfg.seed)
    state = adam_state(model.params)
    head_width = model.hidden * (2 if model.bidirectional else 1)
    n = X.shape[0]
    history = []
    best = {"accuracy": -1.0, "epoch": -1, "params": None}
    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        total_loss = 0.0
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            Xb = X[idx]
            tb = target_all[idx]
            if cfg.dropout_rate > 0.0:
                mask = (rng.random((idx.size, head_width)) >= cfg.dropout_rate)
                mask = mask / (1.0 - cfg.dropout_rate)
            else:
                mask = None
            logits, h_used, caches = forward_logits(model, Xb, mask)
            loss, dlogits = _softmax_xent(logits, tb)
            if not np.isfinite(loss):
                raise DivergenceDetected(f"non-finite loss at epoch {epoch}")
            p = model.params
            grads = {}
            grads["wd"] = dlogits.T @ h_used
            grads["bd"] = dlogits.sum(axis=0)
            dh = dlogits @ p["wd"]
            if mask is not None:
                dh = dh * mask
            cache_f, cache_r, X_rev = caches
            dh_fwd = dh[:, :model.hidden]
            grads["wx"], grads["wh"], grads["b"] = _backprop_direction(
                model.kind, p["wx"], p["wh"], Xb, cache_f, dh_fwd)
            if model.bidirectional:
                grads["wx_r"], grads["wh_r"], grads["b_r"] = _backprop_direction(
                    model.kind, p["wx_r"], p["wh_r"], X_rev, cache_r, dh[:, model.hidden:])
            clip_global_norm(grads, cfg.gradient_clip_norm)
            adam_step(p, grads, state, cfg)
            total_loss += loss * idx.size
        for k, v in model.params.items():
            if not np.all(np.isfinite(v)):
                raise DivergenceDetected(f"non-finite parameter {k} after epoch {epoch}")
        acc = _accuracy(model, X_eval, y_eval)
        history.append({
            "epoch": epoch,
            "train_loss": total_loss / n,
            "eval_accuracy": acc,
        })
        if acc > best["accuracy"]:
            best = {"accuracy": acc, "epoch": epoch,
                    "params": {k: v.copy() for k, v in model.params.items()}}
    if best["params"] is not None:
        model.params = best["params"]
    return model, history


def train(split, kind, cfg, eval_split=None):
    """Train on a HarSplit's raw windows; evaluation (for the history and
    the best-snapshot rule) uses eval_split when given, else the training
    split itself."""
    ew = eval_split.windows if eval_split is not None else None
    el = eval_split.labels if eval_split is not None else None
    return train_arrays(split.windows, split.labels, kind, cfg, ew, el)


class RecurrentClassifier(BaseEstimator, ClassifierMixin):
    """Estimator wrapper over train_arrays.  kind accepts rnn|lstm|gru and
    bilstm/bigru/birnn for bidirectional variants."""

    def __init__(self, kind="gru", epochs=30, batch_size=32, learning_rate=1e-3,
                 dropout_rate=0.5, seed=0, gradient_clip_norm=5.0, normalize=False):
        self.kind = kind
        self.epochs = epochs
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.dropout_rate = dropout_rate
        self.seed = seed
        self.gradient_clip_norm = gradient_clip_norm
        self.normalize = normalize

    def _config(self):
        return TrainConfig(
            epochs=self.epochs, batch_size=self.batch_size,
            learning_rate=self.learning_rate, dropout_rate=self.dropout_rate,
            seed=self.seed, gradient_clip_norm=self.gradient_clip_norm,
            normalize=self.normalize)

    def fit(self, X, y, eval_set=None):
        ew, el = eval_set if eval_set is not None else (None, None)
        self.model_, self.history_ = train_arrays(X, y, self.kind, self._config(), ew, el)
        self.classes_ = self.model_.classes
        return self

    def predict(self, X):
        if not hasattr(self, "model_"):
            raise NotFittedError("RecurrentClassifier is not fitted")
        return predict_model(self.model_, X)
