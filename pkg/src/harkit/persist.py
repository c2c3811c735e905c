"""Canonical JSON persistence for models and evaluation reports.

Canonical means: sorted keys, compact separators, floats at full
double precision via repr, NaN/Infinity rejected, one trailing newline.
Deserializing and re-serializing any artifact written here reproduces the
bytes exactly, which is what the golden-file and determinism tests lean on.

Every artifact carries "schema_version" and an "artifact" discriminator;
models add "model_kind" (logreg | linearsvm | rbfsvm | tree | rnn | lstm |
bilstm | gru).
"""

import json

import numpy as np

from .data import ACTIVITY_NAMES, N_CLASSES
from .evaluation import ConfusionMatrix, Report
from .exceptions import SchemaViolation
from .kernel_svm import BinarySvm, RbfSvmOvO
from .linear import LinearSvmOvR, LogisticRegressionOvR
from .recurrent import RecurrentClassifier, RecurrentModel
from .tree import DecisionTreeModel, TreeNode

SCHEMA_VERSION = 1

# confusion rows/cols follow activity codes 1..6; serialized per-class maps
# are keyed by name instead (alphabetical == the reporting table order)
CODE_ORDER_NAMES = [ACTIVITY_NAMES[c] for c in range(1, N_CLASSES + 1)]


def canonical_json(obj):
    """Deterministic JSON text for a plain dict/list/scalar tree."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False) + "\n"


def _reject_constant(name):
    raise SchemaViolation(f"non-finite JSON constant {name!r}")


def parse_json(text):
    try:
        return json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise SchemaViolation(f"invalid JSON: {exc}") from None


def _pyify(value):
    """Convert numpy scalars/arrays nested in value to plain Python."""
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, dict):
        return {k: _pyify(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_pyify(v) for v in value]
    return value


def _need(mapping, key, context):
    if key not in mapping:
        raise SchemaViolation(f"{context}: missing {key!r}")
    return mapping[key]


def _envelope(artifact, body):
    out = {"schema_version": SCHEMA_VERSION, "artifact": artifact}
    out.update(body)
    return out


def _check_envelope(d, artifact):
    if not isinstance(d, dict):
        raise SchemaViolation("artifact must be a JSON object")
    if _need(d, "schema_version", artifact) != SCHEMA_VERSION:
        raise SchemaViolation(f"unsupported schema_version {d['schema_version']!r}")
    if _need(d, "artifact", artifact) != artifact:
        raise SchemaViolation(f"expected artifact {artifact!r}, got {d['artifact']!r}")


def _attach_fingerprint(est, fingerprint):
    est.dataset_fingerprint_ = dict(fingerprint)
    return est


# ---------------------------------------------------------------- models


def model_kind_of(est):
    if isinstance(est, LogisticRegressionOvR):
        return "logreg"
    if isinstance(est, LinearSvmOvR):
        return "linearsvm"
    if isinstance(est, RbfSvmOvO):
        return "rbfsvm"
    if isinstance(est, DecisionTreeModel):
        return "tree"
    if isinstance(est, RecurrentClassifier):
        m = est.model_
        return ("bi" + m.kind) if m.bidirectional else m.kind
    raise SchemaViolation(f"cannot serialize model of type {type(est).__name__}")


def _tree_node_to_dict(node):
    out = {"counts": [int(v) for v in node.class_counts]}
    if not node.is_leaf:
        out["feature"] = int(node.feature)
        out["threshold"] = float(node.threshold)
        out["left"] = _tree_node_to_dict(node.left)
        out["right"] = _tree_node_to_dict(node.right)
    return out


def _tree_node_from_dict(d, context="tree node"):
    counts = np.asarray(_need(d, "counts", context), dtype=np.int64)
    if counts.shape != (N_CLASSES,):
        raise SchemaViolation(f"{context}: counts must have {N_CLASSES} entries")
    node = TreeNode(class_counts=counts)
    if "feature" in d:
        node.feature = int(_need(d, "feature", context))
        node.threshold = float(_need(d, "threshold", context))
        node.left = _tree_node_from_dict(_need(d, "left", context), context)
        node.right = _tree_node_from_dict(_need(d, "right", context), context)
    return node


def model_to_dict(est, dataset_fingerprint=None):
    kind = model_kind_of(est)
    body = {
        "model_kind": kind,
        "hyperparameters": _pyify(est.get_params()),
        "classes": [int(c) for c in est.classes_],
        "dataset_fingerprint": _pyify(dataset_fingerprint or {}),
    }
    if kind in ("logreg", "linearsvm"):
        body["n_features"] = int(est.n_features_in_)
        body["payload"] = {
            "weights": est.coef_.tolist(),
            "intercepts": est.intercept_.tolist(),
        }
    elif kind == "tree":
        body["n_features"] = int(est.n_features_in_)
        body["payload"] = {"root": _tree_node_to_dict(est.root_)}
    elif kind == "rbfsvm":
        body["n_features"] = int(est.n_features_in_)
        body["payload"] = {
            "machines": [
                {
                    "class_pair": [int(m.class_pair[0]), int(m.class_pair[1])],
                    "bias": float(m.bias),
                    "gamma": float(m.gamma),
                    "c": float(m.c),
                    "alpha_signed": m.alpha_signed.tolist(),
                    "support_vectors": m.support_vectors.tolist(),
                }
                for m in est.machines_
            ]
        }
    else:
        m = est.model_
        body["payload"] = {
            "cell_kind": m.kind,
            "bidirectional": bool(m.bidirectional),
            "hidden": int(m.hidden),
            "input_dim": int(m.input_dim),
            "params": {k: v.tolist() for k, v in sorted(m.params.items())},
            "channel_means": None if m.channel_means is None else m.channel_means.tolist(),
            "channel_stds": None if m.channel_stds is None else m.channel_stds.tolist(),
            "history": _pyify(est.history_),
        }
    return _envelope("model", body)


def model_from_dict(d):
    _check_envelope(d, "model")
    kind = _need(d, "model_kind", "model")
    hyper = _need(d, "hyperparameters", "model")
    classes = np.asarray(_need(d, "classes", "model"), dtype=np.int64)
    payload = _need(d, "payload", "model")
    fingerprint = d.get("dataset_fingerprint", {})
    try:
        if kind in ("logreg", "linearsvm"):
            cls = LogisticRegressionOvR if kind == "logreg" else LinearSvmOvR
            est = cls(**hyper)
            est.classes_ = classes
            est.n_features_in_ = int(_need(d, "n_features", kind))
            est.coef_ = np.asarray(_need(payload, "weights", kind), dtype=np.float64)
            est.intercept_ = np.asarray(_need(payload, "intercepts", kind), dtype=np.float64)
            if est.coef_.shape != (len(classes), est.n_features_in_):
                raise SchemaViolation(f"{kind}: weight matrix shape {est.coef_.shape}")
            if est.intercept_.shape != (len(classes),):
                raise SchemaViolation(f"{kind}: intercept shape {est.intercept_.shape}")
            est.history_ = []
            return _attach_fingerprint(est, fingerprint)
        if kind == "tree":
            est = DecisionTreeModel(**hyper)
            est.classes_ = classes
            est.n_features_in_ = int(_need(d, "n_features", kind))
            est.root_ = _tree_node_from_dict(_need(payload, "root", kind))
            return _attach_fingerprint(est, fingerprint)
        if kind == "rbfsvm":
            est = RbfSvmOvO(**hyper)
            est.classes_ = classes
            est.n_features_in_ = int(_need(d, "n_features", kind))
            est.machines_ = []
            for md in _need(payload, "machines", kind):
                sv = np.asarray(_need(md, "support_vectors", kind), dtype=np.float64)
                alphas = np.asarray(_need(md, "alpha_signed", kind), dtype=np.float64)
                if sv.ndim != 2 or sv.shape[0] != alphas.shape[0]:
                    raise SchemaViolation(f"{kind}: machine arrays disagree")
                est.machines_.append(BinarySvm(
                    class_pair=tuple(int(v) for v in _need(md, "class_pair", kind)),
                    support_vectors=sv,
                    alpha_signed=alphas,
                    bias=float(_need(md, "bias", kind)),
                    gamma=float(_need(md, "gamma", kind)),
                    c=float(_need(md, "c", kind)),
                ))
            return _attach_fingerprint(est, fingerprint)
        if kind in ("rnn", "lstm", "gru", "birnn", "bilstm", "bigru"):
            est = RecurrentClassifier(**hyper)
            params = {k: np.asarray(v, dtype=np.float64)
                      for k, v in _need(payload, "params", kind).items()}
            means = payload.get("channel_means")
            stds = payload.get("channel_stds")
            est.model_ = RecurrentModel(
                kind=_need(payload, "cell_kind", kind),
                bidirectional=bool(_need(payload, "bidirectional", kind)),
                hidden=int(_need(payload, "hidden", kind)),
                input_dim=int(_need(payload, "input_dim", kind)),
                classes=classes,
                params=params,
                channel_means=None if means is None else np.asarray(means),
                channel_stds=None if stds is None else np.asarray(stds),
            )
            est.history_ = _need(payload, "history", kind)
            est.classes_ = classes
            return _attach_fingerprint(est, fingerprint)
    except TypeError as exc:
        raise SchemaViolation(f"{kind}: bad hyperparameters ({exc})") from None
    raise SchemaViolation(f"unknown model_kind {kind!r}")


def serialize_model(est, dataset_fingerprint=None):
    return canonical_json(model_to_dict(est, dataset_fingerprint))


def deserialize_model(text):
    return model_from_dict(parse_json(text))


def save_model(est, path, dataset_fingerprint=None):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize_model(est, dataset_fingerprint))


def load_model(path):
    with open(path, encoding="utf-8") as fh:
        return deserialize_model(fh.read())


# ---------------------------------------------------------------- reports


def report_to_dict(report):
    recalls = report.per_class_recall
    precisions = report.per_class_precision
    return _envelope("report", {
        "model_kind": report.model_kind,
        "hyperparameters": _pyify(report.hyperparameters),
        "seed": int(report.seed),
        "confusion": report.confusion.counts.tolist(),
        "confusion_label_order": CODE_ORDER_NAMES,
        "overall_accuracy": float(report.overall_accuracy),
        "per_class_recall": {
            name: float(recalls[i]) for i, name in enumerate(CODE_ORDER_NAMES)},
        "per_class_precision": {
            name: float(precisions[i]) for i, name in enumerate(CODE_ORDER_NAMES)},
        "metric_note": "per-class accuracy is recall: diagonal over true-class support",
        "dataset_fingerprint": _pyify(report.dataset_fingerprint),
        "timing_seconds": report.timing_seconds,
    })


def report_from_dict(d):
    _check_envelope(d, "report")
    counts = np.asarray(_need(d, "confusion", "report"), dtype=np.int64)
    if counts.shape != (N_CLASSES, N_CLASSES):
        raise SchemaViolation(f"report: confusion shape {counts.shape}")
    if np.any(counts < 0):
        raise SchemaViolation("report: negative confusion count")
    return Report(
        model_kind=_need(d, "model_kind", "report"),
        hyperparameters=dict(_need(d, "hyperparameters", "report")),
        seed=int(_need(d, "seed", "report")),
        confusion=ConfusionMatrix(counts=counts),
        dataset_fingerprint=dict(_need(d, "dataset_fingerprint", "report")),
        timing_seconds=d.get("timing_seconds"),
    )


def serialize_report(report):
    return canonical_json(report_to_dict(report))


def deserialize_report(text):
    return report_from_dict(parse_json(text))


def save_report(report, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize_report(report))


def load_report(path):
    with open(path, encoding="utf-8") as fh:
        return deserialize_report(fh.read())
