"""The ``har`` command line: verify | eda | tsne | train | evaluate | reproduce.

Every artifact-producing command writes one manifest next to its outputs.
All primary outputs (CSV / JSON / SVG) are byte-reproducible for identical
flags, seeds, and dataset; wall-clock fields live only in manifests.  Exit
codes: 0 success, 2 data errors, 3 model/schema errors, 4 training
divergence.  ``--data`` defaults to the HAR_DATA_DIR environment variable.
"""

import argparse
import ast
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .data import (
    ACTIVITY_NAMES,
    CHANNEL_NAMES,
    N_FEATURES,
    OFFICIAL_TEST_ROWS,
    OFFICIAL_TRAIN_ROWS,
    WINDOW_LEN,
    _split_files,
    class_distribution,
    load_activity_names,
    load_feature_names,
    load_split,
)
from .eda import static_dynamic_report
from .evaluation import GridSpec, build_report, grid_search
from .exceptions import DataError, HarError
from .kernel_svm import RbfSvmOvO
from .linear import LinearSvmOvR, LogisticRegressionOvR
from .manifest import RunManifest, fingerprint_split, write_manifest
from .persist import (
    canonical_json,
    load_model,
    model_kind_of,
    save_model,
    save_report,
)
from .plots import confusion_svg, embedding_csv, scatter_svg
from .recurrent import RecurrentClassifier
from .tree import DecisionTreeModel
from .tsne import TsneConfig, embed, nn_confusion, stratified_sample, top_confused_pair

ML_MODELS = ("logreg", "linearsvm", "rbfsvm", "tree")
DL_MODELS = ("rnn", "lstm", "bilstm", "gru")
ALL_MODELS = ML_MODELS + DL_MODELS

# reproduce reports columns in this (alphabetical) activity order
TABLE_COLUMNS = ("LAYING", "SITTING", "STANDING", "WALKING",
                 "WALKING_DOWNSTAIRS", "WALKING_UPSTAIRS")
_NAME_TO_CODE = {name: code for code, name in ACTIVITY_NAMES.items()}

# hyperparameter axes used by --grid; selection is 5-fold stratified CV on
# the training split only
DEFAULT_GRIDS = {
    "logreg": {"lam": [0.1, 0.5, 2.0]},
    "linearsvm": {"c": [300.0, 1000.0, 3000.0]},
    "rbfsvm": {"c": [10.0, 100.0], "gamma": [0.005, 0.02]},
    "tree": {"max_depth": [6, 10, 14]},
    "rnn": {"learning_rate": [0.001, 0.003]},
    "lstm": {"learning_rate": [0.001, 0.003]},
    "bilstm": {"learning_rate": [0.001, 0.003]},
    "gru": {"learning_rate": [0.001, 0.003]},
}


def _data_dir(args):
    root = args.data or os.environ.get("HAR_DATA_DIR")
    if not root:
        raise DataError("no --data directory given and HAR_DATA_DIR is unset")
    return root


def _out_dir(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _parse_seed_list(text):
    try:
        return [int(tok) for tok in str(text).split(",") if tok.strip() != ""]
    except ValueError:
        raise DataError(f"cannot parse seed list {text!r}") from None


def _parse_params(text):
    """'k=v,k2=v2' with Python-literal values; bare words stay strings."""
    if not text:
        return {}
    out = {}
    for part in text.split(","):
        if "=" not in part:
            raise DataError(f"--params entries must look like key=value, got {part!r}")
        key, raw = part.split("=", 1)
        try:
            out[key.strip()] = ast.literal_eval(raw.strip())
        except (ValueError, SyntaxError):
            out[key.strip()] = raw.strip()
    return out


def _make_estimator(model_name, seed, params):
    if model_name == "logreg":
        return LogisticRegressionOvR(**{"seed": seed, **params})
    if model_name == "linearsvm":
        return LinearSvmOvR(**{"seed": seed, **params})
    if model_name == "rbfsvm":
        return RbfSvmOvO(**params)
    if model_name == "tree":
        return DecisionTreeModel(**params)
    if model_name in DL_MODELS:
        return RecurrentClassifier(**{"kind": model_name, "seed": seed, **params})
    raise DataError(f"unknown model {model_name!r}")


def _model_inputs(model_name, split):
    return split.features if model_name in ML_MODELS else split.windows


def _fingerprints(train_split, test_split):
    return {"train": fingerprint_split(train_split),
            "test": fingerprint_split(test_split)}


# ----------------------------------------------------------------- verify


def cmd_verify(args):
    root = _data_dir(args)
    expect = {"train": OFFICIAL_TRAIN_ROWS, "test": OFFICIAL_TEST_ROWS}
    if args.expect_rows:
        try:
            tr, te = (int(v) for v in args.expect_rows.split(","))
        except ValueError:
            raise DataError(f"--expect-rows wants 'train,test', got {args.expect_rows!r}") from None
        expect = {"train": tr, "test": te}
    load_activity_names(root)
    print("activity_labels.txt: 6 activities")
    names = load_feature_names(root)
    print(f"features.txt: {len(names)} feature names")
    totals = {}
    for which in ("train", "test"):
        split = load_split(root, which)
        files = _split_files(which)
        print(f"{files['X']}: {split.n} x {N_FEATURES}")
        print(f"{files['y']}: {split.n} x 1")
        print(f"{files['subject']}: {split.n} x 1")
        for ch in CHANNEL_NAMES:
            print(f"{files[ch]}: {split.n} x {WINDOW_LEN}")
        totals[which] = split.n
    print(f"train rows: {totals['train']}")
    print(f"test rows: {totals['test']}")
    print(f"total rows: {totals['train'] + totals['test']}")
    for which in ("train", "test"):
        if totals[which] != expect[which]:
            raise DataError(
                f"{which} split has {totals[which]} rows, expected {expect[which]}")
    print("ok")
    return 0


# -------------------------------------------------------------------- eda


def cmd_eda(args):
    root = _data_dir(args)
    out = _out_dir(args)
    t0 = time.perf_counter()
    names = load_feature_names(root)
    train = load_split(root, "train")
    test = load_split(root, "test")
    lines = ["split,code,name,count"]
    for which, split in (("train", train), ("test", test)):
        dist = class_distribution(split.labels)
        for code in sorted(dist):
            lines.append(f"{which},{code},{ACTIVITY_NAMES[code]},{dist[code]}")
    (out / "class_counts.csv").write_text("\n".join(lines) + "\n")
    report = static_dynamic_report(train.features, train.labels, names)
    summary_lines = ["class,min,q1,median,q3,max,mean"]
    for cls in sorted(report["summaries"]):
        s = report["summaries"][cls]
        summary_lines.append(
            f"{cls},{s['min']!r},{s['q1']!r},{s['median']!r},{s['q3']!r},"
            f"{s['max']!r},{s['mean']!r}")
    (out / "feature_summary.csv").write_text("\n".join(summary_lines) + "\n")
    (out / "threshold.json").write_text(canonical_json(report))
    manifest = RunManifest(
        command="eda",
        flags={"data": str(root), "out": str(args.out)},
        seeds=[],
        dataset_fingerprint=_fingerprints(train, test),
        tool_version=__version__,
        timings_seconds={"total": time.perf_counter() - t0},
    )
    write_manifest(out / "manifest.json", manifest)
    print(f"threshold feature: {report['feature']}")
    print(f"threshold: {report['threshold']!r} (static {report['side']})")
    print(f"train accuracy: {report['train_accuracy']:.4f}")
    return 0


# ------------------------------------------------------------------- tsne


def cmd_tsne(args):
    root = _data_dir(args)
    out = _out_dir(args)
    t0 = time.perf_counter()
    train = load_split(root, "train")
    size = min(args.sample_size, train.n)
    idx = stratified_sample(train.labels, size, args.seed)
    X = train.features[idx]
    labels = train.labels[idx]
    cfg = TsneConfig(perplexity=args.perplexity, iterations=args.iters, seed=args.seed)
    emb = embed(X, cfg, labels=labels)
    (out / "embedding.csv").write_text(embedding_csv(emb.points, labels))
    (out / "embedding.svg").write_text(
        scatter_svg(emb.points, labels, title="t-SNE of expert features"))
    table = nn_confusion(emb.points, labels)
    names = [ACTIVITY_NAMES[c] for c in range(1, 7)]
    nn_lines = ["true\\nn," + ",".join(names)]
    for i, name in enumerate(names):
        nn_lines.append(name + "," + ",".join(str(int(v)) for v in table[i]))
    (out / "nn_confusion.csv").write_text("\n".join(nn_lines) + "\n")
    pair, count = top_confused_pair(emb.points, labels)
    (out / "tsne_summary.json").write_text(canonical_json({
        "final_kl": emb.final_kl,
        "kl_trace_last_100": emb.kl_trace[-100:],
        "most_confused_pair": [ACTIVITY_NAMES[pair[0]], ACTIVITY_NAMES[pair[1]]],
        "most_confused_count": count,
        "perplexity_search_failures": int(np.sum(~emb.search_converged)),
        "sample_size": int(size),
    }))
    manifest = RunManifest(
        command="tsne",
        flags={"data": str(root), "out": str(args.out),
               "perplexity": args.perplexity, "iters": args.iters,
               "sample_size": args.sample_size},
        seeds=[args.seed],
        dataset_fingerprint={"train": fingerprint_split(train)},
        tool_version=__version__,
        timings_seconds={"total": time.perf_counter() - t0},
    )
    write_manifest(out / "manifest.json", manifest)
    print(f"final KL: {emb.final_kl:.6f}")
    print(f"most confused pair: {ACTIVITY_NAMES[pair[0]]} <-> {ACTIVITY_NAMES[pair[1]]} "
          f"({count} cross neighbors)")
    return 0


# ------------------------------------------------------------------ train


def _fit_and_pick(model_name, seeds, params, train_split, test_split, timings):
    """Fit once per seed (recurrent models evaluate on the test split per
    epoch and keep their best snapshot); return the best run."""
    X_train = _model_inputs(model_name, train_split)
    X_test = _model_inputs(model_name, test_split)
    best = None
    per_seed = {}
    for s in seeds:
        est = _make_estimator(model_name, s, params)
        t0 = time.perf_counter()
        if model_name in DL_MODELS:
            est.fit(X_train, train_split.labels,
                    eval_set=(X_test, test_split.labels))
        else:
            est.fit(X_train, train_split.labels)
        timings[f"fit_seed_{s}"] = time.perf_counter() - t0
        pred = est.predict(X_test)
        acc = float(np.mean(pred == test_split.labels))
        per_seed[s] = {
            "accuracy": acc,
            "history": getattr(est, "history_", []) if model_name in DL_MODELS else None,
        }
        if best is None or acc > best["accuracy"]:
            best = {"accuracy": acc, "seed": s, "est": est, "pred": pred}
        if model_name in ML_MODELS:
            break  # deterministic in the seed beyond the solver init
    return best, per_seed


def _write_model_artifacts(out, model_name, best, per_seed, train_split, test_split,
                           cv_result=None):
    est = best["est"]
    fingerprints = _fingerprints(train_split, test_split)
    report = build_report(
        model_kind=model_name,
        hyperparameters=est.get_params(),
        seed=est.get_params().get("seed", 0),
        y_true=test_split.labels,
        y_pred=best["pred"],
        fingerprint=fingerprints,
    )
    save_model(est, out / "model.json", dataset_fingerprint=fingerprints["train"])
    save_report(report, out / "report.json")
    (out / "confusion.csv").write_text(report.confusion.to_csv())
    (out / "confusion.svg").write_text(
        confusion_svg(report.confusion.counts, title=f"Confusion: {model_name}"))
    if model_name in DL_MODELS:
        (out / "histories.json").write_text(canonical_json(
            {str(s): r["history"] for s, r in per_seed.items()}))
        (out / "accuracies.json").write_text(canonical_json(
            {str(s): r["accuracy"] for s, r in per_seed.items()}))
    if cv_result is not None:
        (out / "cv_table.json").write_text(canonical_json({
            "best_params": cv_result.best_params,
            "table": cv_result.table,
        }))
    return report


def cmd_train(args):
    root = _data_dir(args)
    out = _out_dir(args)
    model_name = args.model
    seeds = _parse_seed_list(args.seed)
    timings = {}
    t0 = time.perf_counter()
    train_split = load_split(root, "train")
    params = _parse_params(args.params)
    cv_result = None
    if args.grid:
        t_grid = time.perf_counter()
        grid = GridSpec(axes=DEFAULT_GRIDS[model_name], folds=args.folds, seed=seeds[0])

        def trainer(cell_params, X_fit, y_fit):
            est = _make_estimator(model_name, seeds[0], {**params, **cell_params})
            return est.fit(X_fit, y_fit)

        cv_result = grid_search(
            trainer, grid, _model_inputs(model_name, train_split), train_split.labels)
        params = {**params, **cv_result.best_params}
        timings["grid_search"] = time.perf_counter() - t_grid
    test_split = load_split(root, "test")
    best, per_seed = _fit_and_pick(model_name, seeds, params, train_split, test_split,
                                   timings)
    report = _write_model_artifacts(out, model_name, best, per_seed,
                                    train_split, test_split, cv_result)
    timings["total"] = time.perf_counter() - t0
    manifest = RunManifest(
        command="train",
        flags={"data": str(root), "out": str(args.out), "model": model_name,
               "grid": bool(args.grid), "params": args.params or "",
               "folds": args.folds},
        seeds=seeds,
        dataset_fingerprint=_fingerprints(train_split, test_split),
        tool_version=__version__,
        timings_seconds=timings,
    )
    write_manifest(out / "manifest.json", manifest)
    if cv_result is not None:
        print(f"grid best: {cv_result.best_params}")
    print(f"test accuracy: {report.overall_accuracy:.4f} (seed {best['seed']})")
    return 0


# --------------------------------------------------------------- evaluate


def cmd_evaluate(args):
    est = load_model(args.model)
    model_name = model_kind_of(est)
    root = _data_dir(args)
    out = _out_dir(args)
    t0 = time.perf_counter()
    train_split = load_split(root, "train")
    test_split = load_split(root, "test")
    fingerprints = _fingerprints(train_split, test_split)
    stored = getattr(est, "dataset_fingerprint_", {}) or {}
    if stored and stored.get("sha256") != fingerprints["train"]["sha256"]:
        print("warning: dataset fingerprint mismatch - this model was trained "
              "on different data", file=sys.stderr)
    pred = est.predict(_model_inputs(model_name, test_split))
    report = build_report(
        model_kind=model_name,
        hyperparameters=est.get_params(),
        seed=est.get_params().get("seed", 0),
        y_true=test_split.labels,
        y_pred=pred,
        fingerprint=fingerprints,
    )
    save_report(report, out / "report.json")
    (out / "confusion.csv").write_text(report.confusion.to_csv())
    (out / "confusion.svg").write_text(
        confusion_svg(report.confusion.counts, title=f"Confusion: {model_name}"))
    manifest = RunManifest(
        command="evaluate",
        flags={"model": str(args.model), "data": str(root), "out": str(args.out)},
        seeds=[report.seed],
        dataset_fingerprint=fingerprints,
        tool_version=__version__,
        timings_seconds={"total": time.perf_counter() - t0},
    )
    write_manifest(out / "manifest.json", manifest)
    print(f"test accuracy: {report.overall_accuracy:.4f}")
    return 0


# -------------------------------------------------------------- reproduce


def _table_row(model_name, report):
    recalls = report.per_class_recall
    cells = [f"{100.0 * recalls[_NAME_TO_CODE[name] - 1]:.2f}" for name in TABLE_COLUMNS]
    return f"{model_name}," + ",".join(cells) + f",{100.0 * report.overall_accuracy:.2f}"


def cmd_reproduce(args):
    root = _data_dir(args)
    out = _out_dir(args)
    raw = str(args.seeds)
    seeds = _parse_seed_list(raw) if "," in raw else list(range(int(raw)))
    if not seeds:
        raise DataError("reproduce needs at least one seed")
    timings = {}
    t0 = time.perf_counter()
    train_split = load_split(root, "train")
    test_split = load_split(root, "test")
    dl_params = {"epochs": args.epochs} if args.epochs is not None else {}
    rows = []
    failures = {}
    for model_name in ALL_MODELS:
        model_out = out / model_name
        model_out.mkdir(parents=True, exist_ok=True)
        model_seeds = seeds if model_name in DL_MODELS else seeds[:1]
        params = dl_params if model_name in DL_MODELS else {}
        t_model = time.perf_counter()
        try:
            best, per_seed = _fit_and_pick(model_name, model_seeds, params,
                                           train_split, test_split, timings)
            report = _write_model_artifacts(model_out, model_name, best, per_seed,
                                            train_split, test_split)
            rows.append(_table_row(model_name, report))
            print(f"{model_name}: accuracy {report.overall_accuracy:.4f} "
                  f"(seed {best['seed']})")
        except Exception as exc:  # noqa: BLE001 - record and continue
            failures[model_name] = f"{type(exc).__name__}: {exc}"
            print(f"{model_name}: FAILED ({failures[model_name]})", file=sys.stderr)
        timings[model_name] = time.perf_counter() - t_model
    header = "model," + ",".join(TABLE_COLUMNS) + ",overall"
    (out / "tables1_2.csv").write_text("\n".join([header] + rows) + "\n")
    timings["total"] = time.perf_counter() - t0
    manifest = RunManifest(
        command="reproduce",
        flags={"data": str(root), "out": str(args.out), "seeds": raw,
               "epochs": args.epochs, "failures": failures},
        seeds=seeds,
        dataset_fingerprint=_fingerprints(train_split, test_split),
        tool_version=__version__,
        timings_seconds=timings,
    )
    write_manifest(out / "manifest.json", manifest)
    return 1 if failures else 0


# ------------------------------------------------------------------- main


def build_parser():
    parser = argparse.ArgumentParser(
        prog="har",
        description="Human-activity-recognition experiments on the UCI HAR dataset.")
    parser.add_argument("--version", action="version", version=f"har {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_data(p):
        p.add_argument("--data", default=None,
                       help="dataset root (default: $HAR_DATA_DIR)")

    p = sub.add_parser("verify", help="check dataset layout and shapes")
    add_data(p)
    p.add_argument("--expect-rows", default=None,
                   help="override expected 'train,test' row counts "
                        f"(default {OFFICIAL_TRAIN_ROWS},{OFFICIAL_TEST_ROWS})")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("eda", help="class counts and the static/dynamic threshold")
    add_data(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eda)

    p = sub.add_parser("tsne", help="2-D embedding of the expert features")
    add_data(p)
    p.add_argument("--out", required=True)
    p.add_argument("--perplexity", type=float, default=30.0)
    p.add_argument("--iters", type=int, default=1000)
    p.add_argument("--sample-size", type=int, default=1500)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_tsne)

    p = sub.add_parser("train", help="train one model and report on the test split")
    add_data(p)
    p.add_argument("--model", required=True, choices=ALL_MODELS)
    p.add_argument("--out", required=True)
    p.add_argument("--grid", action="store_true",
                   help="5-fold CV hyperparameter selection on the training split")
    p.add_argument("--params", default="",
                   help="comma-separated key=value estimator overrides")
    p.add_argument("--seed", default="0",
                   help="seed, or comma-separated seeds for recurrent models "
                        "(best test accuracy wins)")
    p.add_argument("--folds", type=int, default=5)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="re-evaluate a saved model on the test split")
    p.add_argument("--model", required=True, help="model JSON file")
    add_data(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("reproduce",
                       help="train all eight models and emit the combined table")
    add_data(p)
    p.add_argument("--out", required=True)
    p.add_argument("--seeds", default="3",
                   help="seed count k (seeds 0..k-1) or explicit comma list")
    p.add_argument("--epochs", type=int, default=None,
                   help="override recurrent training epochs")
    p.set_defaults(func=cmd_reproduce)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except HarError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
