import json

import numpy as np
import pytest

import harkit.cli as cli
from harkit.cli import main
from harkit.data import make_synthetic, write_dataset


@pytest.fixture(scope="module")
def data_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli_data")
    write_dataset(make_synthetic(seed=0, n_per_class=12), root)
    return root


@pytest.fixture(scope="module")
def other_data_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli_data_b")
    write_dataset(make_synthetic(seed=1, n_per_class=12), root)
    return root


EXPECT = ["--expect-rows", "72,72"]


# ----------------------------------------------------------------- verify


def test_verify_ok_with_expected_rows(data_dir, capsys):
    assert main(["verify", "--data", str(data_dir)] + EXPECT) == 0
    out = capsys.readouterr().out
    assert "X_train.txt: 72 x 561" in out
    assert "total rows: 144" in out
    assert out.strip().endswith("ok")


def test_verify_official_expectation_fails_on_fixture(data_dir, capsys):
    assert main(["verify", "--data", str(data_dir)]) == 2
    err = capsys.readouterr().err
    assert "expected 7352" in err


def test_verify_missing_file_exit_2(tmp_path, capsys):
    write_dataset(make_synthetic(seed=3, n_per_class=2), tmp_path)
    (tmp_path / "test" / "X_test.txt").unlink()
    assert main(["verify", "--data", str(tmp_path), "--expect-rows", "12,12"]) == 2
    assert "MissingFile" in capsys.readouterr().err


def test_missing_data_dir_flag_and_env(monkeypatch, capsys):
    monkeypatch.delenv("HAR_DATA_DIR", raising=False)
    assert main(["verify"]) == 2
    assert "HAR_DATA_DIR" in capsys.readouterr().err


def test_env_var_supplies_data_dir(monkeypatch, data_dir, capsys):
    monkeypatch.setenv("HAR_DATA_DIR", str(data_dir))
    assert main(["verify"] + EXPECT) == 0
    capsys.readouterr()


# -------------------------------------------------------------------- eda


def test_eda_outputs_and_determinism(data_dir, tmp_path, capsys):
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    assert main(["eda", "--data", str(data_dir), "--out", str(out_a)]) == 0
    assert main(["eda", "--data", str(data_dir), "--out", str(out_b)]) == 0
    capsys.readouterr()
    for name in ("class_counts.csv", "feature_summary.csv", "threshold.json"):
        assert (out_a / name).read_bytes() == (out_b / name).read_bytes()
    counts = (out_a / "class_counts.csv").read_text().strip().split("\n")
    assert counts[0] == "split,code,name,count"
    assert len(counts) == 13  # 2 splits x 6 classes
    threshold = json.loads((out_a / "threshold.json").read_text())
    assert threshold["feature"] == "tBodyAccMag-mean()"
    assert threshold["train_accuracy"] == 1.0
    manifest = json.loads((out_a / "manifest.json").read_text())
    assert manifest["command"] == "eda"
    assert "total" in manifest["timings_seconds"]


# ------------------------------------------------------------------- tsne


def test_tsne_outputs_reproducible(data_dir, tmp_path, capsys):
    args = ["tsne", "--data", str(data_dir), "--perplexity", "8",
            "--iters", "120", "--sample-size", "48", "--seed", "0"]
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    assert main(args + ["--out", str(out_a)]) == 0
    assert main(args + ["--out", str(out_b)]) == 0
    out = capsys.readouterr().out
    assert "final KL" in out
    assert (out_a / "embedding.csv").read_bytes() == (out_b / "embedding.csv").read_bytes()
    assert (out_a / "embedding.svg").read_bytes() == (out_b / "embedding.svg").read_bytes()
    lines = (out_a / "embedding.csv").read_text().strip().split("\n")
    assert lines[0] == "x,y,label_code,label_name"
    assert len(lines) == 49
    nn = (out_a / "nn_confusion.csv").read_text().strip().split("\n")
    assert len(nn) == 7
    summary = json.loads((out_a / "tsne_summary.json").read_text())
    assert summary["sample_size"] == 48
    assert summary["perplexity_search_failures"] == 0


# ------------------------------------------------------------------ train


def test_train_tree_writes_artifacts(data_dir, tmp_path, capsys):
    out = tmp_path / "tree"
    assert main(["train", "--data", str(data_dir), "--model", "tree",
                 "--out", str(out)]) == 0
    assert "test accuracy" in capsys.readouterr().out
    for name in ("model.json", "report.json", "confusion.csv",
                 "confusion.svg", "manifest.json"):
        assert (out / name).is_file()
    report = json.loads((out / "report.json").read_text())
    assert report["model_kind"] == "tree"
    assert report["overall_accuracy"] > 0.9
    assert report["dataset_fingerprint"]["train"]["rows"] == 72


def test_train_loads_test_only_after_grid(data_dir, tmp_path, monkeypatch):
    """Hyperparameter selection must finish before the test split is read."""
    events = []
    real_load, real_grid = cli.load_split, cli.grid_search

    def spy_load(root, which):
        events.append(f"load_{which}")
        return real_load(root, which)

    def spy_grid(*args, **kwargs):
        events.append("grid")
        return real_grid(*args, **kwargs)

    monkeypatch.setattr(cli, "load_split", spy_load)
    monkeypatch.setattr(cli, "grid_search", spy_grid)
    out = tmp_path / "tree_grid"
    assert main(["train", "--data", str(data_dir), "--model", "tree",
                 "--grid", "--out", str(out)]) == 0
    assert events.index("load_train") < events.index("grid") < events.index("load_test")
    cv = json.loads((out / "cv_table.json").read_text())
    assert cv["best_params"].keys() == {"max_depth"}
    assert len(cv["table"]) == 3


def test_train_params_override(data_dir, tmp_path, capsys):
    out = tmp_path / "lr"
    assert main(["train", "--data", str(data_dir), "--model", "logreg",
                 "--params", "lam=2.0,epochs=40", "--out", str(out)]) == 0
    capsys.readouterr()
    report = json.loads((out / "report.json").read_text())
    assert report["hyperparameters"]["lam"] == 2.0
    assert report["hyperparameters"]["epochs"] == 40


def test_train_recurrent_multi_seed_best_of(data_dir, tmp_path, capsys):
    out = tmp_path / "gru"
    assert main(["train", "--data", str(data_dir), "--model", "gru",
                 "--params", "epochs=3", "--seed", "0,1", "--out", str(out)]) == 0
    capsys.readouterr()
    accs = json.loads((out / "accuracies.json").read_text())
    assert set(accs) == {"0", "1"}
    histories = json.loads((out / "histories.json").read_text())
    assert len(histories["0"]) == 3
    report = json.loads((out / "report.json").read_text())
    assert np.isclose(report["overall_accuracy"], max(accs.values()))
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["seeds"] == [0, 1]


def test_train_divergence_exit_4(data_dir, tmp_path, capsys):
    out = tmp_path / "diverge"
    with np.errstate(invalid="ignore"):
        code = main(["train", "--data", str(data_dir), "--model", "rnn",
                     "--params", "epochs=2,learning_rate=1e400",
                     "--out", str(out)])
    assert code == 4
    assert "DivergenceDetected" in capsys.readouterr().err


# --------------------------------------------------------------- evaluate


def test_evaluate_reproduces_report_bytes(data_dir, tmp_path, capsys):
    train_out, eval_out = tmp_path / "t", tmp_path / "e"
    assert main(["train", "--data", str(data_dir), "--model", "linearsvm",
                 "--out", str(train_out)]) == 0
    assert main(["evaluate", "--model", str(train_out / "model.json"),
                 "--data", str(data_dir), "--out", str(eval_out)]) == 0
    capsys.readouterr()
    assert (train_out / "report.json").read_bytes() == (eval_out / "report.json").read_bytes()
    assert (train_out / "confusion.csv").read_bytes() == (eval_out / "confusion.csv").read_bytes()


def test_evaluate_warns_on_fingerprint_mismatch(data_dir, other_data_dir,
                                                tmp_path, capsys):
    train_out, eval_out = tmp_path / "t", tmp_path / "e"
    assert main(["train", "--data", str(data_dir), "--model", "tree",
                 "--out", str(train_out)]) == 0
    assert main(["evaluate", "--model", str(train_out / "model.json"),
                 "--data", str(other_data_dir), "--out", str(eval_out)]) == 0
    err = capsys.readouterr().err
    assert "fingerprint mismatch" in err


def test_evaluate_schema_violation_exit_3(data_dir, tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"schema_version": 1, "artifact": "model"}\n')
    assert main(["evaluate", "--model", str(bad), "--data", str(data_dir),
                 "--out", str(tmp_path / "out")]) == 3
    assert "SchemaViolation" in capsys.readouterr().err


# -------------------------------------------------------------- reproduce


def test_reproduce_full_table(data_dir, tmp_path, capsys):
    out = tmp_path / "repro"
    assert main(["reproduce", "--data", str(data_dir), "--out", str(out),
                 "--seeds", "1", "--epochs", "2"]) == 0
    capsys.readouterr()
    lines = (out / "tables1_2.csv").read_text().strip().split("\n")
    assert lines[0] == ("model,LAYING,SITTING,STANDING,WALKING,"
                        "WALKING_DOWNSTAIRS,WALKING_UPSTAIRS,overall")
    assert len(lines) == 9
    models = [ln.split(",")[0] for ln in lines[1:]]
    assert models == ["logreg", "linearsvm", "rbfsvm", "tree",
                      "rnn", "lstm", "bilstm", "gru"]
    for ln in lines[1:]:
        cells = ln.split(",")[1:]
        assert len(cells) == 7
        for cell in cells:
            val = float(cell)
            assert 0.0 <= val <= 100.0
    for model in models:
        assert (out / model / "model.json").is_file()
        assert (out / model / "report.json").is_file()
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["flags"]["failures"] == {}
    assert manifest["seeds"] == [0]


def test_reproduce_ml_rows_byte_identical_across_runs(data_dir, tmp_path, capsys):
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    for out in (out_a, out_b):
        assert main(["reproduce", "--data", str(data_dir), "--out", str(out),
                     "--seeds", "1", "--epochs", "1"]) == 0
    capsys.readouterr()
    a = (out_a / "tables1_2.csv").read_text()
    b = (out_b / "tables1_2.csv").read_text()
    assert a == b
    for model in ("logreg", "linearsvm", "rbfsvm", "tree"):
        assert ((out_a / model / "report.json").read_bytes()
                == (out_b / model / "report.json").read_bytes())
        assert ((out_a / model / "model.json").read_bytes()
                == (out_b / model / "model.json").read_bytes())


def test_reproduce_explicit_seed_list(data_dir, tmp_path, capsys):
    out = tmp_path / "repro2"
    assert main(["reproduce", "--data", str(data_dir), "--out", str(out),
                 "--seeds", "5,9", "--epochs", "1"]) == 0
    capsys.readouterr()
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["seeds"] == [5, 9]


# ------------------------------------------------------------------- misc


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert "har" in capsys.readouterr().out


def test_console_script_installed():
    import shutil
    import subprocess

    exe = shutil.which("har")
    assert exe, "har entry point not on PATH"
    proc = subprocess.run([exe, "--version"], capture_output=True, text=True)
    assert proc.returncode == 0
