import io
import subprocess
import sys

import numpy as np
import pytest

from wssvm.cli import main
from wssvm.data import Dataset
from wssvm.io import write_sparse_file

from conftest import blobs


def run(*argv):
    out = io.StringIO()
    code = main(list(argv), out=out)
    return code, out.getvalue()


@pytest.fixture
def separable(tmp_path):
    X, y = blobs([(-3, -3), (3, 3)], 15, 0.7, seed=0)
    labels = np.where(y == 0, 1.0, -1.0)
    path = tmp_path / "a.txt"
    write_sparse_file(path, Dataset.from_dense(X), labels)
    return path, labels


def read_lines(path):
    return path.read_text().splitlines()


def test_train_predict_reproduces_labels(tmp_path, separable):
    data, labels = separable
    model, pred = tmp_path / "m", tmp_path / "p"
    assert run("train", "--data", str(data), "--task", "svc", "--kernel", "rbf", "--C", "1",
               "--model-out", str(model))[0] == 0
    code, text = run("predict", "--model", str(model), "--data", str(data), "--out", str(pred))
    assert code == 0 and "wrote 30 predictions" in text
    lines = read_lines(pred)
    assert len(lines) == len(labels)
    assert [float(v) for v in lines] == list(labels)


def test_predict_with_decision_values(tmp_path, separable):
    data, labels = separable
    model, pred = tmp_path / "m", tmp_path / "p"
    run("train", "--data", str(data), "--kernel", "linear", "--model-out", str(model))
    assert run("predict", "--model", str(model), "--data", str(data), "--out", str(pred), "--decision")[0] == 0
    for line, lab in zip(read_lines(pred), labels):
        label, f = line.split("\t")
        assert float(label) == lab and np.sign(float(f)) == lab


def test_regression_csv(tmp_path):
    rng = np.random.default_rng(0)
    X = rng.standard_normal((25, 2))
    z = X @ [1.0, -2.0]
    csv = tmp_path / "r.csv"
    csv.write_text("target,a,b\n" + "".join(f"{t},{a},{b}\n" for t, (a, b) in zip(z.tolist(), X.tolist())))
    model, pred = tmp_path / "m", tmp_path / "p"
    assert run("train", "--data", str(csv), "--task", "svr", "--kernel", "linear", "--C", "10",
               "--epsilon", "0.01", "--tol", "1e-6", "--scale", "--model-out", str(model))[0] == 0
    assert run("predict", "--model", str(model), "--data", str(csv), "--out", str(pred))[0] == 0
    got = np.array([float(v) for v in read_lines(pred)])
    assert np.max(np.abs(got - z)) <= 0.01 + 1e-3


def test_outputs_are_byte_identical(tmp_path, separable):
    data, _ = separable
    outs = []
    for tag in ("a", "b"):
        model, pred, tune = tmp_path / f"m{tag}", tmp_path / f"p{tag}", tmp_path / f"t{tag}"
        run("train", "--data", str(data), "--kernel", "poly", "--degree", "2", "--scale", "--model-out", str(model))
        run("predict", "--model", str(model), "--data", str(data), "--out", str(pred), "--decision")
        code, cv = run("cv", "--data", str(data), "--folds", "3", "--seed", "4")
        run("tune", "--data", str(data), "--grid-C", "0.1", "--grid-C", "1", "--grid-gamma", "0.5",
            "--folds", "3", "--out", str(tune))
        outs.append((model.read_bytes(), pred.read_bytes(), cv, tune.read_bytes()))
    assert outs[0] == outs[1]


def test_cv_output(separable):
    data, _ = separable
    code, text = run("cv", "--data", str(data), "--folds", "5", "--seed", "0")
    lines = text.splitlines()
    assert code == 0 and len(lines) == 6
    assert lines[-1] == "mean\taccuracy=1.0"


def test_tune_output(tmp_path, separable):
    data, _ = separable
    table = tmp_path / "t.tsv"
    code, text = run("tune", "--data", str(data), "--grid-C", "1e-6", "--grid-C", "1", "--grid-C", "10",
                     "--grid-gamma", "0.1", "--grid-gamma", "1", "--folds", "3", "--out", str(table))
    assert code == 0
    rows = read_lines(table)
    assert rows[0] == "C\tgamma\tepsilon\tdegree\tcoef0\taccuracy" and len(rows) == 1 + 6
    assert text.splitlines()[-1].startswith("best\tC=")


def test_exit_codes(tmp_path, separable, capsys):
    data, _ = separable
    assert run("train", "--data", str(data), "--bogus", "1", "--model-out", "m")[0] == 2
    assert run("train", "--data", str(data))[0] == 2
    assert run()[0] == 2
    assert run("frobnicate")[0] == 2
    assert run("train", "--data", str(tmp_path / "missing.txt"), "--model-out", str(tmp_path / "m"))[0] == 1
    bad = tmp_path / "bad.txt"
    bad.write_text("1 5:a\n")
    assert run("train", "--data", str(bad), "--model-out", str(tmp_path / "m"))[0] == 1
    assert "line 1: bad value" in capsys.readouterr().err
    single = tmp_path / "one.txt"
    single.write_text("1 1:1\n1 1:2\n")
    assert run("train", "--data", str(single), "--model-out", str(tmp_path / "m"))[0] == 1
    assert "degenerate" in capsys.readouterr().err


def test_predict_column_mismatch_is_runtime_error(tmp_path, separable):
    data, _ = separable
    model = tmp_path / "m"
    run("train", "--data", str(data), "--model-out", str(model))
    wide = tmp_path / "w.txt"
    wide.write_text("1 1:1 9:1\n")
    assert run("predict", "--model", str(model), "--data", str(wide), "--out", str(tmp_path / "p"))[0] == 1


@pytest.mark.parametrize("task, samples, features", [("svr", 113978, 120), ("svc", 68971, 501)])
def test_bench_accepts_reference_scale(task, samples, features):
    code, text = run("bench", "--task", task, "--samples", str(samples), "--features", str(features), "--dry-run")
    assert code == 0
    assert "oracle: skipped" in text and "reference" in text


def test_small_bench_with_tsv(tmp_path):
    tsv = tmp_path / "b.tsv"
    code, text = run("bench", "--task", "svc", "--samples", "200", "--features", "5", "--tsv", str(tsv))
    assert code == 0 and "oracle-pg" in text and "speedup=" in text
    head, row = read_lines(tsv)
    assert head.startswith("# task") and len(row.split("\t")) == len(head.split("\t"))


def test_bench_svr_skips_oracle_above_cap():
    code, text = run("bench", "--task", "svr", "--samples", "300", "--features", "4", "--oracle-max", "100")
    assert code == 0 and "skipped" in text


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "wssvm", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0 and "train" in proc.stdout
    proc = subprocess.run([sys.executable, "-m", "wssvm", "train", "--nope"], capture_output=True, text=True)
    assert proc.returncode == 2 and "usage" in proc.stderr
