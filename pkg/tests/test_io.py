import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wssvm.data import Dataset, KernelSpec, TrainConfig
from wssvm.io import (
    ModelFormatError, ParseError, load_data, load_model, parse_csv, parse_sparse_file, parse_sparse_lines,
    save_model, write_sparse_file,
)
from wssvm.tasks import predict, train

from conftest import blobs, random_dataset


# -- sparse text ------------------------------------------------------------

def test_sparse_single_row():
    d, labels = parse_sparse_lines(["1 3:2.5 7:1.0"])
    assert d.n_rows == 1 and d.nnz == 2 and d.n_cols == 7
    assert list(d.col_indices) == [2, 6] and list(d.values) == [2.5, 1.0]
    assert list(labels) == [1.0]


def test_sparse_two_rows_signed_labels():
    d, labels = parse_sparse_lines(["-1 1:0.5", "+1 2:0.5"])
    assert (d.n_rows, d.n_cols) == (2, 2)
    assert list(labels) == [-1.0, 1.0]
    np.testing.assert_array_equal(d.to_dense(), [[0.5, 0.0], [0.0, 0.5]])


def test_sparse_blank_lines_and_comments():
    d, labels = parse_sparse_lines(["", "2 1:1 # note", "   ", "3"])
    assert d.n_rows == 2 and list(labels) == [2.0, 3.0] and d.nnz == 1


@pytest.mark.parametrize("lines, message", [
    (["1 5:a"], "line 1: bad value"),
    (["1 1:1", "1 3:1 2:1"], "line 2: indices not ascending"),
    (["1 2:1 2:1"], "line 1: indices not ascending"),
    (["1 0:1"], "line 1: index 0"),
    (["x 1:1"], "line 1: bad label"),
    (["1 1:1", "", "1 q:1"], "line 3: bad index"),
    (["1 1=2"], "line 1: bad token"),
    (["1 1:nan"], "line 1: bad value"),
])
def test_sparse_errors(lines, message):
    with pytest.raises(ParseError, match=message):
        parse_sparse_lines(lines)


def test_sparse_n_cols_override():
    d, _ = parse_sparse_lines(["1 2:1"], n_cols=5)
    assert d.n_cols == 5
    with pytest.raises(ParseError):
        parse_sparse_lines(["1 6:1"], n_cols=5)


def test_sparse_file_round_trip_examples(tmp_path):
    path = tmp_path / "a.txt"
    d = Dataset.from_dense([[0.0, 1.5, 0.0], [2.0, 0.0, -0.1], [0.0, 0.0, 0.0]])
    write_sparse_file(path, d, [1, -1, 0.5])
    assert path.read_text().splitlines() == ["1 2:1.5", "-1 1:2.0 3:-0.1", "0.5"]
    back, labels = parse_sparse_file(path, n_cols=3)
    assert back.same_content(d) and list(labels) == [1.0, -1.0, 0.5]


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10_000))
def test_sparse_write_parse_identity(tmp_path_factory, seed):
    rng = np.random.default_rng(seed)
    d, _ = random_dataset(rng, int(rng.integers(1, 15)), int(rng.integers(1, 8)), density=0.5)
    labels = rng.standard_normal(d.n_rows)
    path = tmp_path_factory.mktemp("rt") / "d.txt"
    write_sparse_file(path, d, labels)
    back, back_labels = parse_sparse_file(path, n_cols=d.n_cols)
    assert back.same_content(d)
    np.testing.assert_array_equal(back_labels, labels)


# -- CSV ---------------------------------------------------------------------

def test_csv_numeric_grid(tmp_path):
    p = tmp_path / "g.csv"
    p.write_text("1,2,0\n-1,0,4\n1,5,6\n")
    d, labels = parse_csv(p, 0)
    assert (d.n_rows, d.n_cols) == (3, 2) and d.nnz == 4
    assert list(labels) == [1.0, -1.0, 1.0]
    np.testing.assert_array_equal(d.to_dense(), [[2, 0], [0, 4], [5, 6]])


def test_csv_header_skipped_and_label_column(tmp_path):
    p = tmp_path / "h.csv"
    p.write_text("x,y,label\n1,2,7\n3,4,8\n")
    d, labels = parse_csv(p, 2)
    assert d.n_rows == 2 and list(labels) == [7.0, 8.0]
    np.testing.assert_array_equal(d.to_dense(), [[1, 2], [3, 4]])


def test_csv_errors(tmp_path):
    p = tmp_path / "r.csv"
    p.write_text("1,2,3\n4,5\n")
    with pytest.raises(ParseError, match="row 2"):
        parse_csv(p)
    p.write_text("1,2\n3,abc\n")
    with pytest.raises(ParseError, match="row 2: non-numeric"):
        parse_csv(p)


def test_load_data_dispatches(tmp_path):
    c = tmp_path / "a.csv"
    c.write_text("1,0.5\n-1,2\n")
    t = tmp_path / "a.txt"
    t.write_text("1 1:0.5\n-1 1:2\n")
    dc, lc = load_data(c)
    dt, lt = load_data(t)
    assert dc.same_content(dt) and list(lc) == list(lt)


# -- model files --------------------------------------------------------------------

def probes(n_cols, seed=0, n=100):
    return Dataset.from_dense(np.random.default_rng(seed).normal(0, 3, (n, n_cols)))


def assert_same_predictions(model, path, data):
    save_model(model, path)
    loaded = load_model(path)
    p1, d1 = predict(model, data, return_decision=True)
    p2, d2 = predict(loaded, data, return_decision=True)
    assert list(p1) == list(p2)
    assert np.array_equal(d1, d2)
    return loaded


def test_two_point_model_round_trip(tmp_path):
    m = train(Dataset.from_dense([[-1.0], [1.0]]), [-1.0, 1.0], KernelSpec("linear"), TrainConfig())
    loaded = assert_same_predictions(m, tmp_path / "m", probes(1))
    assert loaded.class_labels == [-1.0, 1.0] and loaded.task == "binary_svc"
    np.testing.assert_array_equal(loaded.coef, m.coef)
    assert loaded.bias == m.bias and loaded.kernel == m.kernel


def test_multiclass_scaled_round_trip(tmp_path):
    X, y = blobs([(0, 0, 1), (4, 0, 1), (0, 4, 1)], 10, 1.0, seed=3)
    labels = [["red", "green", "blue"][int(v)] for v in y]
    m = train(Dataset.from_dense(X), labels, KernelSpec("poly", degree=2, coef0=1.0), TrainConfig(), scale=True)
    loaded = assert_same_predictions(m, tmp_path / "m", probes(3, seed=1))
    assert loaded.class_labels == ["red", "green", "blue"]
    np.testing.assert_array_equal(loaded.scaler.means, m.scaler.means)
    np.testing.assert_array_equal(loaded.scaler.constant, m.scaler.constant)
    assert loaded.support_vectors.same_content(m.support_vectors)
    for a, b in zip(loaded.sv_indices, m.sv_indices):
        np.testing.assert_array_equal(a, b)


def test_svr_round_trip(tmp_path):
    rng = np.random.default_rng(4)
    X = rng.standard_normal((30, 4))
    z = np.sin(X[:, 0]) + 0.1 * X[:, 1]
    m = train(Dataset.from_dense(X), z, KernelSpec("rbf"), TrainConfig(C=3.0), task="svr")
    assert m.n_support > 0
    assert_same_predictions(m, tmp_path / "m", probes(4, seed=2))


def test_future_version_rejected(tmp_path):
    m = train(Dataset.from_dense([[-1.0], [1.0]]), [-1.0, 1.0], KernelSpec("linear"), TrainConfig())
    p = tmp_path / "m"
    save_model(m, p)
    p.write_text(p.read_text().replace("format_version 1", "format_version 2"))
    with pytest.raises(ModelFormatError, match="unsupported format_version"):
        load_model(p)


def test_empty_and_truncated_files(tmp_path):
    p = tmp_path / "e"
    p.write_text("")
    with pytest.raises(ModelFormatError, match="truncated"):
        load_model(p)
    m = train(Dataset.from_dense([[-1.0], [1.0]]), [-1.0, 1.0], KernelSpec("linear"), TrainConfig())
    save_model(m, p)
    lines = p.read_text().splitlines()
    p.write_text("\n".join(lines[:-3]) + "\n")
    with pytest.raises(ModelFormatError, match="truncated"):
        load_model(p)


def test_not_a_model_file(tmp_path):
    p = tmp_path / "x"
    p.write_text("1 1:1\n")
    with pytest.raises(ModelFormatError):
        load_model(p)
