"""Sparse text and CSV ingestion, and the text model format."""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Optional

import numpy as np

from .data import INDEX_DTYPE, Dataset, KernelSpec, ScalerParams, SvmModel
from .solver import SolveMeta

MODEL_MAGIC = "#wssvm-model"
FORMAT_VERSION = 1


class ParseError(ValueError):
    pass


class ModelFormatError(ValueError):
    pass


def parse_sparse_lines(lines, n_cols: Optional[int] = None):
    """Parse ``label idx:val idx:val ...`` lines (1-based ascending indices)."""
    offsets, cols, vals, labels = [0], [], [], []
    max_col = 0
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        try:
            labels.append(float(tokens[0]))
        except ValueError:
            raise ParseError(f"line {lineno}: bad label {tokens[0]!r}") from None
        prev = 0
        for tok in tokens[1:]:
            idx_s, sep, val_s = tok.partition(":")
            if not sep:
                raise ParseError(f"line {lineno}: bad token {tok!r}")
            try:
                idx = int(idx_s)
            except ValueError:
                raise ParseError(f"line {lineno}: bad index {idx_s!r}") from None
            try:
                val = float(val_s)
            except ValueError:
                raise ParseError(f"line {lineno}: bad value {val_s!r}") from None
            if not math.isfinite(val):
                raise ParseError(f"line {lineno}: bad value {val_s!r}")
            if idx < 1:
                raise ParseError(f"line {lineno}: index {idx} is not 1-based")
            if idx <= prev:
                raise ParseError(f"line {lineno}: indices not ascending at {idx}")
            prev = idx
            cols.append(idx - 1)
            vals.append(val)
        max_col = max(max_col, prev)
        offsets.append(len(cols))
    if n_cols is None:
        n_cols = max_col
    elif n_cols < max_col:
        raise ParseError(f"feature index {max_col} exceeds n_cols={n_cols}")
    data = Dataset.from_arrays(len(offsets) - 1, n_cols, offsets, cols, vals)
    return data, np.asarray(labels, dtype=np.float64)


def parse_sparse_file(path, n_cols: Optional[int] = None):
    with open(path, encoding="utf-8") as fh:
        return parse_sparse_lines(fh, n_cols)


def format_sparse_row(cols, vals) -> str:
    return " ".join(f"{int(c) + 1}:{float(v)!r}" for c, v in zip(cols, vals))


def _label_str(v) -> str:
    f = float(v)
    return str(int(f)) if f.is_integer() and abs(f) < 2**53 else repr(f)


def write_sparse_file(path, data: Dataset, labels) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for i, lab in enumerate(labels):
            cols, vals = data.row(i)
            body = format_sparse_row(cols, vals)
            fh.write(f"{_label_str(lab)} {body}".rstrip() + "\n")


def _is_number(s: str) -> bool:
    try:
        float(s)
        return True
    except ValueError:
        return False


def parse_csv(path, label_column: Optional[int] = 0):
    """Dense numeric CSV to (Dataset, labels); zeros are dropped.

    A first row with any non-numeric cell is taken as a header.
    ``label_column=None`` reads every column as a feature (labels empty).
    """
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if not rows:
        return Dataset.empty(), np.zeros(0)
    start = 0
    if not all(_is_number(c.strip()) for c in rows[0]):
        start = 1
    width = len(rows[0])
    matrix = []
    for rowno, row in enumerate(rows[start:], start + 1):
        if len(row) != width:
            raise ParseError(f"row {rowno}: expected {width} cells, found {len(row)}")
        try:
            matrix.append([float(c) for c in row])
        except ValueError:
            raise ParseError(f"row {rowno}: non-numeric cell") from None
    X = np.asarray(matrix, dtype=np.float64).reshape(len(matrix), width)
    if not np.all(np.isfinite(X)):
        raise ParseError("non-finite cell")
    if label_column is None:
        return Dataset.from_dense(X), np.zeros(0)
    if not -width <= label_column < width:
        raise ParseError(f"label column {label_column} out of range for {width} columns")
    labels = X[:, label_column].copy()
    X = np.delete(X, label_column % width, axis=1)
    return Dataset.from_dense(X), labels


def load_data(path, label_column: int = 0, n_cols: Optional[int] = None):
    """Dispatch on extension: ``.csv`` is dense CSV, anything else sparse text."""
    if str(path).lower().endswith(".csv"):
        data, labels = parse_csv(path, label_column)
        if n_cols is not None and n_cols != data.n_cols:
            raise ParseError(f"CSV has {data.n_cols} feature columns, expected {n_cols}")
        return data, labels
    return parse_sparse_file(path, n_cols)


# -- model files ------------------------------------------------------------

def _floats(values) -> str:
    return " ".join(repr(float(v)) for v in values)


def _meta_dict(meta) -> dict:
    if isinstance(meta, SolveMeta):
        return {
            "iterations": meta.iterations, "gap": meta.gap, "violation": meta.violation,
            "converged": meta.converged, "iteration_cap_reached": meta.iteration_cap_reached,
        }
    return dict(meta)


def save_model(model: SvmModel, path) -> None:
    """Line-oriented UTF-8 text; every real is written with ``repr`` so it
    parses back to the identical double."""
    k = model.kernel
    out = [
        MODEL_MAGIC,
        f"format_version {FORMAT_VERSION}",
        f"task {model.task}",
        "kernel " + json.dumps({"kind": k.kind, "gamma": k.gamma, "degree": k.degree, "coef0": k.coef0}),
        "class_labels " + json.dumps([getattr(c, "item", lambda: c)() for c in model.class_labels]),
        f"n_cols {model.support_vectors.n_cols}",
    ]
    if model.scaler is None:
        out.append("scaler none")
    else:
        s = model.scaler
        out.append(f"scaler {len(s.means)}")
        out.append("means " + _floats(s.means))
        out.append("stds " + _floats(s.stds))
        out.append("constant " + " ".join("1" if c else "0" for c in s.constant))
    out.append(f"pairs {len(model.coefficients)}")
    for coef, bias, idx, meta in zip(model.coefficients, model.biases, model.sv_indices,
                                     model.training_meta or [{}] * len(model.coefficients)):
        out.append(f"pair {float(bias)!r} {len(coef)}")
        out.append("meta " + json.dumps(_meta_dict(meta)))
        out.append("sv_indices " + " ".join(str(int(i)) for i in idx))
        out.append("coefficients " + _floats(coef))
    sv = model.support_vectors
    out.append(f"support_vectors {sv.n_rows}")
    for i in range(sv.n_rows):
        out.append(format_sparse_row(*sv.row(i)))
    out.append("end")
    Path(path).write_text("\n".join(out) + "\n", encoding="utf-8")


class _Reader:
    def __init__(self, lines):
        self.lines = lines
        self.pos = 0

    def next(self, key: Optional[str] = None) -> str:
        if self.pos >= len(self.lines):
            raise ModelFormatError("truncated model file")
        line = self.lines[self.pos]
        self.pos += 1
        if key is None:
            return line
        head, _, rest = line.partition(" ")
        if head != key:
            raise ModelFormatError(f"line {self.pos}: expected {key!r}, found {head!r}")
        return rest


def _parse_floats(s: str) -> np.ndarray:
    return np.array([float(t) for t in s.split()], dtype=np.float64)


def load_model(path) -> SvmModel:
    text = Path(path).read_text(encoding="utf-8")
    lines = text.splitlines()
    if not lines:
        raise ModelFormatError("truncated model file (empty)")
    r = _Reader(lines)
    if r.next() != MODEL_MAGIC:
        raise ModelFormatError("not a wssvm model file")
    version = int(r.next("format_version"))
    if version != FORMAT_VERSION:
        raise ModelFormatError(f"unsupported format_version {version}")
    try:
        task = r.next("task")
        kd = json.loads(r.next("kernel"))
        kernel = KernelSpec(kd["kind"], kd["gamma"], kd["degree"], kd["coef0"])
        class_labels = json.loads(r.next("class_labels"))
        n_cols = int(r.next("n_cols"))
        sc = r.next("scaler")
        scaler = None
        if sc != "none":
            means = _parse_floats(r.next("means"))
            stds = _parse_floats(r.next("stds"))
            constant = np.array([t == "1" for t in r.next("constant").split()], dtype=bool)
            scaler = ScalerParams(means, stds, constant)
        n_pairs = int(r.next("pairs"))
        coefs, biases, idxs, metas = [], [], [], []
        for _ in range(n_pairs):
            bias_s, count_s = r.next("pair").split()
            metas.append(json.loads(r.next("meta")))
            idx = np.array([int(t) for t in r.next("sv_indices").split()], dtype=INDEX_DTYPE)
            coef = _parse_floats(r.next("coefficients"))
            if len(coef) != int(count_s) or len(idx) != int(count_s):
                raise ModelFormatError("pair size disagrees with its header")
            coefs.append(coef)
            biases.append(float(bias_s))
            idxs.append(idx)
        n_sv = int(r.next("support_vectors"))
        sv_lines = [r.next() for _ in range(n_sv)]
        if r.next() != "end":
            raise ModelFormatError("missing end marker")
    except (ValueError, KeyError, json.JSONDecodeError) as exc:
        if isinstance(exc, ModelFormatError):
            raise
        raise ModelFormatError(f"corrupt model file: {exc}") from None
    sv, _ = parse_sparse_lines(["0 " + ln for ln in sv_lines], n_cols=n_cols)
    if sv.n_rows != n_sv:
        raise ModelFormatError("support vector count mismatch")
    return SvmModel(task, kernel, sv, coefs, biases, idxs, class_labels, scaler, metas)
