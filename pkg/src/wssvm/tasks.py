"""Dual problems for classification and ε-regression, model assembly, and
prediction."""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Optional, Sequence

import numpy as np

from ._backend import get_backend
from .data import INDEX_DTYPE, Dataset, KernelSpec, Problem, SvmModel, TrainConfig
from .kernels import KernelRowCache, cross_kernel_row
from .preprocess import apply_scaler, fit_scaler, unique_in_order
from .solver import train_dual

logger = logging.getLogger(__name__)

PRUNE_REL = 1e-12


class DegenerateLabels(ValueError):
    pass


def _rows(data: Dataset, rows) -> np.ndarray:
    if rows is None:
        return np.arange(data.n_rows, dtype=INDEX_DTYPE)
    return np.asarray(rows, dtype=INDEX_DTYPE)


def build_svc_problem(data: Dataset, labels, kernel: KernelSpec, C: float, rows=None,
                      cache: Optional[KernelRowCache] = None) -> Problem:
    """Classification dual: y = labels, p = −1 for every row."""
    rows = _rows(data, rows)
    y = np.asarray(labels, dtype=np.float64)
    if len(y) != len(rows):
        raise ValueError(f"{len(y)} labels for {len(rows)} rows")
    if not np.all(np.abs(y) == 1):
        raise ValueError("labels must be +1 or -1")
    if not (np.any(y > 0) and np.any(y < 0)):
        raise DegenerateLabels("degenerate labels: both classes must be present")
    return Problem(kernel, data, y, -np.ones(len(y)), float(C), rows, 1, cache)


def build_svr_problem(data: Dataset, z, kernel: KernelSpec, C: float, epsilon: float, rows=None,
                      cache: Optional[KernelRowCache] = None) -> Problem:
    """ε-regression as a doubled classification-shaped dual.

    Positions 0..l−1 are the positive copy (y = +1, p = ε − z) and l..2l−1
    the negative copy (y = −1, p = ε + z); both copies map back to the same
    dataset rows, which gives Q the [[K, −K], [−K, K]] block structure.
    """
    rows = _rows(data, rows)
    z = np.asarray(z, dtype=np.float64)
    if len(z) != len(rows):
        raise ValueError(f"{len(z)} targets for {len(rows)} rows")
    if epsilon < 0:
        raise ValueError("epsilon must be >= 0")
    l = len(rows)
    y = np.concatenate([np.ones(l), -np.ones(l)])
    p = np.concatenate([epsilon - z, epsilon + z])
    return Problem(kernel, data, y, p, float(C), rows, 2, cache)


def binary_signs(class_labels: list) -> list[float]:
    """Sign attached to each of the two classes.

    Labels that are literally −1 and +1 keep their own sign; otherwise the
    first-seen class is +1.
    """
    try:
        if sorted(float(c) for c in class_labels) == [-1.0, 1.0]:
            return [float(c) for c in class_labels]
    except (TypeError, ValueError):
        pass
    return [1.0, -1.0]


def _prune(coef: np.ndarray, C: float) -> np.ndarray:
    return np.flatnonzero(np.abs(coef) > PRUNE_REL * C)


def _solve_binary(data, rows, signs, kernel, config):
    problem = build_svc_problem(data, signs, kernel, config.C, rows, KernelRowCache(config.cache_bytes))
    alpha, bias, meta = train_dual(problem, config)
    coef = problem.y * alpha
    keep = _prune(coef, config.C)
    return rows[keep], coef[keep], bias, meta


def train(data: Dataset, targets, kernel: KernelSpec = KernelSpec(), config: TrainConfig = TrainConfig(),
          task: str = "svc", scale: bool = False, rows: Optional[Sequence[int]] = None,
          threads: int = 1) -> SvmModel:
    """Fit a model on ``data`` (optionally only on ``rows`` of it).

    ``task="svc"`` trains a binary model for two classes and one-vs-one
    pairs for more; ``task="svr"`` trains ε-regression.  ``targets`` has one
    entry per selected row.
    """
    rows = _rows(data, rows)
    targets = list(targets) if task == "svc" else np.asarray(targets, dtype=np.float64)
    if len(targets) == data.n_rows and len(rows) != data.n_rows:
        targets = [targets[i] for i in rows] if task == "svc" else targets[rows]
    if len(targets) != len(rows):
        raise ValueError(f"{len(targets)} targets for {len(rows)} rows")
    scaler = None
    if scale:
        scaler = fit_scaler(data, rows if len(rows) != data.n_rows else None)
        data = apply_scaler(scaler, data.take(rows) if len(rows) != data.n_rows else data)
        rows = np.arange(data.n_rows, dtype=INDEX_DTYPE)
    kernel = kernel.resolved(data.n_cols)

    if task == "svr":
        problem = build_svr_problem(data, targets, kernel, config.C, config.epsilon_tube, rows,
                                    KernelRowCache(config.cache_bytes))
        alpha, bias, meta = train_dual(problem, config)
        l = len(rows)
        coef = alpha[:l] - alpha[l:]
        keep = _prune(coef, config.C)
        return SvmModel(
            "epsilon_svr", kernel, data.take(rows[keep]), [coef[keep]], [bias],
            [np.arange(len(keep), dtype=INDEX_DTYPE)], [], scaler, [meta],
        )
    if task != "svc":
        raise ValueError(f"unknown task {task!r}")

    classes = unique_in_order(targets)
    if len(classes) < 2:
        raise DegenerateLabels("degenerate labels: need at least two classes")
    if len(classes) == 2:
        signs = binary_signs(classes)
        sign_of = dict(zip(classes, signs))
        y = [sign_of[t] for t in targets]
        sv_rows, coef, bias, meta = _solve_binary(data, rows, y, kernel, config)
        return SvmModel(
            "binary_svc", kernel, data.take(sv_rows), [coef], [bias],
            [np.arange(len(sv_rows), dtype=INDEX_DTYPE)], classes, scaler, [meta],
        )

    label_arr = np.empty(len(targets), dtype=object)
    label_arr[:] = targets
    jobs = []
    for a in range(len(classes)):
        for b in range(a + 1, len(classes)):
            in_a = label_arr == classes[a]
            in_b = label_arr == classes[b]
            sel = np.flatnonzero(in_a | in_b)
            jobs.append((data, rows[sel], np.where(in_a[sel], 1.0, -1.0), kernel, config))
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            results = list(pool.map(lambda j: _solve_binary(*j), jobs))
    else:
        results = [_solve_binary(*j) for j in jobs]
    pooled = np.unique(np.concatenate([r[0] for r in results])) if results else np.zeros(0, INDEX_DTYPE)
    return SvmModel(
        "multiclass_ovo", kernel, data.take(pooled),
        [r[1] for r in results], [r[2] for r in results],
        [np.searchsorted(pooled, r[0]).astype(INDEX_DTYPE) for r in results],
        classes, scaler, [r[3] for r in results],
    )


def decision_values(model: SvmModel, data: Dataset) -> np.ndarray:
    """f(x) = Σ_s coef_s K(sv_s, x) + b for every row and every pair.

    Shape (n_rows, n_pairs).  The scaler, when present, is applied first.
    """
    if data.n_cols != model.n_features:
        raise ValueError(f"column-count mismatch: model has {model.n_features} features, data has {data.n_cols}")
    if model.scaler is not None:
        data = apply_scaler(model.scaler, data)
    be = get_backend()
    sv = model.support_vectors
    all_sv = np.arange(sv.n_rows, dtype=INDEX_DTYPE)
    out = np.empty((data.n_rows, len(model.coefficients)))
    for q in range(data.n_rows):
        krow = cross_kernel_row(data, q, sv, all_sv, model.kernel) if sv.n_rows else np.zeros(0)
        for k, (coef, bias, idx) in enumerate(zip(model.coefficients, model.biases, model.sv_indices)):
            out[q, k] = be.seq_dot(np.ascontiguousarray(coef), np.ascontiguousarray(krow[idx])) + bias
    return out


def predict(model: SvmModel, data: Dataset, return_decision: bool = False):
    """Labels (classification) or real values (regression).

    Binary: sign of f, with f == 0 going to the first class label.
    Multiclass: one-vs-one votes, ties to the earliest class label.
    """
    dv = decision_values(model, data)
    if model.task == "epsilon_svr":
        pred = dv[:, 0].copy()
    elif model.task == "binary_svc":
        signs = binary_signs(model.class_labels)
        pos = model.class_labels[signs.index(1.0)]
        neg = model.class_labels[signs.index(-1.0)]
        first = model.class_labels[0]
        pred = [pos if f > 0 else neg if f < 0 else first for f in dv[:, 0]]
    else:
        k = len(model.class_labels)
        pairs = [(a, b) for a in range(k) for b in range(a + 1, k)]
        pred = []
        for row in dv:
            votes = np.zeros(k, dtype=int)
            for (a, b), f in zip(pairs, row):
                votes[a if f >= 0 else b] += 1
            pred.append(model.class_labels[int(np.argmax(votes))])
    return (pred, dv) if return_decision else pred
