"""Kernel evaluation on sparse rows, kernel rows for dual problems, and the
LRU row cache that backs them."""
from __future__ import annotations

import logging
from collections import OrderedDict
from typing import Optional, Sequence

import numpy as np

from ._backend import get_backend
from .data import INDEX_DTYPE, Dataset, KernelSpec, Problem

logger = logging.getLogger(__name__)

GRAM_CAP = 2000


class KernelError(ArithmeticError):
    pass


def _gamma(spec: KernelSpec) -> float:
    if spec.gamma is None:
        if spec.kind == "linear":
            return 1.0
        raise ValueError("kernel gamma is unset; call spec.resolved(n_cols) first")
    return float(spec.gamma)


def kernel_eval(a, b, spec: KernelSpec, names=("a", "b")) -> float:
    """K(a, b) for two sparse rows given as ``(indices, values)`` pairs.

    Column indices must be sorted ascending; the dot product is a
    two-pointer merge so the summation order is fixed by column order.
    """
    be = get_backend()
    ai, av = (np.asarray(v) for v in a)
    bi, bv = (np.asarray(v) for v in b)
    ai = ai.astype(INDEX_DTYPE, copy=False)
    bi = bi.astype(INDEX_DTYPE, copy=False)
    av = av.astype(np.float64, copy=False)
    bv = bv.astype(np.float64, copy=False)
    sq_a = sq_b = 0.0
    if spec.kind == "rbf":
        sq_a = be.sparse_dot(ai, av, ai, av)
        sq_b = be.sparse_dot(bi, bv, bi, bv)
    value = be.kernel_value(ai, av, sq_a, bi, bv, sq_b, spec.code, _gamma(spec), float(spec.coef0), spec.degree)
    if not np.isfinite(value):
        raise KernelError(f"non-finite {spec.kind} kernel value for rows {names[0]} and {names[1]}")
    return value


class KernelRowCache:
    """Least-recently-used store of kernel rows keyed by dataset row."""

    def __init__(self, capacity_bytes: int = 256 * 2**20):
        self.capacity_bytes = int(capacity_bytes)
        self._rows: OrderedDict[int, np.ndarray] = OrderedDict()
        self.used_bytes = 0
        self.hits = 0
        self.misses = 0

    def __len__(self):
        return len(self._rows)

    def __contains__(self, key):
        return key in self._rows

    def get(self, key: int) -> Optional[np.ndarray]:
        row = self._rows.get(key)
        if row is None:
            self.misses += 1
            return None
        self._rows.move_to_end(key)
        self.hits += 1
        return row

    def put(self, key: int, row: np.ndarray) -> None:
        size = row.nbytes
        if size > self.capacity_bytes:
            return
        old = self._rows.pop(key, None)
        if old is not None:
            self.used_bytes -= old.nbytes
        while self._rows and self.used_bytes + size > self.capacity_bytes:
            _, evicted = self._rows.popitem(last=False)
            self.used_bytes -= evicted.nbytes
        row.setflags(write=False)
        self._rows[key] = row
        self.used_bytes += size

    def resize(self, capacity_bytes: int) -> None:
        self.capacity_bytes = int(capacity_bytes)
        while self._rows and self.used_bytes > self.capacity_bytes:
            _, evicted = self._rows.popitem(last=False)
            self.used_bytes -= evicted.nbytes

    def clear(self) -> None:
        self._rows.clear()
        self.used_bytes = 0


def cross_kernel_row(query: Dataset, q: int, data: Dataset, targets: np.ndarray, spec: KernelSpec) -> np.ndarray:
    """[K(query_q, data_t) for t in targets] without touching any cache."""
    be = get_backend()
    qi, qv = query.row(q)
    sq_q = float(query.sq_norms[q]) if spec.kind == "rbf" else 0.0
    sq = data.sq_norms if spec.kind == "rbf" else np.zeros(data.n_rows)
    targets = np.ascontiguousarray(targets, dtype=INDEX_DTYPE)
    out = np.empty(len(targets))
    n_cols = max(query.n_cols, data.n_cols, int(qi.max()) + 1 if len(qi) else 0)
    be.kernel_row(
        qi, qv, sq_q, data.row_offsets, data.col_indices, data.values, sq, targets,
        spec.code, _gamma(spec), float(spec.coef0), spec.degree, n_cols, out,
    )
    if not np.all(np.isfinite(out)):
        bad = int(targets[np.flatnonzero(~np.isfinite(out))[0]])
        raise KernelError(f"non-finite {spec.kind} kernel value for rows {q} and {bad}")
    return out


def base_kernel_row(problem: Problem, row: int) -> np.ndarray:
    """K(x_row, x_r) for every r in ``problem.rows``, through the cache.

    The cached vector is unsigned; sign vectors are applied by callers.
    """
    cached = problem.cache.get(row)
    if cached is not None:
        return cached
    out = cross_kernel_row(problem.data, row, problem.data, problem.rows, problem.kernel)
    problem.cache.put(row, out)
    return out


def kernel_row(problem: Problem, i: int, targets: Sequence[int]) -> np.ndarray:
    """[Q_ij for j in targets] with Q_ij = y_i y_j K(x_map(i), x_map(j))."""
    targets = np.asarray(targets, dtype=INDEX_DTYPE)
    if len(targets) == 0:
        return np.zeros(0)
    if not 0 <= i < problem.m or targets.min() < 0 or targets.max() >= problem.m:
        raise IndexError("dual index out of range")
    krow = base_kernel_row(problem, int(problem.index_map(i)))
    return problem.y[i] * problem.y[targets] * krow[targets % problem.n_base]


def gram_matrix(data: Dataset, spec: KernelSpec, cap: int = GRAM_CAP) -> np.ndarray:
    """Dense kernel matrix; upper triangle computed, lower mirrored."""
    if data.n_rows > cap:
        raise ValueError(f"gram_matrix limited to {cap} rows, got {data.n_rows}")
    spec = spec.resolved(data.n_cols)
    l = data.n_rows
    K = np.empty((l, l))
    for i in range(l):
        K[i, i:] = cross_kernel_row(data, i, data, np.arange(i, l), spec)
        K[i:, i] = K[i, i:]
    return K


def problem_gram(problem: Problem) -> np.ndarray:
    """Dense m×m Q of a (small) problem, signs included."""
    base = gram_matrix(problem.data.take(problem.rows), problem.kernel, cap=max(GRAM_CAP, problem.n_base))
    idx = np.arange(problem.m) % problem.n_base
    return np.outer(problem.y, problem.y) * base[np.ix_(idx, idx)]
