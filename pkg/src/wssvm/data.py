"""Shared domain types: sparse datasets, kernel/training settings, dual
problems and trained models.

Everything here is plain data plus invariant checks. Arrays are held by
reference; constructing a :class:`Problem` or slicing rows through an index
array never copies the underlying CSR buffers.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Optional, Sequence

import numpy as np

INDEX_DTYPE = np.intp

KERNEL_KINDS = ("linear", "polynomial", "rbf", "sigmoid")
KERNEL_ALIASES = {"poly": "polynomial", "radial": "rbf", "gaussian": "rbf"}
TASKS = ("binary_svc", "multiclass_ovo", "epsilon_svr")


class DatasetError(ValueError):
    """A Dataset violates one of its structural invariants."""


@dataclass(frozen=True, eq=False)
class Dataset:
    """Row-major sparse matrix in CSR layout."""

    n_rows: int
    n_cols: int
    row_offsets: np.ndarray
    col_indices: np.ndarray
    values: np.ndarray

    @classmethod
    def from_arrays(cls, n_rows, n_cols, row_offsets, col_indices, values) -> "Dataset":
        # asarray keeps caller buffers when dtypes already match
        return cls(
            int(n_rows),
            int(n_cols),
            np.asarray(row_offsets, dtype=INDEX_DTYPE),
            np.asarray(col_indices, dtype=INDEX_DTYPE),
            np.asarray(values, dtype=np.float64),
        )

    @classmethod
    def from_dense(cls, X) -> "Dataset":
        """Convert a dense 2-D array, dropping exact zeros."""
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X.reshape(-1, 1)
        if X.ndim != 2:
            raise DatasetError("dense input must be 2-D")
        rows, cols = np.nonzero(X)
        offsets = np.zeros(X.shape[0] + 1, dtype=INDEX_DTYPE)
        np.cumsum(np.bincount(rows, minlength=X.shape[0]), out=offsets[1:])
        return cls(X.shape[0], X.shape[1], offsets, cols.astype(INDEX_DTYPE), X[rows, cols])

    @classmethod
    def empty(cls, n_cols: int = 0) -> "Dataset":
        return cls.from_arrays(0, n_cols, [0], [], [])

    @property
    def nnz(self) -> int:
        return int(self.row_offsets[-1]) if len(self.row_offsets) else 0

    def row(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        """Column indices and values of row ``i`` (views, not copies)."""
        lo, hi = self.row_offsets[i], self.row_offsets[i + 1]
        return self.col_indices[lo:hi], self.values[lo:hi]

    @cached_property
    def sq_norms(self) -> np.ndarray:
        """Squared Euclidean norm of every row, summed in column order."""
        from ._backend import get_backend

        return get_backend().row_sq_norms(self.row_offsets, self.col_indices, self.values)

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.n_rows, self.n_cols))
        rows = np.repeat(np.arange(self.n_rows), np.diff(self.row_offsets))
        out[rows, self.col_indices] = self.values
        return out

    def take(self, rows: Sequence[int]) -> "Dataset":
        """New dataset holding a copy of the selected rows, in the given order."""
        rows = np.asarray(rows, dtype=INDEX_DTYPE)
        starts = self.row_offsets[rows]
        lengths = self.row_offsets[rows + 1] - starts
        offsets = np.zeros(len(rows) + 1, dtype=INDEX_DTYPE)
        np.cumsum(lengths, out=offsets[1:])
        if offsets[-1]:
            gather = np.repeat(starts - offsets[:-1], lengths) + np.arange(offsets[-1])
        else:
            gather = np.zeros(0, dtype=INDEX_DTYPE)
        return Dataset(
            len(rows), self.n_cols, offsets, self.col_indices[gather], self.values[gather]
        )

    def with_n_cols(self, n_cols: int) -> "Dataset":
        if self.nnz and n_cols <= int(self.col_indices.max()):
            raise DatasetError(f"n_cols={n_cols} too small for column index {int(self.col_indices.max())}")
        return Dataset(self.n_rows, n_cols, self.row_offsets, self.col_indices, self.values)

    def same_content(self, other: "Dataset") -> bool:
        return (
            self.n_rows == other.n_rows
            and self.n_cols == other.n_cols
            and np.array_equal(self.row_offsets, other.row_offsets)
            and np.array_equal(self.col_indices, other.col_indices)
            and np.array_equal(self.values, other.values)
        )


def validate_dataset(raw: Dataset) -> Dataset:
    """Return ``raw`` unchanged if every CSR invariant holds, else raise.

    The scan is O(nnz); the error names the first offending row.
    """
    offsets, cols, vals = raw.row_offsets, raw.col_indices, raw.values
    if raw.n_rows < 0 or raw.n_cols < 0:
        raise DatasetError("negative shape")
    if len(offsets) != raw.n_rows + 1:
        raise DatasetError(f"row_offsets has length {len(offsets)}, expected {raw.n_rows + 1}")
    if offsets[0] != 0:
        raise DatasetError("row_offsets[0] must be 0")
    steps = np.diff(offsets)
    bad = np.flatnonzero(steps < 0)
    if len(bad):
        raise DatasetError(f"non-decreasing offsets violated at row {int(bad[0])}")
    if offsets[-1] != len(vals) or len(vals) != len(cols):
        raise DatasetError(
            f"row_offsets[-1]={int(offsets[-1])} but {len(vals)} values and {len(cols)} column indices"
        )
    if len(cols):
        row_of = np.repeat(np.arange(raw.n_rows), steps)
        out_of_range = np.flatnonzero((cols < 0) | (cols >= raw.n_cols))
        if len(out_of_range):
            r = int(row_of[out_of_range[0]])
            raise DatasetError(f"column index out of range [0, {raw.n_cols}) in row {r}")
        same_row = row_of[1:] == row_of[:-1]
        not_increasing = np.flatnonzero(same_row & (cols[1:] <= cols[:-1]))
        if len(not_increasing):
            r = int(row_of[not_increasing[0] + 1])
            raise DatasetError(f"column indices not strictly increasing (duplicate or unsorted) in row {r}")
        non_finite = np.flatnonzero(~np.isfinite(vals))
        if len(non_finite):
            raise DatasetError(f"non-finite value in row {int(row_of[non_finite[0]])}")
    return raw


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family and its parameters.

    ``gamma=None`` means "unset"; it resolves to ``1 / n_features`` via
    :meth:`resolved` before any evaluation.
    """

    kind: str = "rbf"
    gamma: Optional[float] = None
    degree: int = 3
    coef0: float = 0.0

    def __post_init__(self):
        kind = KERNEL_ALIASES.get(self.kind, self.kind)
        if kind not in KERNEL_KINDS:
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        if self.gamma is not None and not self.gamma > 0:
            raise ValueError("gamma must be > 0")
        if int(self.degree) != self.degree or self.degree < 1:
            raise ValueError("degree must be a positive integer")
        object.__setattr__(self, "degree", int(self.degree))

    def resolved(self, n_cols: int) -> "KernelSpec":
        if self.gamma is not None:
            return self
        return KernelSpec(self.kind, 1.0 / max(n_cols, 1), self.degree, self.coef0)

    @property
    def code(self) -> int:
        return KERNEL_KINDS.index(self.kind)


@dataclass(frozen=True)
class TrainConfig:
    C: float = 1.0
    epsilon_tube: float = 0.1
    termination_tol: float = 1e-3
    max_iterations: Optional[int] = None
    working_set_size: int = 16
    inner_tol: float = 1e-12
    cache_bytes: int = 256 * 2**20

    def __post_init__(self):
        if not self.C > 0:
            raise ValueError("C must be > 0")
        if not self.epsilon_tube >= 0:
            raise ValueError("epsilon_tube must be >= 0")
        if not self.termination_tol > 0 or not self.inner_tol > 0:
            raise ValueError("tolerances must be > 0")
        if self.working_set_size < 2 or self.working_set_size % 2:
            raise ValueError("working_set_size must be even and >= 2")

    def iteration_cap(self, l: int) -> int:
        if self.max_iterations is not None:
            return int(self.max_iterations)
        return max(10 * l, 10000)


@dataclass(eq=False)
class Problem:
    """One instance of  min ½αᵀQα + pᵀα  s.t.  yᵀα = 0, 0 ≤ α ≤ C.

    Dual index ``i`` refers to dataset row ``rows[i % len(rows)]``; with
    ``copies == 2`` the second half repeats the rows (the regression
    problem's negative copy).  ``Q_ij = y_i y_j K(x_map(i), x_map(j))``.
    """

    kernel: KernelSpec
    data: Dataset
    y: np.ndarray
    p: np.ndarray
    C: float
    rows: np.ndarray
    copies: int = 1
    cache: Any = None

    def __post_init__(self):
        self.y = np.asarray(self.y, dtype=np.float64)
        self.p = np.asarray(self.p, dtype=np.float64)
        self.rows = np.asarray(self.rows, dtype=INDEX_DTYPE)
        if len(self.y) != len(self.p) or len(self.y) != self.copies * len(self.rows):
            raise ValueError("y, p and rows disagree on the number of dual variables")
        if len(self.y) and not np.all(np.abs(self.y) == 1):
            raise ValueError("y entries must be +1 or -1")
        self.kernel = self.kernel.resolved(self.data.n_cols)
        if self.cache is None:
            from .kernels import KernelRowCache

            self.cache = KernelRowCache()

    @property
    def m(self) -> int:
        return len(self.y)

    @property
    def n_base(self) -> int:
        return len(self.rows)

    def index_map(self, i):
        return self.rows[np.asarray(i) % self.n_base]


@dataclass(frozen=True)
class ScalerParams:
    means: np.ndarray
    stds: np.ndarray
    constant: np.ndarray


@dataclass(frozen=True)
class OvoPair:
    class_a: Any
    class_b: Any
    coefficients: np.ndarray
    bias: float
    sv_indices: np.ndarray


@dataclass
class SvmModel:
    """A trained model.

    Classification models keep one (coefficients, bias, sv_indices) triple
    per class pair; binary models have exactly one pair and regression
    models a single triple covering every support vector.  Coefficients
    are signed: ``y_i α_i`` for classification, ``α*_i − α_i`` for
    regression.
    """

    task: str
    kernel: KernelSpec
    support_vectors: Dataset
    coefficients: list
    biases: list
    sv_indices: list
    class_labels: list = field(default_factory=list)
    scaler: Optional[ScalerParams] = None
    training_meta: list = field(default_factory=list)

    def __post_init__(self):
        if self.task not in TASKS:
            raise ValueError(f"unknown task {self.task!r}")

    @property
    def n_features(self) -> int:
        return self.support_vectors.n_cols

    @property
    def n_support(self) -> int:
        return self.support_vectors.n_rows

    @property
    def coef(self) -> np.ndarray:
        if len(self.coefficients) != 1:
            raise AttributeError("multiclass model has one coefficient list per pair")
        return self.coefficients[0]

    @property
    def bias(self) -> float:
        if len(self.biases) != 1:
            raise AttributeError("multiclass model has one bias per pair")
        return self.biases[0]

    @property
    def pairs(self) -> list[OvoPair]:
        if self.task == "epsilon_svr":
            return []
        if self.task == "binary_svc":
            labels = [(self.class_labels[0], self.class_labels[1])]
        else:
            k = len(self.class_labels)
            labels = [(self.class_labels[a], self.class_labels[b]) for a in range(k) for b in range(a + 1, k)]
        return [
            OvoPair(a, b, c, bias, idx)
            for (a, b), c, bias, idx in zip(labels, self.coefficients, self.biases, self.sv_indices)
        ]

