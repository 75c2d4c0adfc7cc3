"""Synthetic problems and timing of the working-set solver against the dense
projected-gradient oracle."""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _backend
from .data import Dataset, KernelSpec, TrainConfig
from .oracle import DenseQP, oracle_projected_gradient
from .tasks import build_svc_problem, build_svr_problem
from .solver import train_dual

logger = logging.getLogger(__name__)

REFERENCE_SCALE = {"svr": (113978, 120), "svc": (68971, 501)}


def make_blobs(n: int, d: int, separation: float = 5.0, seed: int = 0):
    """Two unit-variance Gaussian blobs whose centres are ``separation``
    standard deviations apart along the diagonal; labels ±1, balanced."""
    rng = np.random.default_rng(seed)
    y = np.where(np.arange(n) % 2 == 0, 1.0, -1.0)
    rng.shuffle(y)
    u = np.ones(d) / np.sqrt(d)
    X = rng.standard_normal((n, d)) + np.outer(y, 0.5 * separation * u)
    return Dataset.from_dense(X), y


def make_linear_regression(n: int, d: int, epsilon: float = 0.1, seed: int = 0):
    """Linear target plus uniform noise of half-width ε/2, i.e. inside the tube."""
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, d))
    w = rng.standard_normal(d) / np.sqrt(d)
    z = X @ w + rng.uniform(-0.5 * epsilon, 0.5 * epsilon, size=n)
    return Dataset.from_dense(X), z


@dataclass
class BenchResult:
    task: str
    samples: int
    features: int
    kernel: KernelSpec
    C: float
    epsilon: float
    backend: str
    solver_seconds: float = float("nan")
    solver_objective: float = float("nan")
    iterations: int = 0
    gap: float = float("nan")
    converged: bool = False
    oracle_seconds: float = float("nan")
    oracle_objective: float = float("nan")
    oracle_skipped: str = ""
    notes: list = field(default_factory=list)

    @property
    def speedup(self) -> float:
        return self.oracle_seconds / self.solver_seconds if self.solver_seconds > 0 else float("nan")

    @property
    def relative_difference(self) -> float:
        denom = max(abs(self.oracle_objective), 1e-300)
        return abs(self.solver_objective - self.oracle_objective) / denom

    def table(self) -> str:
        lines = [
            f"task={self.task} samples={self.samples} features={self.features} backend={self.backend}",
            f"kernel={self.kernel.kind} gamma={self.kernel.gamma!r} degree={self.kernel.degree} "
            f"coef0={self.kernel.coef0!r} C={self.C!r} epsilon={self.epsilon!r}",
            f"{'method':<16}{'seconds':>12}{'objective':>22}",
            f"{'working-set':<16}{self.solver_seconds:>12.4f}{self.solver_objective:>22.12g}",
        ]
        if self.oracle_skipped:
            lines.append(f"{'oracle':<16}{'skipped':>12}  ({self.oracle_skipped})")
        else:
            lines.append(f"{'oracle-pg':<16}{self.oracle_seconds:>12.4f}{self.oracle_objective:>22.12g}")
            lines.append(f"speedup={self.speedup:.2f}x relative_objective_difference={self.relative_difference:.3g}")
        lines.append(f"iterations={self.iterations} gap={self.gap:.3g} converged={self.converged}")
        return "\n".join(lines)

    def tsv(self) -> str:
        head = (
            "# task\tsamples\tfeatures\tbackend\tsolver_seconds\tsolver_objective\titerations"
            "\toracle_seconds\toracle_objective\tspeedup"
        )
        row = [
            self.task, self.samples, self.features, self.backend,
            f"{self.solver_seconds:.6f}", repr(self.solver_objective), self.iterations,
            "nan" if self.oracle_skipped else f"{self.oracle_seconds:.6f}",
            repr(self.oracle_objective),
            "nan" if self.oracle_skipped else f"{self.speedup:.4f}",
        ]
        return head + "\n" + "\t".join(str(v) for v in row) + "\n"


def oracle_plan(samples: int, oracle_max: int) -> Optional[str]:
    """Reason the oracle is skipped, or None when it runs."""
    if samples > oracle_max:
        return f"samples {samples} above --oracle-max {oracle_max}"
    return None


def run_bench(task: str = "svc", samples: int = 2000, features: int = 50, seed: int = 0,
              kernel: Optional[KernelSpec] = None, C: float = 1.0, epsilon: float = 0.1,
              tol: float = 1e-3, max_iter: Optional[int] = None, oracle_max: int = 2000,
              oracle_iterations: int = 200_000, separation: float = 5.0) -> BenchResult:
    kernel = (kernel or KernelSpec("rbf")).resolved(features)
    if task == "svc":
        data, labels = make_blobs(samples, features, separation, seed)
        problem = build_svc_problem(data, labels, kernel, C)
    elif task == "svr":
        data, z = make_linear_regression(samples, features, epsilon, seed)
        problem = build_svr_problem(data, z, kernel, C, epsilon)
    else:
        raise ValueError(f"unknown task {task!r}")
    config = TrainConfig(C=C, epsilon_tube=epsilon, termination_tol=tol, max_iterations=max_iter)
    res = BenchResult(task, samples, features, kernel, C, epsilon, _backend.backend_name())
    t0 = time.perf_counter()
    _, _, meta = train_dual(problem, config)
    res.solver_seconds = time.perf_counter() - t0
    res.solver_objective = meta.dual_objective
    res.iterations, res.gap, res.converged = meta.iterations, meta.gap, meta.converged
    if meta.iteration_cap_reached:
        res.notes.append("iteration cap reached")
    skip = oracle_plan(samples, oracle_max)
    if skip:
        res.oracle_skipped = skip
        return res
    t0 = time.perf_counter()
    qp = DenseQP.from_problem(problem)
    _, obj = oracle_projected_gradient(qp, iterations=oracle_iterations, cap=problem.m)
    res.oracle_seconds = time.perf_counter() - t0
    res.oracle_objective = obj
    return res
