"""Working-set solver for the box- and equality-constrained dual

    min_α ½ αᵀQα + pᵀα   s.t.  yᵀα = 0,  0 ≤ α_i ≤ C.

Each outer iteration refreshes nothing but what changed: it picks a block of
the most violating coefficients (half from the "can move up" set, half from
the "can move down" set), minimizes the objective over that block with
exact pairwise steps, then pushes the change into the full gradient.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from ._backend import get_backend
from .data import INDEX_DTYPE, Problem, TrainConfig
from .kernels import base_kernel_row

logger = logging.getLogger(__name__)

ETA_FLOOR = 1e-12
MAX_SWEEPS = 100


@dataclass
class SolverState:
    alpha: np.ndarray
    gradient: np.ndarray
    iteration: int = 0
    last_gap: float = math.inf
    objective_dual: float = 0.0


@dataclass
class Step:
    """Result of one block minimization: changes to ``alpha[indices]``."""

    indices: np.ndarray
    delta: np.ndarray
    decrease: float = 0.0
    sweeps: int = 0

    @property
    def is_zero(self) -> bool:
        return not np.any(self.delta)


@dataclass
class SolveMeta:
    iterations: int
    gap: float
    violation: float
    dual_objective: float
    primal_objective: float
    converged: bool
    iteration_cap_reached: bool = False
    stalled: bool = False
    history: list = field(default_factory=list, repr=False)


def init_state(problem: Problem) -> SolverState:
    return SolverState(alpha=np.zeros(problem.m), gradient=problem.p.copy())


def _index_sets(alpha: np.ndarray, y: np.ndarray, C: float):
    pos = y > 0
    up = np.where(pos, alpha < C, alpha > 0)
    low = np.where(pos, alpha > 0, alpha < C)
    return up, low


def violation_extremes(state: SolverState, problem: Problem):
    """(max_up, min_low) of −y_i G_i; ±inf when a set is empty."""
    v = -problem.y * state.gradient
    up, low = _index_sets(state.alpha, problem.y, problem.C)
    max_up = float(v[up].max()) if up.any() else -math.inf
    min_low = float(v[low].min()) if low.any() else math.inf
    return max_up, min_low


def _k_smallest(keys: np.ndarray, k: int) -> np.ndarray:
    """Positions of the k smallest keys, ties by lowest position, sorted by key."""
    n = len(keys)
    if k >= n:
        return np.argsort(keys, kind="stable")
    thr = np.partition(keys, k - 1)[k - 1]
    below = np.flatnonzero(keys < thr)
    ties = np.flatnonzero(keys == thr)[: k - len(below)]
    sel = np.concatenate([below, ties])
    return sel[np.argsort(keys[sel], kind="stable")]


def select_working_set(state: SolverState, problem: Problem, size: int, tol: float = 1e-3) -> np.ndarray:
    """Indices to optimize next, or an empty array once max_up − min_low ≤ tol."""
    if size < 2 or size % 2:
        raise ValueError("working set size must be even and >= 2")
    if problem.m == 0:
        return np.zeros(0, dtype=INDEX_DTYPE)
    v = -problem.y * state.gradient
    up, low = _index_sets(state.alpha, problem.y, problem.C)
    up_idx = np.flatnonzero(up)
    low_idx = np.flatnonzero(low)
    if not len(up_idx) or not len(low_idx):
        return np.zeros(0, dtype=INDEX_DTYPE)
    if v[up_idx].max() - v[low_idx].min() <= tol:
        return np.zeros(0, dtype=INDEX_DTYPE)
    half = size // 2
    top = up_idx[_k_smallest(-v[up_idx], half)]
    bottom = low_idx[_k_smallest(v[low_idx], half)]
    both = np.concatenate([top, bottom])
    _, first = np.unique(both, return_index=True)
    return both[np.sort(first)]


def _block(problem: Problem, ws: np.ndarray) -> np.ndarray:
    base = problem.index_map(ws)
    pos = ws % problem.n_base
    rows = np.stack([base_kernel_row(problem, int(r))[pos] for r in base])
    return np.outer(problem.y[ws], problem.y[ws]) * rows


def solve_subproblem(state: SolverState, problem: Problem, ws, inner_tol: float = 1e-12,
                     max_sweeps: int = MAX_SWEEPS) -> Step:
    """Minimize the dual over ``ws`` with the rest of α held fixed.

    Pairs (i, j) with i able to move up and j able to move down are swept
    Gauss-Seidel style, each taking the exact box-clipped minimizer along
    the direction that keeps yᵀα fixed.  Sweeps stop when the best pair
    gain of a sweep drops below ``inner_tol``.
    """
    ws = np.asarray(ws, dtype=INDEX_DTYPE)
    if not len(ws):
        raise ValueError("empty working set")
    Qb = np.ascontiguousarray(_block(problem, ws))
    g = state.gradient[ws].copy()
    a_old = state.alpha[ws].copy()
    a_new = a_old.copy()
    y = np.ascontiguousarray(problem.y[ws])
    sweeps, decrease = get_backend().pair_sweeps(
        Qb, g, a_new, y, float(problem.C), float(inner_tol), int(max_sweeps), ETA_FLOOR
    )
    return Step(ws, a_new - a_old, decrease, sweeps)


def apply_update(state: SolverState, problem: Problem, step: Step) -> SolverState:
    """alpha += delta and G += Q[:, ws] @ delta over every coordinate."""
    nz = step.delta != 0
    if not nz.any():
        return state
    idx = step.indices[nz]
    d = step.delta[nz]
    # fold both copies of a row into one weight per dataset row
    weights: dict[int, float] = {}
    for j, dj in zip(idx.tolist(), (problem.y[idx] * d).tolist()):
        r = int(problem.index_map(j))
        weights[r] = weights.get(r, 0.0) + dj
    kd = np.zeros(problem.n_base)
    for r, w in weights.items():
        if w != 0.0:
            kd += w * base_kernel_row(problem, r)
    dG = problem.y * (np.tile(kd, problem.copies) if problem.copies > 1 else kd)
    g_old = state.gradient[idx]
    state.alpha[idx] = np.clip(state.alpha[idx] + d, 0.0, problem.C)
    state.gradient += dG
    # change of ½αᵀQα + pᵀα along d: dᵀG_old + ½ dᵀQd, and Qd restricted to idx is dG[idx]
    state.objective_dual += float(d @ g_old + 0.5 * (d @ dG[idx]))
    return state


def compute_objectives(state: SolverState, problem: Problem):
    """(dual, primal, gap) for the current iterate.

    ``dual`` is the minimized form ½αᵀQα + pᵀα.  The primal is evaluated at
    w(α) with the bias midway between max_up and min_low; with f_i read off
    the gradient, every loss term reduces to max(0, −G_i − y_i b), which is
    the hinge loss for classification and the ε-insensitive loss for the
    doubled regression problem.  ``gap = (primal + dual) / (1 + |primal|)``
    is zero at the optimum.
    """
    a, G, p, y = state.alpha, state.gradient, problem.p, problem.y
    if problem.m == 0:
        return 0.0, 0.0, 0.0
    dual = 0.5 * float(a @ (G + p))
    quad = 0.5 * float(a @ (G - p))
    b = estimate_bias(state, problem, midpoint_only=True)
    loss = float(np.maximum(0.0, -G - y * b).sum())
    primal = quad + problem.C * loss
    gap = (primal + dual) / (1.0 + abs(primal))
    return dual, primal, gap


def estimate_bias(state: SolverState, problem: Problem, midpoint_only: bool = False) -> float:
    """Intercept b of f(x) = Σ coef K(sv, x) + b from the KKT conditions.

    Mean of −y_i G_i over free coefficients; the midpoint of max_up and
    min_low when none is free (or when ``midpoint_only``).
    """
    if problem.m == 0:
        return 0.0
    if not midpoint_only:
        free = (state.alpha > 0) & (state.alpha < problem.C)
        if free.any():
            return float(np.mean(-problem.y[free] * state.gradient[free]))
    max_up, min_low = violation_extremes(state, problem)
    if math.isinf(max_up) and math.isinf(min_low):
        return 0.0
    if math.isinf(max_up):
        return min_low
    if math.isinf(min_low):
        return max_up
    return 0.5 * (max_up + min_low)


ProgressFn = Callable[[int, float, float], None]


def train_dual(problem: Problem, config: TrainConfig = TrainConfig(), progress: Optional[ProgressFn] = None,
               state: Optional[SolverState] = None):
    """Run the working-set iteration to convergence.

    Stops when both the KKT violation max_up − min_low and the relative
    duality gap are ≤ ``termination_tol``, or at the iteration cap (the
    best iterate so far is returned and flagged, not raised).

    Returns ``(alpha, bias, meta)``.
    """
    problem.cache.resize(config.cache_bytes)
    if state is None:
        state = init_state(problem)
    tol = config.termination_tol
    cap = config.iteration_cap(problem.n_base)
    select_tol = tol
    stalled = False
    history = []
    while state.iteration < cap:
        ws = select_working_set(state, problem, config.working_set_size, select_tol)
        if not len(ws):
            _, _, gap = compute_objectives(state, problem)
            state.last_gap = gap
            if gap <= tol:
                break
            # violation small enough but the gap is not: tighten selection
            select_tol *= 0.1
            if select_tol < 1e-15 * (1.0 + abs(state.objective_dual)):
                stalled = True
                break
            continue
        step = solve_subproblem(state, problem, ws, config.inner_tol)
        if step.is_zero:
            stalled = True
            break
        apply_update(state, problem, step)
        state.iteration += 1
        dual, _, gap = compute_objectives(state, problem)
        state.last_gap = gap
        history.append(state.objective_dual)
        if progress is not None:
            progress(state.iteration, state.objective_dual, gap)
    max_up, min_low = violation_extremes(state, problem)
    violation = max(max_up - min_low, 0.0) if problem.m else 0.0
    dual, primal, gap = compute_objectives(state, problem)
    capped = state.iteration >= cap and not (violation <= tol and gap <= tol)
    if capped:
        logger.warning("iteration cap %d reached (violation %.3g, gap %.3g)", cap, violation, gap)
    meta = SolveMeta(
        iterations=state.iteration,
        gap=gap,
        violation=violation,
        dual_objective=dual,
        primal_objective=primal,
        converged=violation <= tol and gap <= tol,
        iteration_cap_reached=capped,
        stalled=stalled,
        history=history,
    )
    return state.alpha, estimate_bias(state, problem), meta
