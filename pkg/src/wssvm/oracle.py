"""Brute-force reference solvers for small duals

    min ½αᵀQα + pᵀα   s.t.  yᵀα = 0,  0 ≤ α ≤ C.

Neither shares code with the working-set solver: one enumerates active sets
exactly, the other runs accelerated projected gradient on a dense Q.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .data import Problem
from .kernels import problem_gram

ACTIVE_SET_CAP = 10
PG_CAP = 50
KKT_TOL = 1e-9
RESIDUAL_TOL = 1e-8


class OracleError(RuntimeError):
    pass


@dataclass
class DenseQP:
    Q: np.ndarray
    p: np.ndarray
    y: np.ndarray
    C: float

    def __post_init__(self):
        self.Q = np.asarray(self.Q, dtype=np.float64)
        self.p = np.asarray(self.p, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.float64)
        m = len(self.p)
        if self.Q.shape != (m, m) or len(self.y) != m:
            raise ValueError("inconsistent QP dimensions")

    @classmethod
    def from_problem(cls, problem: Problem) -> "DenseQP":
        return cls(problem_gram(problem), problem.p, problem.y, problem.C)

    @property
    def m(self) -> int:
        return len(self.p)

    def objective(self, alpha) -> float:
        alpha = np.asarray(alpha, dtype=np.float64)
        return 0.5 * float(alpha @ self.Q @ alpha) + float(self.p @ alpha)


def oracle_active_set(qp: DenseQP, cap: int = ACTIVE_SET_CAP):
    """Exact minimizer by enumerating every lower/upper/free assignment.

    For each free set F the KKT system [Q_FF y_F; y_Fᵀ 0] is factored once
    (pseudo-inverse, so singular blocks take the minimum-norm solution) and
    solved for every lower/upper split of the remaining variables at once.
    Candidates must be feasible and satisfy the sign conditions at the
    bounds; the one with the smallest objective is returned.
    """
    m = qp.m
    if m > cap:
        raise ValueError(f"active-set oracle limited to m <= {cap}, got {m}")
    if m == 0:
        return np.zeros(0), 0.0
    Q, p, y, C = qp.Q, qp.p, qp.y, float(qp.C)
    scale = 1.0 + np.abs(Q).max() * max(C, 1.0) * m + np.abs(p).max()
    tol = KKT_TOL * scale
    best_alpha, best_obj = None, math.inf
    idx = np.arange(m)
    for n_free in range(m + 1):
        for F in itertools.combinations(range(m), n_free):
            F = np.array(F, dtype=np.intp)
            B = np.setdiff1d(idx, F)
            # every lower/upper split of B, one per column
            nb = len(B)
            splits = ((np.arange(2**nb)[:, None] >> np.arange(nb)) & 1).astype(bool)
            aB = np.where(splits, C, 0.0)
            if n_free:
                K = np.zeros((n_free + 1, n_free + 1))
                K[:n_free, :n_free] = Q[np.ix_(F, F)]
                K[:n_free, n_free] = y[F]
                K[n_free, :n_free] = y[F]
                rhs = np.empty((len(aB), n_free + 1))
                rhs[:, :n_free] = -p[F] - aB @ Q[np.ix_(B, F)]
                rhs[:, n_free] = -(aB @ y[B])
                sol = rhs @ np.linalg.pinv(K).T
                resid = np.abs(sol @ K.T - rhs).max(axis=1)
                ok = resid <= RESIDUAL_TOL * scale
                aF, lam = sol[:, :n_free], sol[:, n_free]
                ok &= np.all((aF >= -tol) & (aF <= C + tol), axis=1)
                aF = np.clip(aF, 0.0, C)
            else:
                ok = np.abs(aB @ y[B]) <= tol
                lam = None
            for s in np.flatnonzero(ok):
                alpha = np.zeros(m)
                alpha[B] = aB[s]
                if n_free:
                    alpha[F] = aF[s]
                G = Q @ alpha + p
                if lam is None:
                    l = _multiplier_interval(G[B], y[B], splits[s], tol)
                    if l is None:
                        continue
                else:
                    l = lam[s]
                r = G[B] + l * y[B]
                at_upper = splits[s]
                if np.any(r[~at_upper] < -tol) or np.any(r[at_upper] > tol):
                    continue
                obj = qp.objective(alpha)
                if obj < best_obj:
                    best_obj, best_alpha = obj, alpha
    if best_alpha is None:
        raise OracleError("no feasible KKT point found")
    return best_alpha, best_obj


def _multiplier_interval(G, y, at_upper, tol):
    """A multiplier λ with G_i + λy_i ≥ 0 at lower and ≤ 0 at upper bounds."""
    lo, hi = -math.inf, math.inf
    for g, yi, up in zip(G, y, at_upper):
        # lower: yi*λ >= -g ; upper: yi*λ <= -g
        bound = -g / yi
        if (yi > 0) != bool(up):
            lo = max(lo, bound)
        else:
            hi = min(hi, bound)
    if lo > hi + tol:
        return None
    if math.isinf(lo) and math.isinf(hi):
        return 0.0
    if math.isinf(lo):
        return hi
    if math.isinf(hi):
        return lo
    return 0.5 * (lo + hi)


def project_feasible(v: np.ndarray, y: np.ndarray, C: float) -> np.ndarray:
    """Euclidean projection onto {0 ≤ α ≤ C, yᵀα = 0}.

    α(ν) = clip(v − νy, 0, C); h(ν) = yᵀα(ν) is non-increasing and
    piecewise linear, so the root is located between sorted breakpoints by
    bisection and then interpolated exactly.
    """
    if len(v) == 0:
        return v.copy()
    yv = y * v
    knots = np.unique(np.concatenate([yv, yv - C * (y > 0) + C * (y < 0)]))

    def h(nu):
        return float(y @ np.clip(v - nu * y, 0.0, C))

    lo, hi = 0, len(knots) - 1
    if h(knots[lo]) <= 0.0:
        nu = knots[lo]
    elif h(knots[hi]) >= 0.0:
        nu = knots[hi]
    else:
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if h(knots[mid]) > 0.0:
                lo = mid
            else:
                hi = mid
        h_lo, h_hi = h(knots[lo]), h(knots[hi])
        nu = knots[lo] + (knots[hi] - knots[lo]) * h_lo / (h_lo - h_hi)
    alpha = np.clip(v - nu * y, 0.0, C)
    # absorb the interpolation's rounding into the free coordinates
    resid = float(y @ alpha)
    free = (alpha > 0.0) & (alpha < C)
    if resid != 0.0 and free.any():
        alpha[free] = np.clip(alpha[free] - resid * y[free] / free.sum(), 0.0, C)
    return alpha


def power_iteration_lmax(Q: np.ndarray, iterations: int = 200, seed: int = 0) -> float:
    m = Q.shape[0]
    if m == 0:
        return 0.0
    v = np.random.default_rng(seed).standard_normal(m)
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(iterations):
        w = Q @ v
        n = np.linalg.norm(w)
        if n == 0.0:
            return 0.0
        lam_new = float(v @ w)
        v = w / n
        if abs(lam_new - lam) <= 1e-12 * max(abs(lam_new), 1.0):
            lam = lam_new
            break
        lam = lam_new
    # power iteration converges from below; pad so 1/L stays a safe step
    return abs(lam) * 1.01


def oracle_projected_gradient(qp: DenseQP, iterations: int = 200_000, step: float | None = None,
                              cap: int = PG_CAP, accelerated: bool = True, stop_tol: float = 1e-13):
    """Projected gradient with step 1/λ_max(Q).

    With ``accelerated`` the iteration uses Nesterov momentum with
    function-value restarts.  Stops early once an iterate no longer moves
    (relative change below ``stop_tol``).
    """
    m = qp.m
    if m > cap:
        raise ValueError(f"projected-gradient oracle limited to m <= {cap}, got {m}")
    Q, p, y, C = qp.Q, qp.p, qp.y, float(qp.C)
    alpha = np.zeros(m)
    if iterations <= 0 or m == 0:
        return alpha, qp.objective(alpha)
    if step is None:
        L = power_iteration_lmax(Q)
        step = 1.0 / L if L > 0 else 1.0
    z = alpha.copy()
    t = 1.0
    obj = qp.objective(alpha)
    restarted = False
    for _ in range(iterations):
        nxt = project_feasible(z - step * (Q @ z + p), y, C)
        new_obj = qp.objective(nxt)
        moved = float(np.abs(nxt - alpha).max())
        if accelerated and new_obj > obj:
            if restarted:
                # a plain step from alpha no longer decreases: rounding floor
                break
            z, t, restarted = alpha.copy(), 1.0, True
            continue
        restarted = False
        if accelerated:
            t_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
            z = nxt + ((t - 1.0) / t_next) * (nxt - alpha)
            t = t_next
        else:
            z = nxt
        alpha, obj = nxt, new_obj
        if moved <= stop_tol * max(1.0, C):
            if not accelerated:
                break
            # the extrapolated point can project onto the same vertex without
            # alpha being stationary; only a still plain step ends the run
            plain = project_feasible(alpha - step * (Q @ alpha + p), y, C)
            if float(np.abs(plain - alpha).max()) <= stop_tol * max(1.0, C):
                break
            z, t = alpha.copy(), 1.0
    return alpha, qp.objective(alpha)
