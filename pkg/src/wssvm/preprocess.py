"""Feature scaling, k-fold splitting, cross-validation, grid tuning and
metrics."""
from __future__ import annotations

import itertools
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .data import Dataset, KernelSpec, ScalerParams, TrainConfig

logger = logging.getLogger(__name__)

CONSTANT_STD = 1e-12


def fit_scaler(data: Dataset, rows: Optional[np.ndarray] = None) -> ScalerParams:
    """Column means and sample standard deviations, zeros included."""
    if rows is not None:
        data = data.take(rows)
    n = data.n_rows
    if n < 1:
        raise ValueError("cannot fit a scaler on an empty dataset")
    X = data.to_dense()
    means = X.mean(axis=0)
    if n > 1:
        stds = X.std(axis=0, ddof=1)
    else:
        stds = np.zeros(data.n_cols)
    constant = stds < CONSTANT_STD
    return ScalerParams(means=means, stds=np.where(constant, 1.0, stds), constant=constant)


def apply_scaler(params: ScalerParams, data: Dataset) -> Dataset:
    """(x − mean) / std per column; constant columns pass through untouched."""
    if data.n_cols != len(params.means):
        raise ValueError(f"scaler expects {len(params.means)} columns, data has {data.n_cols}")
    X = data.to_dense()
    keep = ~params.constant
    X[:, keep] = (X[:, keep] - params.means[keep]) / params.stds[keep]
    return Dataset.from_dense(X)


@dataclass(frozen=True)
class FoldPlan:
    k: int
    assignment: np.ndarray
    seed: int
    stratified: bool = False

    def test_rows(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignment == fold)

    def train_rows(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignment != fold)


def kfold_split(n: int, k: int, seed: int = 0, labels: Optional[Sequence] = None) -> FoldPlan:
    """Seeded shuffle, then round-robin fold assignment.

    With ``labels`` each class is shuffled and dealt separately; the
    round-robin counter carries over between classes so overall fold sizes
    also differ by at most one.
    """
    if k < 2:
        raise ValueError("k must be >= 2")
    if k > n:
        raise ValueError(f"k={k} exceeds the number of rows {n}")
    rng = np.random.default_rng(seed)
    assignment = np.empty(n, dtype=np.intp)
    if labels is None:
        order = rng.permutation(n)
        assignment[order] = np.arange(n) % k
        return FoldPlan(k, assignment, seed, False)
    labels = list(labels)
    if len(labels) != n:
        raise ValueError("labels length differs from n")
    offset = 0
    for cls in unique_in_order(labels):
        members = np.array([i for i, v in enumerate(labels) if v == cls])
        members = members[rng.permutation(len(members))]
        assignment[members] = (offset + np.arange(len(members))) % k
        offset += len(members)
    return FoldPlan(k, assignment, seed, True)


def unique_in_order(values) -> list:
    seen = {}
    for v in values:
        if v not in seen:
            seen[v] = None
    return list(seen)


def pearson(a, b) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if len(a) < 2:
        return math.nan
    da, db = a - a.mean(), b - b.mean()
    sa, sb = float(da @ da), float(db @ db)
    if sa == 0.0 or sb == 0.0:
        return math.nan
    return float(da @ db) / math.sqrt(sa * sb)


def metrics(truth, predicted, task: str = "classification") -> dict:
    """accuracy for classification; mse and pearson for regression."""
    truth = list(truth) if not isinstance(truth, np.ndarray) else truth
    predicted = list(predicted) if not isinstance(predicted, np.ndarray) else predicted
    if len(truth) != len(predicted):
        raise ValueError(f"length mismatch: {len(truth)} truths, {len(predicted)} predictions")
    if len(truth) < 1:
        raise ValueError("metrics need at least one value")
    if task in ("classification", "svc"):
        hits = sum(1 for t, p in zip(truth, predicted) if t == p)
        return {"accuracy": hits / len(truth)}
    t = np.asarray(truth, dtype=np.float64)
    p = np.asarray(predicted, dtype=np.float64)
    return {"mse": float(np.mean((t - p) ** 2)), "pearson": pearson(t, p)}


@dataclass
class FoldResult:
    fold: int
    n_train: int
    n_test: int
    metrics: dict = field(default_factory=dict)
    failed: bool = False
    reason: str = ""


@dataclass
class CVResult:
    task: str
    folds: list
    mean: dict

    @property
    def n_failed(self) -> int:
        return sum(f.failed for f in self.folds)


def _run_fold(data, targets, kernel, config, plan, fold, task, scale):
    from .tasks import DegenerateLabels, predict, train

    tr, te = plan.train_rows(fold), plan.test_rows(fold)
    res = FoldResult(fold, len(tr), len(te))
    try:
        model = train(data, targets, kernel, config, task=task, scale=scale, rows=tr)
    except DegenerateLabels as exc:
        res.failed, res.reason = True, str(exc)
        logger.info("fold %d skipped: %s", fold, exc)
        return res
    pred = predict(model, data.take(te))
    truth = [targets[i] for i in te]
    res.metrics = metrics(truth, pred, "classification" if task == "svc" else "regression")
    return res


def cross_validate(data: Dataset, targets, kernel: KernelSpec, config: TrainConfig, plan: FoldPlan,
                   task: str = "svc", scale: bool = False, threads: int = 1) -> CVResult:
    """Train on k−1 folds, score the held-out fold, for every fold.

    The scaler (when ``scale``) is fit on each training split only.  Folds
    whose training split has a single class are reported as failed and left
    out of the mean.
    """
    targets = list(targets) if task == "svc" else np.asarray(targets, dtype=np.float64)
    args = [(data, targets, kernel, config, plan, f, task, scale) for f in range(plan.k)]
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            folds = list(pool.map(lambda a: _run_fold(*a), args))
    else:
        folds = [_run_fold(*a) for a in args]
    ok = [f for f in folds if not f.failed]
    mean = {}
    if ok:
        for key in ok[0].metrics:
            vals = np.array([f.metrics[key] for f in ok])
            mean[key] = math.nan if np.all(np.isnan(vals)) else float(np.nanmean(vals))
    return CVResult(task, folds, mean)


@dataclass
class TuneGrid:
    C: Optional[list] = None
    gamma: Optional[list] = None
    epsilon: Optional[list] = None
    degree: Optional[list] = None
    coef0: Optional[list] = None

    def points(self, kernel: KernelSpec, config: TrainConfig):
        """Cartesian product; C outermost, then gamma, epsilon, degree, coef0."""
        dims = [
            self.C or [config.C],
            self.gamma or [kernel.gamma],
            self.epsilon or [config.epsilon_tube],
            self.degree or [kernel.degree],
            self.coef0 or [kernel.coef0],
        ]
        names = ("C", "gamma", "epsilon", "degree", "coef0")
        return [dict(zip(names, combo)) for combo in itertools.product(*dims)]


@dataclass
class TuneRow:
    params: dict
    cv: CVResult

    @property
    def score(self) -> float:
        return self.cv.mean.get("accuracy", self.cv.mean.get("mse", math.nan))


@dataclass
class TuneResult:
    rows: list
    best_index: int
    objective: str

    @property
    def best(self) -> TuneRow:
        return self.rows[self.best_index]

    @property
    def best_params(self) -> dict:
        return self.best.params


def grid_tune(data: Dataset, targets, kernel: KernelSpec, grid: TuneGrid, plan: FoldPlan,
              config: TrainConfig = TrainConfig(), task: str = "svc", scale: bool = False,
              threads: int = 1) -> TuneResult:
    """Cross-validate every grid point; keep the best mean accuracy
    (classification) or lowest mean MSE (regression), first one on ties."""
    points = grid.points(kernel, config)
    if not points:
        raise ValueError("empty grid")

    def evaluate(pt):
        k = KernelSpec(kernel.kind, pt["gamma"], pt["degree"], pt["coef0"])
        c = replace(config, C=pt["C"], epsilon_tube=pt["epsilon"])
        return TuneRow(pt, cross_validate(data, targets, k, c, plan, task, scale))

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            rows = list(pool.map(evaluate, points))
    else:
        rows = [evaluate(pt) for pt in points]
    maximize = task == "svc"
    best = None
    for i, row in enumerate(rows):
        s = row.score
        if math.isnan(s):
            continue
        if best is None or (s > rows[best].score if maximize else s < rows[best].score):
            best = i
    if best is None:
        best = 0
    return TuneResult(rows, best, "accuracy" if maximize else "mse")
