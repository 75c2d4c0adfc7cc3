"""Time the compiled core against the numpy fallback.

Measures kernel-row throughput, the pairwise subproblem sweeps, and a full
training run on synthetic blobs.  Usage::

    python benchmarks/bench_backends.py --samples 5000 --features 50
"""
import argparse
import time

import numpy as np

from wssvm import _backend
from wssvm.bench import make_blobs
from wssvm.data import KernelSpec, TrainConfig
from wssvm.kernels import KernelRowCache, base_kernel_row
from wssvm.solver import train_dual
from wssvm.tasks import build_svc_problem


def timed(fn, repeat=3):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def kernel_rows(data, labels, n_rows):
    # a zero-byte cache forces every row to be computed
    prob = build_svc_problem(data, labels, KernelSpec("rbf"), 1.0, cache=KernelRowCache(0))
    return lambda: [base_kernel_row(prob, r) for r in range(n_rows)]


def sweeps(backend, size, seed=0):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((size, size))
    y = rng.choice([-1.0, 1.0], size=size)
    Q = np.outer(y, y) * (A @ A.T)

    def run():
        G, alpha = -np.ones(size), np.zeros(size)
        return backend.pair_sweeps(Q, G, alpha, y, 1.0, 1e-12, 100, 1e-12)

    return run


def training(data, labels):
    return lambda: train_dual(build_svc_problem(data, labels, KernelSpec("rbf"), 1.0), TrainConfig())


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--samples", type=int, default=5000)
    ap.add_argument("--features", type=int, default=50)
    ap.add_argument("--rows", type=int, default=200, help="kernel rows to time")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    data, labels = make_blobs(args.samples, args.features, seed=args.seed)
    names = _backend.available()
    results = {}
    for name in names:
        be = _backend.set_backend(name)
        rows_s, _ = timed(kernel_rows(data, labels, args.rows))
        sweep_s, _ = timed(sweeps(be, 16))
        train_s, (_, _, meta) = timed(training(data, labels), repeat=1)
        results[name] = (rows_s, sweep_s, train_s, meta.dual_objective)
    _backend.set_backend("auto")

    print(f"samples={args.samples} features={args.features} kernel rows={args.rows}")
    print(f"{'backend':<10}{'rows (s)':>12}{'16-var sweeps (s)':>20}{'train (s)':>12}{'objective':>22}")
    for name, (r, s, t, obj) in results.items():
        print(f"{name:<10}{r:>12.4f}{s:>20.5f}{t:>12.3f}{obj:>22.12g}")
    if len(results) == 2:
        c, p = results["compiled"], results["python"]
        print(f"speedup   {p[0] / c[0]:>11.1f}x{p[1] / c[1]:>19.1f}x{p[2] / c[2]:>11.1f}x")


if __name__ == "__main__":
    main()
