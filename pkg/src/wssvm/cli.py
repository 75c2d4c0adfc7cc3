"""Command-line entry point: train, predict, cv, tune, bench."""
from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import _backend
from .bench import REFERENCE_SCALE, oracle_plan, run_bench
from .data import KernelSpec, TrainConfig
from .io import load_data, load_model, save_model
from .preprocess import TuneGrid, cross_validate, grid_tune, kfold_split, metrics
from .tasks import predict, train

logger = logging.getLogger("wssvm")

KERNEL_CHOICES = {"linear": "linear", "poly": "polynomial", "polynomial": "polynomial",
                  "rbf": "rbf", "sigmoid": "sigmoid"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _add_common(p):
    p.add_argument("--backend", choices=["auto", "compiled", "python"], default="auto")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("-v", "--verbose", action="store_true")


def _add_model_args(p, data_required=True):
    p.add_argument("--data", required=data_required, help="sparse text file, or .csv")
    p.add_argument("--label-column", type=int, default=0, help="label column for CSV input")
    p.add_argument("--task", choices=["svc", "svr"], default="svc")
    p.add_argument("--kernel", choices=sorted(KERNEL_CHOICES), default="rbf")
    p.add_argument("--C", type=float, default=1.0)
    p.add_argument("--gamma", type=float, default=None, help="default 1/n_features")
    p.add_argument("--degree", type=int, default=3)
    p.add_argument("--coef0", type=float, default=0.0)
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--tol", type=float, default=1e-3)
    p.add_argument("--max-iter", type=int, default=None)
    p.add_argument("--working-set", type=int, default=16)
    p.add_argument("--cache-mb", type=float, default=256)
    p.add_argument("--scale", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="wssvm", description="Kernel SVMs with a working-set dual solver")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("train", help="fit a model and write it to --model-out")
    _add_model_args(p)
    p.add_argument("--model-out", required=True)
    _add_common(p)

    p = sub.add_parser("predict", help="write one prediction per line")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--label-column", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--decision", action="store_true", help="also write decision values")
    _add_common(p)

    p = sub.add_parser("cv", help="k-fold cross-validation")
    _add_model_args(p)
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    _add_common(p)

    p = sub.add_parser("tune", help="grid search scored by k-fold cross-validation")
    _add_model_args(p)
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--grid-C", type=float, action="append")
    p.add_argument("--grid-gamma", type=float, action="append")
    p.add_argument("--grid-epsilon", type=float, action="append")
    p.add_argument("--grid-degree", type=int, action="append")
    p.add_argument("--grid-coef0", type=float, action="append")
    p.add_argument("--out", help="write the result table as TSV")
    _add_common(p)

    p = sub.add_parser("bench", help="time the solver against the dense oracle on synthetic data")
    p.add_argument("--task", choices=["svc", "svr"], default="svc")
    p.add_argument("--samples", type=int, default=2000)
    p.add_argument("--features", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--kernel", choices=sorted(KERNEL_CHOICES), default="rbf")
    p.add_argument("--C", type=float, default=1.0)
    p.add_argument("--gamma", type=float, default=None)
    p.add_argument("--degree", type=int, default=3)
    p.add_argument("--coef0", type=float, default=0.0)
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--tol", type=float, default=1e-3)
    p.add_argument("--max-iter", type=int, default=None)
    p.add_argument("--separation", type=float, default=5.0)
    p.add_argument("--oracle-max", type=int, default=2000)
    p.add_argument("--oracle-iter", type=int, default=200_000)
    p.add_argument("--tsv", help="write a gnuplot-ready TSV here")
    p.add_argument("--dry-run", action="store_true", help="print the plan without generating data")
    _add_common(p)
    return parser


def _kernel(args) -> KernelSpec:
    return KernelSpec(KERNEL_CHOICES[args.kernel], args.gamma, args.degree, args.coef0)


def _config(args) -> TrainConfig:
    return TrainConfig(
        C=args.C, epsilon_tube=args.epsilon, termination_tol=args.tol, max_iterations=args.max_iter,
        working_set_size=args.working_set, cache_bytes=int(args.cache_mb * 2**20),
    )


def _targets(labels, task):
    return labels if task == "svr" else [float(v) for v in labels]


def _fmt(v) -> str:
    if isinstance(v, float) and math.isnan(v):
        return "nan"
    return repr(float(v)) if isinstance(v, float) else str(v)


def cmd_train(args, out) -> int:
    data, labels = load_data(args.data, args.label_column)
    model = train(data, _targets(labels, args.task), _kernel(args), _config(args),
                  task=args.task, scale=args.scale, threads=args.threads)
    save_model(model, args.model_out)
    meta = model.training_meta
    print(f"task={model.task} support_vectors={model.n_support} "
          f"iterations={sum(m.iterations for m in meta)} gap={max(m.gap for m in meta):.3g}", file=out)
    if any(m.iteration_cap_reached for m in meta):
        print("warning: iteration cap reached", file=out)
    return 0


def _label_out(v) -> str:
    if isinstance(v, float) and v.is_integer():
        return str(int(v))
    return repr(float(v)) if isinstance(v, (float, np.floating)) else str(v)


def cmd_predict(args, out) -> int:
    model = load_model(args.model)
    data, _ = load_data(args.data, args.label_column, n_cols=model.n_features)
    pred, dv = predict(model, data, return_decision=True)
    with open(args.out, "w", encoding="utf-8") as fh:
        for i, v in enumerate(pred):
            line = repr(float(v)) if model.task == "epsilon_svr" else _label_out(v)
            if args.decision:
                line += "\t" + "\t".join(repr(float(x)) for x in dv[i])
            fh.write(line + "\n")
    print(f"wrote {len(pred)} predictions to {args.out}", file=out)
    return 0


def cmd_cv(args, out) -> int:
    data, labels = load_data(args.data, args.label_column)
    targets = _targets(labels, args.task)
    plan = kfold_split(data.n_rows, args.folds, args.seed, targets if args.task == "svc" else None)
    res = cross_validate(data, targets, _kernel(args), _config(args), plan, args.task, args.scale, args.threads)
    for f in res.folds:
        if f.failed:
            print(f"fold {f.fold}\tfailed\t{f.reason}", file=out)
        else:
            print(f"fold {f.fold}\t" + "\t".join(f"{k}={_fmt(v)}" for k, v in f.metrics.items()), file=out)
    print("mean\t" + "\t".join(f"{k}={_fmt(v)}" for k, v in res.mean.items()), file=out)
    return 0


def cmd_tune(args, out) -> int:
    data, labels = load_data(args.data, args.label_column)
    targets = _targets(labels, args.task)
    plan = kfold_split(data.n_rows, args.folds, args.seed, targets if args.task == "svc" else None)
    grid = TuneGrid(args.grid_C, args.grid_gamma, args.grid_epsilon, args.grid_degree, args.grid_coef0)
    res = grid_tune(data, targets, _kernel(args), grid, plan, _config(args), args.task, args.scale, args.threads)
    header = ["C", "gamma", "epsilon", "degree", "coef0", res.objective]
    lines = ["\t".join(header)]
    for row in res.rows:
        lines.append("\t".join(_fmt(row.params[k]) for k in header[:-1]) + "\t" + _fmt(row.score))
    text = "\n".join(lines) + "\n"
    out.write(text)
    print("best\t" + "\t".join(f"{k}={_fmt(v)}" for k, v in res.best_params.items()), file=out)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    return 0


def cmd_bench(args, out) -> int:
    kernel = _kernel(args)
    skip = oracle_plan(args.samples, args.oracle_max)
    scale_tag = [t for t, shape in REFERENCE_SCALE.items() if shape == (args.samples, args.features)]
    print(f"# bench task={args.task} samples={args.samples} features={args.features} seed={args.seed} "
          f"kernel={kernel.kind} C={args.C!r} gamma={'1/d' if args.gamma is None else repr(args.gamma)} "
          f"backend={_backend.backend_name()}", file=out)
    if scale_tag:
        print(f"# configuration matches the reference {scale_tag[0]} workload size", file=out)
    print(f"# oracle: {'skipped, ' + skip if skip else 'projected gradient'}", file=out)
    if args.dry_run:
        return 0
    res = run_bench(args.task, args.samples, args.features, args.seed, kernel, args.C, args.epsilon,
                    args.tol, args.max_iter, args.oracle_max, args.oracle_iter, args.separation)
    print(res.table(), file=out)
    for note in res.notes:
        print(f"# note: {note}", file=out)
    if args.tsv:
        Path(args.tsv).write_text(res.tsv(), encoding="utf-8")
    return 0


COMMANDS = {"train": cmd_train, "predict": cmd_predict, "cv": cmd_cv, "tune": cmd_tune, "bench": cmd_bench}


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 2
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        _backend.set_backend(args.backend)
        return COMMANDS[args.command](args, out)
    except Exception as exc:  # runtime failure -> exit 1
        logger.debug("command failed", exc_info=True)
        print(f"wssvm {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
