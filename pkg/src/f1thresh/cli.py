"""Command-line harness.

Subcommands: ``optimize`` fits thresholds on a validation matrix and
optionally scores a held-out one, ``evaluate`` applies a stored threshold
file, ``gradcheck`` verifies the analytic gradient against finite
differences, ``benchmark`` times a method on synthetic data, and ``kfold``
runs cross-validated fitting.

Exit codes are a stable contract: 0 success, 1 usage error (including a
failing gradient check), 2 data validation error, 3 resource guard.
Reports are JSON with sorted keys, so identical flags and seed reproduce
byte-identical files; only the elapsed_seconds and epochs_per_second
fields vary between runs.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import sys

import numpy as np

from .data import (
    Dataset,
    kfold_split,
    load_matrix,
    load_thresholds,
    pair_dataset,
    save_thresholds,
)
from .exceptions import DataValidationError, ResourceGuardError
from .metrics import (
    EMPTY_POLICIES,
    Metric,
    binarize,
    f1_at_thresholds,
    micro_precision_recall,
)
from .optim import AdamConfig, FitConfig, FitResult, sgl_fit
from .search import DichoConfig, NumGradConfig, default_thresholds, dicho_fit, num_fit
from .surrogate import run_gradient_check
from .synthetic import SyntheticConfig, make_synthetic

REPORT_VERSION = 1
METHODS = ("def", "dicho", "num", "sgl")
METRIC_FLAGS = ("micro-f1", "macro-f1")
DEFAULT_LR = {"num": 1e-2, "sgl": 1e-3}
DEFAULT_BENCH_CELL_CAP = 100_000_000


class UsageError(Exception):
    """Bad flag combination detected after parsing."""


class _Parser(argparse.ArgumentParser):
    """Parser whose usage failures exit 1 (argparse's own default is 2,
    which this tool reserves for data validation errors)."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _add_fit_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--metric", choices=METRIC_FLAGS, default="micro-f1")
    p.add_argument("--init-threshold", type=float, default=0.5)
    p.add_argument("--lr", type=float, default=None,
                   help="learning rate; defaults to 1e-3 for sgl, 1e-2 for num")
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--slope", type=float, default=50.0)
    p.add_argument("--delta-t", type=float, default=0.01)
    p.add_argument("--seed", type=int, default=0)


def _add_report_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--report", default=None, help="write a JSON report here")


def _add_eval_conventions(p: argparse.ArgumentParser) -> None:
    p.add_argument("--header", action="store_true",
                   help="CSV inputs carry one header row to skip")
    p.add_argument("--empty-class-score", choices=EMPTY_POLICIES, default="one",
                   help="reported F1 for classes empty in both truth and prediction")


def build_parser() -> _Parser:
    parser = _Parser(prog="f1thresh",
                     description="Per-class decision thresholds maximizing micro or macro F1.")
    sub = parser.add_subparsers(dest="subcommand", metavar="subcommand")

    p = sub.add_parser("optimize", help="fit thresholds on a validation set")
    p.add_argument("--scores-val", required=True)
    p.add_argument("--labels-val", required=True)
    p.add_argument("--method", required=True, choices=METHODS)
    p.add_argument("--scores-eval", default=None)
    p.add_argument("--labels-eval", default=None)
    _add_fit_flags(p)
    p.add_argument("--out-thresholds", default="thresholds.json")
    p.add_argument("--trace-csv", default=None, help="write per-epoch F1 trace here")
    _add_report_flags(p)
    _add_eval_conventions(p)
    p.set_defaults(func=_cmd_optimize)

    p = sub.add_parser("evaluate", help="apply a stored threshold file")
    p.add_argument("--scores", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--thresholds", required=True)
    _add_report_flags(p)
    _add_eval_conventions(p)
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("gradcheck", help="verify the analytic gradient numerically")
    p.add_argument("--n", type=int, default=32)
    p.add_argument("--c", type=int, default=8)
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--slope", type=float, default=None,
                   help="single surrogate slope; default cycles 5, 20, 50")
    p.add_argument("--tolerance", type=float, default=1e-4)
    p.add_argument("--seed", type=int, default=0)
    _add_report_flags(p)
    p.set_defaults(func=_cmd_gradcheck)

    p = sub.add_parser("benchmark", help="time a method on synthetic data")
    p.add_argument("--n", type=int, default=15278)
    p.add_argument("--c", type=int, default=527)
    p.add_argument("--method", choices=METHODS, default="sgl")
    p.add_argument("--noise", type=float, default=0.15)
    p.add_argument("--max-cells", type=int, default=DEFAULT_BENCH_CELL_CAP,
                   help="refuse synthetic datasets larger than this many cells")
    _add_fit_flags(p)
    _add_report_flags(p)
    p.set_defaults(func=_cmd_benchmark)

    p = sub.add_parser("kfold", help="cross-validated fit and evaluation")
    p.add_argument("--scores", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--method", required=True, choices=METHODS)
    _add_fit_flags(p)
    _add_report_flags(p)
    _add_eval_conventions(p)
    p.set_defaults(func=_cmd_kfold)

    return parser


# ---------------------------------------------------------------------------
# Shared pieces
# ---------------------------------------------------------------------------


def _resolve_lr(method: str, lr) -> float | None:
    if lr is not None:
        if not lr > 0.0:
            raise UsageError(f"--lr must be positive, got {lr!r}")
        return float(lr)
    return DEFAULT_LR.get(method)


def _run_method(method: str, dataset: Dataset, args) -> tuple[FitResult, dict]:
    """Fit with the chosen method; returns the result and its config echo."""
    lr = _resolve_lr(method, args.lr)
    if method == "def":
        thresholds = default_thresholds(dataset.n_classes, args.init_threshold)
        result = FitResult(thresholds=thresholds, trace=[], elapsed=0.0, epochs_run=0)
        method_cfg: dict = {"init_threshold": args.init_threshold}
    elif method == "dicho":
        cfg = DichoConfig(seed=args.seed)
        result = dicho_fit(dataset, cfg, args.metric, init_threshold=args.init_threshold)
        method_cfg = dataclasses.asdict(cfg) | {"init_threshold": args.init_threshold}
    elif method == "num":
        cfg = NumGradConfig(delta_t=args.delta_t, adam=AdamConfig(lr=lr), epochs=args.epochs)
        result = num_fit(dataset, cfg, args.metric,
                         init_threshold=args.init_threshold, seed=args.seed)
        method_cfg = dataclasses.asdict(cfg) | {"init_threshold": args.init_threshold}
    elif method == "sgl":
        cfg = FitConfig(epochs=args.epochs, init_threshold=args.init_threshold,
                        adam=AdamConfig(lr=lr), slope=args.slope,
                        metric=args.metric, seed=args.seed)
        result = sgl_fit(dataset, cfg)
        method_cfg = dataclasses.asdict(cfg)
    else:
        raise UsageError(f"unknown method {method!r}")
    return result, method_cfg


def _emit_report(report: dict, path) -> None:
    if path is None:
        return
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_trace_csv(path, trace) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "f1"])
        for epoch, value in enumerate(trace, start=1):
            writer.writerow([epoch, repr(float(value))])


def _load_pair(scores_path, labels_path, header: bool) -> Dataset:
    scores = load_matrix(scores_path, "scores", header=header)
    labels = load_matrix(labels_path, "labels", header=header)
    return pair_dataset(scores, labels)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def _cmd_optimize(args) -> int:
    if (args.scores_eval is None) != (args.labels_eval is None):
        raise UsageError("--scores-eval and --labels-eval must be given together")
    val = _load_pair(args.scores_val, args.labels_val, args.header)
    result, method_cfg = _run_method(args.method, val, args)
    save_thresholds(result.thresholds, args.out_thresholds)
    if args.trace_csv is not None:
        _write_trace_csv(args.trace_csv, result.trace)

    empty = args.empty_class_score
    f1_val = f1_at_thresholds(val.scores, result.thresholds, val.labels,
                              args.metric, empty=empty)
    report = {
        "report_version": REPORT_VERSION,
        "command": "optimize",
        "method": args.method,
        "metric": args.metric,
        "f1_val": f1_val,
        "thresholds_path": str(args.out_thresholds),
        "epochs_run": result.epochs_run,
        "elapsed_seconds": result.elapsed,
        "config_echo": {
            "scores_val": str(args.scores_val),
            "labels_val": str(args.labels_val),
            "scores_eval": None if args.scores_eval is None else str(args.scores_eval),
            "labels_eval": None if args.labels_eval is None else str(args.labels_eval),
            "method": args.method,
            "metric": args.metric,
            "seed": args.seed,
            "header": bool(args.header),
            "empty_class_score": empty,
            "out_thresholds": str(args.out_thresholds),
            "trace_csv": None if args.trace_csv is None else str(args.trace_csv),
            "method_config": method_cfg,
        },
    }
    line = f"optimize {args.method} {args.metric}: f1_val={f1_val:.6f}"
    if args.scores_eval is not None:
        ev = _load_pair(args.scores_eval, args.labels_eval, args.header)
        if ev.n_classes != val.n_classes:
            raise DataValidationError(
                f"eval data has {ev.n_classes} classes, val data has {val.n_classes}"
            )
        pred = binarize(ev.scores, result.thresholds)
        precision, recall = micro_precision_recall(pred, ev.labels)
        f1_eval = f1_at_thresholds(ev.scores, result.thresholds, ev.labels,
                                   args.metric, empty=empty)
        report["f1_eval"] = f1_eval
        report["precision_eval"] = precision
        report["recall_eval"] = recall
        line += f" f1_eval={f1_eval:.6f}"
    _emit_report(report, args.report)
    print(f"{line} thresholds={args.out_thresholds}")
    return 0


def _cmd_evaluate(args) -> int:
    data = _load_pair(args.scores, args.labels, args.header)
    thresholds = load_thresholds(args.thresholds, n_classes=data.n_classes)
    empty = args.empty_class_score
    pred = binarize(data.scores, thresholds)
    precision, recall = micro_precision_recall(pred, data.labels)
    f1_micro = f1_at_thresholds(data.scores, thresholds, data.labels, "micro", empty=empty)
    f1_macro = f1_at_thresholds(data.scores, thresholds, data.labels, "macro", empty=empty)
    report = {
        "report_version": REPORT_VERSION,
        "command": "evaluate",
        "f1_micro": f1_micro,
        "f1_macro": f1_macro,
        "precision_micro": precision,
        "recall_micro": recall,
        "n_instances": data.n_instances,
        "n_classes": data.n_classes,
        "thresholds_path": str(args.thresholds),
        "config_echo": {
            "scores": str(args.scores),
            "labels": str(args.labels),
            "thresholds": str(args.thresholds),
            "header": bool(args.header),
            "empty_class_score": empty,
        },
    }
    _emit_report(report, args.report)
    print(f"evaluate: f1_micro={f1_micro:.6f} f1_macro={f1_macro:.6f} "
          f"precision_micro={precision:.6f} recall_micro={recall:.6f}")
    return 0


def _cmd_gradcheck(args) -> int:
    if args.trials < 0:
        raise UsageError(f"--trials must be >= 0, got {args.trials}")
    slopes = (5.0, 20.0, 50.0) if args.slope is None else (float(args.slope),)
    result = run_gradient_check(
        n_max=args.n,
        c_max=args.c,
        trials=args.trials,
        slopes=slopes,
        tolerance=args.tolerance,
        seed=args.seed,
    )
    if args.trials == 0:
        print("gradcheck: no trials requested; pass is vacuous", file=sys.stderr)
    report = {
        "report_version": REPORT_VERSION,
        "command": "gradcheck",
        "passed": result.passed,
        "trials": result.trials,
        "coordinates": result.coordinates,
        "failures": result.failures,
        "worst_rel_err": result.worst_rel_err,
        "worst_abs_err": result.worst_abs_err,
        "config_echo": {
            "n": args.n,
            "c": args.c,
            "trials": args.trials,
            "slopes": list(slopes),
            "tolerance": args.tolerance,
            "abs_floor": result.abs_floor,
            "seed": args.seed,
        },
    }
    _emit_report(report, args.report)
    status = "PASS" if result.passed else "FAIL"
    print(f"gradcheck: {status} trials={result.trials} coordinates={result.coordinates} "
          f"failures={result.failures} worst_rel_err={result.worst_rel_err:.3e} "
          f"worst_abs_err={result.worst_abs_err:.3e}")
    return 0 if result.passed else 1


def _cmd_benchmark(args) -> int:
    cells = args.n * args.c
    if cells > args.max_cells:
        raise ResourceGuardError(
            f"requested {args.n}x{args.c} = {cells} cells exceeds the cap of {args.max_cells}"
        )
    cfg = SyntheticConfig(n_instances=args.n, n_classes=args.c,
                          noise=args.noise, seed=args.seed)
    data = make_synthetic(cfg).dataset
    result, method_cfg = _run_method(args.method, data, args)
    f1_fit = f1_at_thresholds(data.scores, result.thresholds, data.labels, args.metric)
    f1_default = f1_at_thresholds(
        data.scores, default_thresholds(data.n_classes, 0.5), data.labels, args.metric
    )
    epochs_per_second = (
        result.epochs_run / result.elapsed if result.epochs_run and result.elapsed > 0 else None
    )
    report = {
        "report_version": REPORT_VERSION,
        "command": "benchmark",
        "method": args.method,
        "metric": args.metric,
        "n": args.n,
        "c": args.c,
        "f1": f1_fit,
        "f1_default": f1_default,
        "epochs_run": result.epochs_run,
        "elapsed_seconds": result.elapsed,
        "epochs_per_second": epochs_per_second,
        "config_echo": {
            "n": args.n,
            "c": args.c,
            "noise": args.noise,
            "seed": args.seed,
            "method": args.method,
            "metric": args.metric,
            "max_cells": args.max_cells,
            "method_config": method_cfg,
        },
    }
    _emit_report(report, args.report)
    eps = "n/a" if epochs_per_second is None else f"{epochs_per_second:.2f}"
    print(f"benchmark {args.method} n={args.n} c={args.c}: "
          f"elapsed={result.elapsed:.3f}s epochs_per_s={eps} "
          f"f1={f1_fit:.6f} f1_default={f1_default:.6f}")
    return 0


def _cmd_kfold(args) -> int:
    data = _load_pair(args.scores, args.labels, args.header)
    pairs = kfold_split(data, args.k, args.seed)
    empty = args.empty_class_score
    fold_reports = []
    eval_scores = []
    elapsed = 0.0
    method_cfg: dict = {}
    for fold, (val, ev) in enumerate(pairs):
        result, method_cfg = _run_method(args.method, val, args)
        f1_val = f1_at_thresholds(val.scores, result.thresholds, val.labels,
                                  args.metric, empty=empty)
        f1_eval = f1_at_thresholds(ev.scores, result.thresholds, ev.labels,
                                   args.metric, empty=empty)
        fold_reports.append({
            "fold": fold,
            "n_val": val.n_instances,
            "n_eval": ev.n_instances,
            "f1_val": f1_val,
            "f1_eval": f1_eval,
        })
        eval_scores.append(f1_eval)
        elapsed += result.elapsed
    mean = float(np.mean(eval_scores))
    std = float(np.std(eval_scores))
    report = {
        "report_version": REPORT_VERSION,
        "command": "kfold",
        "method": args.method,
        "metric": args.metric,
        "k": args.k,
        "fold_reports": fold_reports,
        "f1_eval_mean": mean,
        "f1_eval_std": std,
        "elapsed_seconds": elapsed,
        "config_echo": {
            "scores": str(args.scores),
            "labels": str(args.labels),
            "k": args.k,
            "method": args.method,
            "metric": args.metric,
            "seed": args.seed,
            "header": bool(args.header),
            "empty_class_score": empty,
            "method_config": method_cfg,
        },
    }
    _emit_report(report, args.report)
    print(f"kfold k={args.k} {args.method} {args.metric}: "
          f"f1_eval_mean={mean:.6f} f1_eval_std={std:.6f}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else 0
    if not hasattr(args, "func"):
        parser.print_usage(sys.stderr)
        print(f"{parser.prog}: error: a subcommand is required", file=sys.stderr)
        return 1
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"{parser.prog}: error: {exc}", file=sys.stderr)
        return 1
    except DataValidationError as exc:
        print(f"{parser.prog}: data error: {exc}", file=sys.stderr)
        return 2
    except ResourceGuardError as exc:
        print(f"{parser.prog}: resource guard: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"{parser.prog}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
