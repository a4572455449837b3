"""Command-line front end.

Exit codes: 0 success, 2 bad flags, 3 data errors (missing/non-numeric
columns, dimension mismatch, degenerate t-test), 4 training divergence.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path
from statistics import median_low

import numpy as np

from . import __version__
from .core import Dataset, TrainConfig
from .data import DataError, generate_synthetic, load_csv, make_spec, save_csv
from .evaluation import (DegenerateTestError, format_node_report, mae, node_error_report,
                         paired_t_test, rmse)
from .inference import predict_batch, predict_hard_batch
from .modelfile import ModelFileError, load_model, save_model
from .numerics import DivergenceError, ShapeError
from .pipeline import METHOD_NAMES, compare_methods
from .tree import build_tree

EXIT_FLAGS, EXIT_DATA, EXIT_DIVERGED = 2, 3, 4


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _open_unit(s: str) -> float:
    v = float(s)
    if not 0.0 < v < 1.0:
        raise argparse.ArgumentTypeError(f"must lie strictly between 0 and 1, got {s}")
    return v


def _positive_float(s: str) -> float:
    v = float(s)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {s}")
    return v


def _positive_int(s: str) -> int:
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {s}")
    return v


def _nonneg_float(s: str) -> float:
    v = float(s)
    if v < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {s}")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nrt", description="Neural regression trees.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="grow a tree and write a model file")
    t.add_argument("--data", required=True)
    t.add_argument("--response-col", required=True)
    t.add_argument("--method", choices=["scan", "gradient"], default="scan")
    t.add_argument("--penalty", choices=["entropy", "gini", "median"],
                   help="default: entropy for scan, median for gradient")
    t.add_argument("--lambda", dest="lam", type=_open_unit, default=0.5)
    t.add_argument("--beta", type=_positive_float, default=10.0)
    t.add_argument("--max-depth", type=_positive_int, default=3)
    t.add_argument("--min-leaf", type=int, default=5)
    t.add_argument("--epochs", type=_positive_int, default=200)
    t.add_argument("--lr", type=_positive_float, default=0.001)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--seeds", type=_positive_int, default=1)
    t.add_argument("--dev")
    t.add_argument("--out", required=True)

    pr = sub.add_parser("predict", help="write one prediction per input row")
    pr.add_argument("--model", required=True)
    pr.add_argument("--data", required=True)
    pr.add_argument("--mode", choices=["soft", "hard"], default="soft")
    pr.add_argument("--out", required=True)

    ev = sub.add_parser("evaluate", help="MAE/RMSE on labelled data")
    ev.add_argument("--model", required=True)
    ev.add_argument("--data", required=True)
    ev.add_argument("--mode", choices=["soft", "hard"], default="soft")
    ev.add_argument("--compare-predictions",
                    help="CSV with a 'prediction' column from a competing method")

    an = sub.add_parser("analyze", help="per-node error report")
    an.add_argument("--model", required=True)
    an.add_argument("--data", required=True)
    an.add_argument("--json-out")

    sy = sub.add_parser("synth", help="write a regime-structured synthetic dataset")
    sy.add_argument("--regimes", type=_positive_int, required=True)
    sy.add_argument("--n", type=_positive_int, required=True)
    sy.add_argument("--dim", type=_positive_int, required=True)
    sy.add_argument("--noise", type=_nonneg_float, required=True)
    sy.add_argument("--seed", type=int, default=0)
    sy.add_argument("--out", required=True)

    co = sub.add_parser("compare", help="NRT against baselines on shared splits")
    co.add_argument("--data", required=True)
    co.add_argument("--response-col", required=True)
    co.add_argument("--baselines", default="cart,mlp,nrt-scan")
    co.add_argument("--seeds", type=_positive_int, default=1)
    return p


def _load(path, response_col) -> Dataset:
    try:
        return load_csv(path, response_col)
    except (OSError, DataError) as exc:
        raise CliError(EXIT_DATA, str(exc)) from None


def _load_model(path):
    try:
        return load_model(path)
    except (OSError, ModelFileError, KeyError, ValueError) as exc:
        raise CliError(EXIT_DATA, f"cannot read model {path}: {exc}") from None


def _model_inputs(model, path, need_response: bool) -> Dataset:
    """Read ``path`` and pick the model's feature columns (by name when known)."""
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            header = [h.strip() for h in next(csv.reader(fh), [])]
    except OSError as exc:
        raise CliError(EXIT_DATA, str(exc)) from None
    resp = model.response_name if model.response_name in header else None
    if need_response and resp is None:
        raise CliError(EXIT_DATA, f"{path}: response column {model.response_name!r} not found")
    d = _load(path, resp)
    if model.feature_names and d.feature_names and set(model.feature_names) <= set(d.feature_names):
        cols = [d.feature_names.index(n) for n in model.feature_names]
        d = Dataset(d.X[:, cols], d.y, list(model.feature_names))
    if d.dim != model.dim:
        raise CliError(EXIT_DATA, f"dimension mismatch: model expects {model.dim} features, "
                                  f"data has {d.dim}")
    return d


def cmd_train(args) -> int:
    if args.min_leaf < 2:
        raise CliError(EXIT_FLAGS, "--min-leaf must be >= 2")
    penalty = args.penalty or ("median" if args.method == "gradient" else "entropy")
    try:
        base = TrainConfig(lam=args.lam, beta=args.beta, method=args.method, penalty=penalty,
                           max_depth=args.max_depth, min_node_size=args.min_leaf,
                           epochs_per_node=args.epochs, learning_rate=args.lr, seed=args.seed,
                           num_seeds=args.seeds)
    except ValueError as exc:
        raise CliError(EXIT_FLAGS, str(exc)) from None
    train = _load(args.data, args.response_col)
    dev = _load(args.dev, args.response_col) if args.dev else None
    if len(train) == 0:
        raise CliError(EXIT_DATA, f"{args.data}: no data rows")
    if dev is not None and dev.dim != train.dim:
        raise CliError(EXIT_DATA, f"dev data has {dev.dim} features, train has {train.dim}")
    ref = dev if dev is not None and len(dev) else train
    runs = []
    for k in range(args.seeds):
        cfg = TrainConfig(**{**base.to_dict(), "seed": args.seed + k})
        try:
            model = build_tree(train, dev, cfg)
        except DivergenceError as exc:
            raise CliError(EXIT_DIVERGED, f"training diverged (seed {cfg.seed}): {exc}") from None
        model.response_name = args.response_col
        score = mae(predict_batch(model, ref.X), ref.y)
        runs.append((score, k, model))
        if args.seeds > 1:
            print(f"seed {cfg.seed}: MAE {score:.6g}")
    chosen = median_low(runs)[2] if len(runs) > 1 else runs[0][2]
    save_model(chosen, args.out)
    print(f"depth {chosen.depth}, {chosen.leaf_count} leaves -> {args.out}")
    for rec in chosen.training_log:
        print(f"node {rec['node_id']:>3} depth {rec['depth']} n={rec['n']:<6} "
              f"t={rec['threshold']:.6g} objective={rec['objective']:.6g} "
              f"class_loss={rec['class_loss']:.6g} penalty={rec['penalty']:.6g}")
    return 0


def cmd_predict(args) -> int:
    model = _load_model(args.model)
    d = _model_inputs(model, args.data, need_response=False)
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        if args.mode == "hard":
            values, leaves = predict_hard_batch(model, d.X)
            w.writerow(["prediction", "leaf"])
            for v, leaf in zip(values, leaves):
                w.writerow([repr(float(v)), int(leaf)])
        else:
            w.writerow(["prediction"])
            for v in predict_batch(model, d.X, "soft"):
                w.writerow([repr(float(v))])
    return 0


def _read_predictions(path) -> np.ndarray:
    d = _load(path, "prediction")
    return d.y


def cmd_evaluate(args) -> int:
    model = _load_model(args.model)
    d = _model_inputs(model, args.data, need_response=True)
    pred = predict_batch(model, d.X, args.mode)
    print(f"MAE {mae(pred, d.y):.10g}")
    print(f"RMSE {rmse(pred, d.y):.10g}")
    print(f"n {len(d)}")
    if args.compare_predictions:
        other = _read_predictions(args.compare_predictions)
        if other.size != len(d):
            raise CliError(EXIT_DATA, f"{args.compare_predictions}: {other.size} predictions "
                                      f"for {len(d)} samples")
        try:
            res = paired_t_test(np.abs(other - d.y), np.abs(pred - d.y))
        except DegenerateTestError as exc:
            raise CliError(EXIT_DATA, f"paired t-test: {exc}") from None
        print(f"t {res.t:.10g}")
        print(f"df {res.df}")
        print(f"p {res.p:.10g}")
    return 0


def cmd_analyze(args) -> int:
    model = _load_model(args.model)
    d = _model_inputs(model, args.data, need_response=True)
    if len(d) == 0:
        raise CliError(EXIT_DATA, f"{args.data}: no data rows")
    report = node_error_report(model, d)
    print(format_node_report(report))
    if args.json_out:
        Path(args.json_out).write_text(json.dumps(report.to_dict(), indent=1), encoding="utf-8")
    return 0


def cmd_synth(args) -> int:
    try:
        spec = make_spec(args.regimes, args.n, args.dim, args.noise, args.seed)
    except ValueError as exc:
        raise CliError(EXIT_FLAGS, str(exc)) from None
    d, truth = generate_synthetic(spec)
    out = Path(args.out)
    save_csv(d, out, "y")
    truth_path = out.with_suffix(".truth.json")
    truth_path.write_text(truth.to_json(), encoding="utf-8")
    print(f"wrote {len(d)} rows to {out} and ground truth to {truth_path}")
    return 0


def cmd_compare(args) -> int:
    methods = [m.strip() for m in args.baselines.split(",") if m.strip()]
    unknown = [m for m in methods if m not in METHOD_NAMES]
    if unknown or not methods:
        raise CliError(EXIT_FLAGS, f"unknown baseline(s) {unknown}; choose from {', '.join(METHOD_NAMES)}")
    d = _load(args.data, args.response_col)
    try:
        result = compare_methods(d, methods, args.seeds)
    except DivergenceError as exc:
        raise CliError(EXIT_DIVERGED, f"training diverged: {exc}") from None
    print(result.format())
    return 0


COMMANDS = {"train": cmd_train, "predict": cmd_predict, "evaluate": cmd_evaluate,
            "analyze": cmd_analyze, "synth": cmd_synth, "compare": cmd_compare}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except ShapeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
