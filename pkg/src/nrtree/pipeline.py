"""Named training procedures and the shared-split method comparison."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .baselines import cart_fit, cart_predict_batch, mlp_fit, mlp_predict
from .core import Dataset, TrainConfig
from .data import stratified_split
from .evaluation import DegenerateTestError, TTestResult, evaluate, paired_t_test
from .inference import predict_batch
from .tree import build_tree

METHOD_NAMES = ("mean", "cart", "mlp", "nrt-scan", "nrt-gradient", "nrt-linear")

NRT_CONFIGS = {
    "nrt-scan": dict(method="scan", penalty="entropy"),
    "nrt-gradient": dict(method="gradient", penalty="median"),
    "nrt-linear": dict(method="scan", penalty="entropy", classifier_kind="linear_margin",
                       learning_rate=0.01),
}


def fit_cart_tuned(train: Dataset, dev: Dataset | None, max_depths=range(1, 9), min_leaf: int = 5):
    """CART with depth picked on the dev set (train MAE if there is no dev set)."""
    ref = dev if dev is not None and len(dev) else train
    best = None
    for depth in max_depths:
        model = cart_fit(train, depth, min_leaf)
        err = float(np.mean(np.abs(cart_predict_batch(model, ref.X) - ref.y)))
        if best is None or err < best[0]:
            best = (err, model)
    return best[1]


def make_builder(name: str, base: TrainConfig | None = None):
    """Builder ``(train, dev, seed) -> predict(X)`` for a named method."""
    if name not in METHOD_NAMES:
        raise ValueError(f"unknown method {name!r}; choose from {', '.join(METHOD_NAMES)}")
    if name == "mean":
        def build_mean(train, dev, seed):
            mu = float(train.y.mean())
            return lambda X: np.full(len(X), mu)
        return build_mean
    if name == "cart":
        def build_cart(train, dev, seed):
            model = fit_cart_tuned(train, dev)
            return lambda X: cart_predict_batch(model, X)
        return build_cart
    if name == "mlp":
        def build_mlp(train, dev, seed):
            model = mlp_fit(train, (64,), lr=0.01, epochs=500, seed=seed)
            return lambda X: mlp_predict(model, X)
        return build_mlp

    base = base or TrainConfig()

    def build_nrt(train, dev, seed):
        cfg = replace(base, seed=seed, **NRT_CONFIGS[name])
        model = build_tree(train, dev, cfg)
        return lambda X: predict_batch(model, X, "soft")
    return build_nrt


@dataclass
class ComparisonRow:
    method: str
    mae: float
    rmse: float
    mae_std: float
    errors: np.ndarray = field(repr=False)


@dataclass
class Comparison:
    rows: list[ComparisonRow]
    tests: list[tuple[str, str, TTestResult | None]]

    def format(self) -> str:
        lines = [f"{'method':<14}{'MAE':>10}{'RMSE':>10}{'MAE sd':>10}"]
        for r in self.rows:
            lines.append(f"{r.method:<14}{r.mae:>10.4f}{r.rmse:>10.4f}{r.mae_std:>10.4f}")
        if self.tests:
            lines.append("")
            lines.append("paired t-tests (one-sided, H1: second method has smaller errors)")
            for a, b, res in self.tests:
                if res is None:
                    lines.append(f"  {a} vs {b}: degenerate (identical errors)")
                else:
                    lines.append(f"  {a} vs {b}: t={res.t:.4f} df={res.df} p={res.p:.4g}")
        return "\n".join(lines)


def compare_methods(d: Dataset, methods, num_seeds: int = 1, fractions=(0.6, 0.2, 0.2),
                    base: TrainConfig | None = None) -> Comparison:
    """Train every method on the same stratified split per seed; errors are paired per test sample."""
    methods = list(methods)
    builders = {m: make_builder(m, base) for m in methods}
    errs: dict[str, list[np.ndarray]] = {m: [] for m in methods}
    for seed in range(num_seeds):
        train, dev, test = stratified_split(d, fractions, 10, seed)
        for m in methods:
            pred = builders[m](train, dev, seed)(test.X)
            errs[m].append(np.abs(np.asarray(pred) - test.y))
    rows = []
    for m in methods:
        reports = [evaluate(e, np.zeros_like(e)) for e in errs[m]]
        maes = np.array([r.mae for r in reports])
        rows.append(ComparisonRow(m, float(maes.mean()),
                                  float(np.mean([r.rmse for r in reports])),
                                  float(maes.std(ddof=1)) if num_seeds > 1 else 0.0,
                                  np.concatenate(errs[m])))
    by_name = {r.method: r for r in rows}
    tests = []
    for nrt in [m for m in methods if m.startswith("nrt")]:
        for other in [m for m in methods if not m.startswith("nrt")]:
            try:
                res = paired_t_test(by_name[other].errors, by_name[nrt].errors)
            except DegenerateTestError:
                res = None
            tests.append((other, nrt, res))
    return Comparison(rows, tests)
