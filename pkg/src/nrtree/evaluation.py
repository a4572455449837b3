"""Regression metrics, the paired t-test and per-node error analysis."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from .core import Dataset, EvalReport
from .tree import Internal, Leaf, Node, NrtModel


def _pair(pred, truth) -> tuple[np.ndarray, np.ndarray]:
    p = np.asarray(pred, dtype=float).reshape(-1)
    t = np.asarray(truth, dtype=float).reshape(-1)
    if p.shape != t.shape:
        raise ValueError(f"length mismatch: {p.size} predictions vs {t.size} truths")
    if p.size == 0:
        raise ValueError("metrics need at least one prediction")
    return p, t


def mae(pred, truth) -> float:
    p, t = _pair(pred, truth)
    return float(np.mean(np.abs(p - t)))


def rmse(pred, truth) -> float:
    p, t = _pair(pred, truth)
    return float(np.sqrt(np.mean((p - t) ** 2)))


def evaluate(pred, truth) -> EvalReport:
    p, t = _pair(pred, truth)
    err = np.abs(p - t)
    return EvalReport(float(err.mean()), float(np.sqrt(np.mean(err * err))), int(err.size),
                      err.tolist())


# --- Student t distribution -------------------------------------------------

def _betacf(a: float, b: float, x: float, tol: float = 1e-16, max_iter: int = 10_000) -> float:
    """Continued fraction for the incomplete beta function (modified Lentz)."""
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    d = tiny if abs(d) < tiny else d
    d = 1.0 / d
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = tiny if abs(d) < tiny else d
        c = 1.0 + aa / c
        c = tiny if abs(c) < tiny else c
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = tiny if abs(d) < tiny else d
        c = 1.0 + aa / c
        c = tiny if abs(c) < tiny else c
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < tol:
            return h
    raise ArithmeticError("incomplete beta continued fraction did not converge")


def betainc(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta I_x(a, b)."""
    if not 0.0 <= x <= 1.0:
        raise ValueError("x must lie in [0, 1]")
    if x in (0.0, 1.0):
        return x
    log_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                 + a * math.log(x) + b * math.log1p(-x))
    if x < (a + 1.0) / (a + b + 2.0):
        return math.exp(log_front) * _betacf(a, b, x) / a
    return 1.0 - math.exp(log_front) * _betacf(b, a, 1.0 - x) / b


def t_sf(t: float, df: float) -> float:
    """Upper tail P(T >= t) of Student's t with ``df`` degrees of freedom."""
    x = df / (df + t * t)
    half_tail = 0.5 * betainc(0.5 * df, 0.5, x)
    return half_tail if t >= 0 else 1.0 - half_tail


@dataclass
class TTestResult:
    t: float
    df: int
    p: float


class DegenerateTestError(ValueError):
    """Paired differences have zero variance, so the t statistic is undefined."""


def paired_t_test(errors_a, errors_b) -> TTestResult:
    """One-sided paired t-test that ``errors_b`` are smaller than ``errors_a``."""
    a = np.asarray(errors_a, dtype=float)
    b = np.asarray(errors_b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("paired samples must be 1-d and of equal length")
    n = a.size
    if n < 2:
        raise ValueError("paired t-test needs at least two pairs")
    d = a - b
    sd = float(np.std(d, ddof=1))
    if sd == 0.0 or sd <= 1e-14 * float(np.max(np.abs(d))):
        raise DegenerateTestError("differences have zero variance")
    t = float(np.mean(d)) / (sd / math.sqrt(n))
    return TTestResult(t, n - 1, min(1.0, max(0.0, t_sf(t, n - 1))))


# --- multi-seed protocol -----------------------------------------------------

Predictor = Callable[[np.ndarray], np.ndarray]
Builder = Callable[[Dataset, "Dataset | None", int], Predictor]


class SeedRunError(RuntimeError):
    def __init__(self, seed_index: int, seed: int, cause: Exception):
        super().__init__(f"run {seed_index} (seed {seed}) failed: {cause}")
        self.seed_index = seed_index
        self.seed = seed


@dataclass
class MultiSeedResult:
    mae_mean: float
    mae_std: float
    rmse_mean: float
    rmse_std: float
    runs: list[EvalReport] = field(default_factory=list, repr=False)
    predictions: list[np.ndarray] = field(default_factory=list, repr=False)


def multi_seed_eval(builder: Builder, train: Dataset, dev: Dataset | None, test: Dataset,
                    num_seeds: int, seed0: int = 0) -> MultiSeedResult:
    """Train with seeds ``seed0 .. seed0+num_seeds-1`` and aggregate test metrics."""
    if num_seeds < 1:
        raise ValueError("num_seeds must be >= 1")
    runs, preds = [], []
    for k in range(num_seeds):
        seed = seed0 + k
        try:
            predict = builder(train, dev, seed)
            p = np.asarray(predict(test.X), dtype=float)
        except Exception as exc:
            raise SeedRunError(k, seed, exc) from exc
        runs.append(evaluate(p, test.y))
        preds.append(p)
    maes = np.array([r.mae for r in runs])
    rmses = np.array([r.rmse for r in runs])
    ddof = 1 if num_seeds > 1 else 0
    return MultiSeedResult(float(maes.mean()), float(maes.std(ddof=ddof)),
                           float(rmses.mean()), float(rmses.std(ddof=ddof)), runs, preds)


# --- per-node error analysis -------------------------------------------------

@dataclass
class NodeErrorEntry:
    node_id: int
    depth: int
    threshold: float
    n: int
    mae: float
    left_n: int
    left_mae: float
    right_n: int
    right_mae: float


@dataclass
class NodeErrorReport:
    overall_mae: float
    n: int
    nodes: list[NodeErrorEntry] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def _subset_mae(err: np.ndarray, rows: np.ndarray) -> float:
    return float(err[rows].mean()) if rows.size else float("nan")


def node_error_report(model: NrtModel, data: Dataset) -> NodeErrorReport:
    """Soft-prediction MAE of every subtree over the samples whose true response falls in it."""
    from .inference import predict_batch

    if len(data) == 0:
        raise ValueError("node error report needs data")
    err = np.abs(predict_batch(model, data.X, "soft") - data.y)
    entries: list[NodeErrorEntry] = []

    def walk(node: Node, rows: np.ndarray, depth: int) -> None:
        if isinstance(node, Leaf):
            return
        go_right = data.y[rows] >= node.threshold
        left_rows, right_rows = rows[~go_right], rows[go_right]
        entries.append(NodeErrorEntry(node.id, depth, node.threshold, int(rows.size),
                                      _subset_mae(err, rows),
                                      int(left_rows.size), _subset_mae(err, left_rows),
                                      int(right_rows.size), _subset_mae(err, right_rows)))
        walk(node.left, left_rows, depth + 1)
        walk(node.right, right_rows, depth + 1)

    walk(model.root, np.arange(len(data)), 0)
    return NodeErrorReport(float(err.mean()), len(data), entries)


def format_node_report(report: NodeErrorReport) -> str:
    """Indented text tree: one line per internal node with its children's MAE."""
    lines = [f"overall MAE {report.overall_mae:.6g} (n={report.n})"]
    for e in report.nodes:
        pad = "  " * (e.depth + 1)
        lines.append(f"{pad}node {e.node_id}: t={e.threshold:.6g} MAE={e.mae:.6g} (n={e.n}) "
                     f"| left MAE={e.left_mae:.6g} (n={e.left_n}) "
                     f"| right MAE={e.right_mae:.6g} (n={e.right_n})")
    return "\n".join(lines)
