"""Joint choice of a node's response threshold and its classifier.

The node objective is ``lam * E + (1 - lam) * T`` where ``E`` is the mean
classification loss of the node classifier against threshold labels and
``T`` a triviality penalty that discourages thresholds sending everything
to one side.

The entropy and Gini penalties enter the objective as their shortfall from
the balanced maximum (``ln 2 - H`` and ``1/2 - G``). Adding the raw impurity
would reward lopsided splits: at an extreme threshold both the classifier
loss and the impurity go to zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Dataset, TrainConfig
from .numerics import (DivergenceError, NeuralClassifier, bce_loss, clamp_prob, forward,
                       hinge_loss, init_network, score, train)
from .rng import Rng, derive_seed


LN2 = float(np.log(2.0))


class NodeError(ValueError):
    """A node cannot be split (too few samples or constant responses)."""


@dataclass
class NodeSolution:
    threshold: float
    classifier: NeuralClassifier
    objective: float
    class_loss: float
    penalty: float


def hard_label(y, t):
    """1 (right child) where ``y >= t``, else 0."""
    out = (np.asarray(y, dtype=float) >= t).astype(float)
    return int(out) if out.ndim == 0 else out


def soft_label(y, t, beta):
    out = 0.5 * (np.tanh(beta * (np.asarray(y, dtype=float) - t)) + 1.0)
    return float(out) if out.ndim == 0 else out


def soft_label_dt(y, t, beta):
    """Derivative of ``soft_label`` with respect to the threshold."""
    c = np.cosh(np.clip(beta * (np.asarray(y, dtype=float) - t), -350.0, 350.0))
    return -0.5 * beta / (c * c)


def _right_fraction(labels) -> float:
    labels = np.asarray(labels, dtype=float)
    if labels.size == 0:
        raise ValueError("penalty of an empty label list")
    return float(labels.mean())


def entropy_penalty(labels) -> float:
    p = _right_fraction(labels)
    return float(sum(-q * np.log(q) for q in (p, 1.0 - p) if q > 0.0))


def gini_penalty(labels) -> float:
    p = _right_fraction(labels)
    return 2.0 * p * (1.0 - p)


def median_penalty(t: float, responses) -> float:
    r = np.asarray(responses, dtype=float)
    if r.size == 0:
        raise ValueError("median of an empty response list")
    return float((t - np.median(r)) ** 2)


def penalty_value(cfg: TrainConfig, t: float, labels, responses) -> float:
    """Triviality term of the node objective; zero for a perfectly balanced split."""
    if cfg.penalty == "entropy":
        return LN2 - entropy_penalty(labels)
    if cfg.penalty == "gini":
        return 0.5 - gini_penalty(labels)
    return median_penalty(t, responses)


def class_loss(clf: NeuralClassifier, X, labels) -> float:
    """Mean classification loss; hinge for linear-margin classifiers, BCE otherwise."""
    if clf.kind == "linear_margin":
        return float(np.mean(hinge_loss(score(clf, X), 2.0 * np.asarray(labels) - 1.0)))
    return float(np.mean(bce_loss(forward(clf, X), labels)))


def node_objective(d: Dataset, t: float, clf: NeuralClassifier, cfg: TrainConfig,
                   soft: bool = False) -> tuple[float, float, float]:
    """(objective, class_loss, penalty) at threshold ``t`` with hard or soft labels."""
    if len(d) < 2:
        raise NodeError("node objective needs at least two samples")
    if not (d.y.min() < t <= d.y.max()):
        raise NodeError(f"threshold {t} outside response range ({d.y.min()}, {d.y.max()}]")
    labels = soft_label(d.y, t, cfg.beta) if soft else hard_label(d.y, t)
    e = class_loss(clf, d.X, labels)
    pen = penalty_value(cfg, t, labels, d.y)
    return cfg.lam * e + (1.0 - cfg.lam) * pen, e, pen


def _check_splittable(d: Dataset, cfg: TrainConfig) -> None:
    if len(d) < 2 * cfg.min_node_size:
        raise NodeError(f"{len(d)} samples is fewer than 2 * min_node_size = {2 * cfg.min_node_size}")
    if d.y.max() - d.y.min() <= cfg.purity_epsilon:
        raise NodeError("node is pure: responses are all equal")


def candidate_thresholds(y, cap: int | None = None) -> np.ndarray:
    """Midpoints between consecutive distinct responses, optionally thinned to ``cap``.

    Thinning cuts the sample quantile axis into ``cap`` equal buckets and keeps,
    per non-empty bucket, the midpoint of the widest gap between neighbours.
    """
    y = np.asarray(y, dtype=float)
    u = np.unique(y)
    mids = 0.5 * (u[:-1] + u[1:])
    if cap is None or mids.size <= cap:
        return mids
    frac_left = np.searchsorted(np.sort(y), mids, side="left") / len(y)
    bucket = np.minimum((frac_left * cap).astype(int), cap - 1)
    gaps = np.diff(u)
    picks = []
    for b in np.unique(bucket):
        idx = np.flatnonzero(bucket == b)
        picks.append(idx[np.argmax(gaps[idx])])
    return mids[np.array(picks)]


def _layer_dims(dim: int, cfg: TrainConfig) -> list[int]:
    if cfg.classifier_kind == "linear_margin":
        return [dim, 1]
    return [dim, *cfg.layer_sizes, 1]


def fresh_classifier(dim: int, cfg: TrainConfig, node_id: int = 0) -> NeuralClassifier:
    """Initial classifier for a node; every candidate at a node starts from the same draw."""
    rng = Rng(derive_seed(cfg.seed, node_id))
    return init_network(_layer_dims(dim, cfg), rng, cfg.classifier_kind)


def _fit(clf: NeuralClassifier, d: Dataset, labels, cfg: TrainConfig, node_id: int):
    loss = "hinge" if clf.kind == "linear_margin" else "bce"
    rng = Rng(derive_seed(cfg.seed, node_id, 1))
    return train(clf, d.X, labels, loss, cfg.learning_rate, cfg.epochs_per_node,
                 cfg.batch_size, rng)


def fit_candidate(d: Dataset, t: float, cfg: TrainConfig, node_id: int = 0) -> NodeSolution:
    """Train a fresh classifier on hard labels at ``t`` and score it."""
    clf = _fit(fresh_classifier(d.dim, cfg, node_id), d, hard_label(d.y, t), cfg, node_id)
    obj, e, pen = node_objective(d, t, clf, cfg)
    return NodeSolution(float(t), clf, obj, e, pen)


def select_best(solutions: list[NodeSolution], median: float) -> NodeSolution:
    """Minimal objective; exact ties go to the threshold nearest the median."""
    best = min(s.objective for s in solutions)
    tied = [s for s in solutions if s.objective == best]
    return min(tied, key=lambda s: abs(s.threshold - median))


def optimize_node_scan(d: Dataset, cfg: TrainConfig, node_id: int = 0,
                       candidates=None) -> NodeSolution:
    _check_splittable(d, cfg)
    if candidates is None:
        candidates = candidate_thresholds(d.y, cfg.scan_cap)
    sols = [fit_candidate(d, t, cfg, node_id) for t in candidates]
    if not sols:
        raise NodeError("no candidate thresholds")
    for s in sols:
        if not np.isfinite(s.objective):
            raise DivergenceError(f"non-finite objective at threshold {s.threshold}")
    return select_best(sols, float(np.median(d.y)))


def relaxed_objective(d: Dataset, t: float, clf: NeuralClassifier, cfg: TrainConfig) -> float:
    """Soft-label objective with the squared median penalty, smooth in ``t``."""
    p = forward(clf, d.X)
    e = float(np.mean(bce_loss(p, soft_label(d.y, t, cfg.beta))))
    return cfg.lam * e + (1.0 - cfg.lam) * median_penalty(t, d.y)


def relaxed_objective_dt(d: Dataset, t: float, clf: NeuralClassifier, cfg: TrainConfig) -> float:
    """d/dt of ``relaxed_objective`` with the classifier held fixed."""
    p = clamp_prob(forward(clf, d.X))
    # BCE is affine in the target: dBCE/dlabel = log(1-p) - log(p)
    dloss_dlabel = np.log1p(-p) - np.log(p)
    de = float(np.mean(dloss_dlabel * soft_label_dt(d.y, t, cfg.beta)))
    return cfg.lam * de + 2.0 * (1.0 - cfg.lam) * (t - float(np.median(d.y)))


def _threshold_step(d, t, clf, cfg, lo, hi, step) -> float:
    """Gradient steps on t with step halving until the relaxed objective drops."""
    f = relaxed_objective(d, t, clf, cfg)
    for _ in range(cfg.threshold_steps):
        g = relaxed_objective_dt(d, t, clf, cfg)
        if not np.isfinite(g):
            raise DivergenceError("non-finite threshold gradient")
        if g == 0.0:
            break
        eta = step
        for _ in range(40):
            cand = min(max(t - eta * g, lo), hi)
            fc = relaxed_objective(d, cand, clf, cfg)
            if fc <= f:
                break
            eta *= 0.5
        else:
            break
        t, f = cand, fc
    return t


def optimize_node_gradient(d: Dataset, cfg: TrainConfig, node_id: int = 0) -> NodeSolution:
    """Coordinate descent over (classifier, threshold) on the tanh-relaxed objective."""
    _check_splittable(d, cfg)
    if cfg.classifier_kind != "neural":
        raise ValueError("the gradient method trains neural classifiers only")
    y_sorted = np.unique(d.y)
    ymin, ymax = float(y_sorted[0]), float(y_sorted[-1])
    # keep at least one sample strictly on each side
    lo = float(np.nextafter(ymin, np.inf))
    hi = float(np.nextafter(ymax, -np.inf))
    step = cfg.threshold_lr if cfg.threshold_lr is not None else 0.05 * (ymax - ymin)
    t = min(max(float(np.median(d.y)), lo), hi)
    clf = fresh_classifier(d.dim, cfg, node_id)
    rng = Rng(derive_seed(cfg.seed, node_id, 1))
    for _ in range(cfg.coord_descent_rounds):
        train(clf, d.X, soft_label(d.y, t, cfg.beta), "bce", cfg.learning_rate,
              cfg.epochs_per_node, cfg.batch_size, rng)
        t = _threshold_step(d, t, clf, cfg, lo, hi, step)
    obj, e, pen = node_objective(d, t, clf, cfg)
    if not np.isfinite(obj):
        raise DivergenceError("non-finite node objective")
    return NodeSolution(float(t), clf, obj, e, pen)


def optimize_node(d: Dataset, cfg: TrainConfig, node_id: int = 0) -> NodeSolution:
    if cfg.method == "gradient":
        return optimize_node_gradient(d, cfg, node_id)
    return optimize_node_scan(d, cfg, node_id)
