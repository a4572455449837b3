"""Greedy recursive growth of a neural regression tree.

Each internal node splits the *response* range at a learned threshold and
carries a classifier that predicts, from features alone, which side of the
threshold a sample's response lies on. Leaves are the response bins.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterator, Union

import numpy as np

from .core import Bin, Dataset, TrainConfig, split_dataset
from .node_opt import optimize_node
from .numerics import NeuralClassifier

log = logging.getLogger(__name__)


@dataclass
class Leaf:
    id: int
    bin: Bin


@dataclass
class Internal:
    id: int
    threshold: float
    classifier: NeuralClassifier
    left: "Node"
    right: "Node"
    # the node's own interval and training mean, used when the tree is cut back here
    bin: Bin


Node = Union[Leaf, Internal]


@dataclass
class NrtModel:
    root: Node
    dim: int
    config: TrainConfig
    x_mean: np.ndarray
    x_scale: np.ndarray
    training_log: list[dict] = field(default_factory=list)
    feature_names: list[str] | None = None
    response_name: str | None = None

    def standardize(self, X) -> np.ndarray:
        return (np.asarray(X, dtype=float) - self.x_mean) / self.x_scale

    @property
    def depth(self) -> int:
        return _depth(self.root)

    @property
    def leaf_count(self) -> int:
        return sum(1 for n in iter_nodes(self.root) if isinstance(n, Leaf))


def _depth(node: Node) -> int:
    if isinstance(node, Leaf):
        return 0
    return 1 + max(_depth(node.left), _depth(node.right))


def iter_nodes(node: Node) -> Iterator[Node]:
    """Pre-order traversal: parents before children, left subtree before right."""
    stack = [node]
    while stack:
        n = stack.pop()
        yield n
        if isinstance(n, Internal):
            stack.append(n.right)
            stack.append(n.left)


def internal_nodes(model: NrtModel) -> list[Internal]:
    return [n for n in iter_nodes(model.root) if isinstance(n, Internal)]


def leaves_of(model: NrtModel) -> list[Bin]:
    """Leaf bins left to right, i.e. in increasing response order."""
    return [n.bin for n in iter_nodes(model.root) if isinstance(n, Leaf)]


def _make_bin(y: np.ndarray, low: float, high: float, leaf_value: str) -> Bin:
    rep = float(np.mean(y)) if leaf_value == "mean" else 0.5 * (low + high)
    return Bin(low, high, rep, int(y.size))


def _root_interval(y: np.ndarray) -> tuple[float, float]:
    lo, hi = float(y.min()), float(y.max())
    span = hi - lo if hi > lo else max(1.0, abs(lo))
    return lo - 1e-9 * span, hi


class _Grower:
    def __init__(self, cfg: TrainConfig):
        self.cfg = cfg
        self.next_id = 0
        self.log: list[dict] = []

    def grow(self, d: Dataset, low: float, high: float, depth: int) -> Node:
        cfg = self.cfg
        node_id = self.next_id
        self.next_id += 1
        node_bin = _make_bin(d.y, low, high, cfg.leaf_value)
        pure = d.y.max() - d.y.min() <= cfg.purity_epsilon
        if pure or len(d) < 2 * cfg.min_node_size or depth >= cfg.max_depth:
            return Leaf(node_id, node_bin)
        sol = optimize_node(d, cfg, node_id)
        log.debug("node %d: t=%.6g obj=%.6g n=%d", node_id, sol.threshold, sol.objective, len(d))
        self.log.append({"node_id": node_id, "depth": depth, "threshold": sol.threshold,
                         "objective": sol.objective, "class_loss": sol.class_loss,
                         "penalty": sol.penalty, "n": len(d)})
        left_d, right_d = split_dataset(d, sol.threshold)
        left = self.grow(left_d, low, sol.threshold, depth + 1)
        right = self.grow(right_d, sol.threshold, high, depth + 1)
        return Internal(node_id, sol.threshold, sol.classifier, left, right, node_bin)


def truncate(model: NrtModel, depth: int) -> NrtModel:
    """Copy of ``model`` cut back to ``depth`` levels, with ids renumbered in pre-order."""
    counter = iter(range(1 << 30))
    id_map: dict[int, int] = {}

    def cut(node: Node, level: int) -> Node:
        new_id = next(counter)
        if isinstance(node, Leaf) or level >= depth:
            return Leaf(new_id, node.bin)
        id_map[node.id] = new_id
        left = cut(node.left, level + 1)
        right = cut(node.right, level + 1)
        return Internal(new_id, node.threshold, node.classifier, left, right, node.bin)

    root = cut(model.root, 0)
    new_log = [dict(rec, node_id=id_map[rec["node_id"]])
               for rec in model.training_log if rec["node_id"] in id_map]
    return NrtModel(root, model.dim, model.config, model.x_mean, model.x_scale, new_log,
                    model.feature_names, model.response_name)


def build_tree(train: Dataset, dev: Dataset | None, cfg: TrainConfig) -> NrtModel:
    """Grow a tree on ``train``; with ``dev`` given, keep only levels that improve dev MAE."""
    if len(train) == 0:
        raise ValueError("empty training set")
    if dev is not None and len(dev) and dev.dim != train.dim:
        raise ValueError(f"dev dim {dev.dim} != train dim {train.dim}")
    x_mean = train.X.mean(axis=0)
    x_scale = train.X.std(axis=0)
    x_scale[x_scale == 0] = 1.0
    scaled = Dataset((train.X - x_mean) / x_scale, train.y)
    grower = _Grower(cfg)
    low, high = _root_interval(train.y)
    root = grower.grow(scaled, low, high, 0)
    model = NrtModel(root, train.dim, cfg, x_mean, x_scale, grower.log,
                     train.feature_names, None)
    if dev is None or len(dev) == 0 or model.depth == 0:
        return model
    return _dev_rollback(model, dev)


def _dev_rollback(model: NrtModel, dev: Dataset) -> NrtModel:
    from .inference import predict_batch

    def dev_mae(m):
        return float(np.mean(np.abs(predict_batch(m, dev.X, "soft") - dev.y)))

    best_depth, best = 0, dev_mae(truncate(model, 0))
    for k in range(1, model.depth + 1):
        score = dev_mae(truncate(model, k))
        log.debug("dev MAE at depth %d: %.6g", k, score)
        if score < best - model.config.dev_saturation_tol:
            best_depth, best = k, score
        else:
            break
    return model if best_depth == model.depth else truncate(model, best_depth)
