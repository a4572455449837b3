"""Feature-space regression baselines: a CART tree and an MLP regressor."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import Dataset
from .numerics import (DivergenceError, NeuralClassifier, ShapeError, batch_loss, init_network,
                       score, train)
from .rng import Rng


@dataclass
class CartNode:
    value: float
    n: int
    feature: int | None = None
    split: float | None = None
    left: "CartNode | None" = None
    right: "CartNode | None" = None

    @property
    def is_leaf(self) -> bool:
        return self.feature is None


@dataclass
class CartModel:
    root: CartNode
    dim: int
    max_depth: int
    min_leaf: int

    @property
    def depth(self) -> int:
        def d(n):
            return 0 if n.is_leaf else 1 + max(d(n.left), d(n.right))
        return d(self.root)

    def leaves(self) -> list[CartNode]:
        out, stack = [], [self.root]
        while stack:
            n = stack.pop()
            if n.is_leaf:
                out.append(n)
            else:
                stack += [n.right, n.left]
        return out


def best_split(X: np.ndarray, y: np.ndarray, min_leaf: int):
    """Lowest weighted child SSE over all axis-aligned midpoint splits.

    Returns (sse, feature, value) or None. Ties keep the lowest feature index,
    then the lowest split value.
    """
    n, dim = X.shape
    best = None
    for j in range(dim):
        order = np.argsort(X[:, j], kind="stable")
        xs, ys = X[order, j], y[order]
        csum = np.cumsum(ys)
        csq = np.cumsum(ys * ys)
        total, total_sq = csum[-1], csq[-1]
        # split after position i (left = first i+1 samples)
        i = np.arange(min_leaf - 1, n - min_leaf)
        if i.size == 0:
            continue
        i = i[xs[i] < xs[i + 1]]
        if i.size == 0:
            continue
        nl = i + 1.0
        nr = n - nl
        sse = (csq[i] - csum[i] ** 2 / nl) + ((total_sq - csq[i]) - (total - csum[i]) ** 2 / nr)
        k = int(np.argmin(sse))
        if best is None or sse[k] < best[0]:
            best = (float(sse[k]), j, 0.5 * (xs[i[k]] + xs[i[k] + 1]))
    return best


def cart_fit(train: Dataset, max_depth: int = 6, min_leaf: int = 5) -> CartModel:
    if len(train) == 0:
        raise ValueError("empty training set")
    if min_leaf < 1 or max_depth < 0:
        raise ValueError("min_leaf must be >= 1 and max_depth >= 0")

    def grow(X, y, depth):
        node = CartNode(float(y.mean()), int(y.size))
        if depth >= max_depth or y.size < 2 * min_leaf or np.ptp(y) == 0:
            return node
        found = best_split(X, y, min_leaf)
        if found is None:
            return node
        sse, j, v = found
        parent_sse = float(((y - y.mean()) ** 2).sum())
        if sse >= parent_sse:
            return node
        mask = X[:, j] <= v
        node.feature, node.split = j, float(v)
        node.left = grow(X[mask], y[mask], depth + 1)
        node.right = grow(X[~mask], y[~mask], depth + 1)
        return node

    return CartModel(grow(train.X, train.y, 0), train.dim, max_depth, min_leaf)


def cart_predict(model: CartModel, x) -> float:
    x = np.asarray(x, dtype=float)
    if x.shape != (model.dim,):
        raise ShapeError(f"expected {model.dim} features, got {x.shape}")
    node = model.root
    while not node.is_leaf:
        node = node.left if x[node.feature] <= node.split else node.right
    return node.value


def cart_predict_batch(model: CartModel, X) -> np.ndarray:
    return np.array([cart_predict(model, x) for x in np.asarray(X, dtype=float)])


@dataclass
class MlpRegressor:
    """ReLU network with a linear output; inputs and targets are standardized internally."""

    net: NeuralClassifier
    x_mean: np.ndarray
    x_scale: np.ndarray
    y_mean: float = 0.0
    y_scale: float = 1.0

    @classmethod
    def from_net(cls, net: NeuralClassifier) -> "MlpRegressor":
        d = net.input_dim
        return cls(net, np.zeros(d), np.ones(d))


def mlp_fit(train: Dataset, layer_sizes: Sequence[int] = (64,), lr: float = 0.01,
            epochs: int = 500, seed: int = 0, batch_size: int | None = None) -> MlpRegressor:
    if len(train) == 0:
        raise ValueError("empty training set")
    x_mean = train.X.mean(axis=0)
    x_scale = train.X.std(axis=0)
    x_scale[x_scale == 0] = 1.0
    y_mean = float(train.y.mean())
    y_scale = float(train.y.std()) or 1.0
    rng = Rng(seed)
    net = init_network([train.dim, *layer_sizes, 1], rng)
    Z = (train.X - x_mean) / x_scale
    target = (train.y - y_mean) / y_scale
    train_net = train_mse(net, Z, target, lr, epochs, batch_size, rng)
    return MlpRegressor(train_net, x_mean, x_scale, y_mean, y_scale)


def train_mse(net, Z, target, lr, epochs, batch_size=None, rng=None):
    train(net, Z, target, "mse", lr, epochs, batch_size, rng)
    if not np.isfinite(batch_loss(net, Z, target, "mse")):
        raise DivergenceError("MLP training loss is not finite")
    return net


def mlp_predict(model: MlpRegressor, x):
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != model.net.input_dim:
        raise ShapeError(f"expected {model.net.input_dim} features, got {x.shape[-1]}")
    s = score(model.net, (x - model.x_mean) / model.x_scale)
    return model.y_mean + model.y_scale * s
