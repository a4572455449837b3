"""Feedforward networks, losses and Adam, written out by hand on numpy arrays.

A network is a list of affine layers with ReLU between them. Weight matrices
are stored as ``(fan_in, fan_out)`` so a batch ``X @ W + b`` runs row-wise.
The node classifier squashes the final scalar through a logistic sigmoid; the
MLP baseline reads the scalar directly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .rng import Rng

PROB_EPS = 1e-12

LOSS_KINDS = ("bce", "hinge", "mse")


class ShapeError(ValueError):
    """Input or parameter dimensions do not line up."""


class DivergenceError(RuntimeError):
    """Training produced a non-finite loss or parameter."""


@dataclass
class NeuralClassifier:
    """Layered affine+ReLU network with one sigmoid output unit.

    With no hidden layers this is a plain linear scorer, which is how the
    linear-margin (SVM-like) node classifier is represented.
    """

    weights: list[np.ndarray]
    biases: list[np.ndarray]
    kind: str = "neural"

    def __post_init__(self):
        if len(self.weights) != len(self.biases) or not self.weights:
            raise ShapeError("need one bias per weight matrix and at least one layer")
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.ndim != 2 or b.shape != (w.shape[1],):
                raise ShapeError(f"layer {k}: weight {w.shape} / bias {b.shape} mismatch")
            if k and self.weights[k - 1].shape[1] != w.shape[0]:
                raise ShapeError(f"layer {k} input {w.shape[0]} != previous output "
                                 f"{self.weights[k - 1].shape[1]}")
        if self.weights[-1].shape[1] != 1:
            raise ShapeError("final layer must have a single output")

    @property
    def input_dim(self) -> int:
        return self.weights[0].shape[0]

    @property
    def layer_dims(self) -> list[int]:
        return [self.weights[0].shape[0]] + [w.shape[1] for w in self.weights]

    def params(self) -> list[np.ndarray]:
        return [*self.weights, *self.biases]

    def copy(self) -> "NeuralClassifier":
        return NeuralClassifier([w.copy() for w in self.weights],
                                [b.copy() for b in self.biases], self.kind)


def init_network(dims: Sequence[int], rng: Rng, kind: str = "neural") -> NeuralClassifier:
    """Glorot-uniform weights and zero biases for layer sizes ``dims``."""
    dims = [int(d) for d in dims]
    if len(dims) < 2 or dims[-1] != 1 or min(dims) < 1:
        raise ShapeError(f"bad layer dims {dims}")
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform_array(-limit, limit, (fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return NeuralClassifier(weights, biases, kind)


def sigmoid(z):
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _as_batch(clf: NeuralClassifier, x) -> tuple[np.ndarray, bool]:
    X = np.asarray(x, dtype=float)
    single = X.ndim == 1
    if single:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] != clf.input_dim:
        raise ShapeError(f"expected input dim {clf.input_dim}, got {X.shape[-1] if X.ndim else 0}")
    return X, single


def _forward_cache(clf: NeuralClassifier, X: np.ndarray):
    """Pre-activations and activations of every layer for batch ``X``."""
    acts = [X]
    pre = []
    h = X
    last = len(clf.weights) - 1
    for k, (w, b) in enumerate(zip(clf.weights, clf.biases)):
        z = h @ w + b
        pre.append(z)
        h = z if k == last else np.maximum(z, 0.0)
        acts.append(h)
    return pre, acts


def score(clf: NeuralClassifier, x) -> np.ndarray | float:
    """Pre-sigmoid output; scalar for a single vector, array for a batch."""
    X, single = _as_batch(clf, x)
    s = _forward_cache(clf, X)[1][-1][:, 0]
    return float(s[0]) if single else s


def forward(clf: NeuralClassifier, x) -> np.ndarray | float:
    """P(right child | x) for one vector or each row of a batch."""
    X, single = _as_batch(clf, x)
    p = sigmoid(_forward_cache(clf, X)[1][-1][:, 0])
    return float(p[0]) if single else p


def clamp_prob(p):
    return np.clip(p, PROB_EPS, 1.0 - PROB_EPS)


def bce_loss(p, y):
    p = clamp_prob(np.asarray(p, dtype=float))
    y = np.asarray(y, dtype=float)
    out = -(y * np.log(p) + (1.0 - y) * np.log1p(-p))
    return float(out) if out.ndim == 0 else out


def hinge_loss(margin_score, y_sign):
    s = np.asarray(margin_score, dtype=float)
    y = np.asarray(y_sign, dtype=float)
    out = np.maximum(0.0, 1.0 - y * s)
    return float(out) if out.ndim == 0 else out


def mse_loss(pred, target):
    d = np.asarray(pred, dtype=float) - np.asarray(target, dtype=float)
    out = d * d
    return float(out) if out.ndim == 0 else out


def batch_loss(clf: NeuralClassifier, X, y, loss_kind: str = "bce") -> float:
    """Mean per-sample loss over a batch (labels in [0,1] or raw targets for mse)."""
    X, _ = _as_batch(clf, X)
    s = _forward_cache(clf, X)[1][-1][:, 0]
    y = np.asarray(y, dtype=float)
    if loss_kind == "bce":
        return float(np.mean(bce_loss(sigmoid(s), y)))
    if loss_kind == "hinge":
        return float(np.mean(hinge_loss(s, 2.0 * y - 1.0)))
    if loss_kind == "mse":
        return float(np.mean(mse_loss(s, y)))
    raise ValueError(f"unknown loss kind {loss_kind!r}")


def backward(clf: NeuralClassifier, X, y, loss_kind: str = "bce") -> list[np.ndarray]:
    """Gradients of the mean batch loss, ordered like ``clf.params()``.

    For ``bce`` the labels are soft targets in [0,1]; for ``hinge`` they are
    {0,1} and mapped to {-1,+1}; for ``mse`` they are raw regression targets.
    Accepts a single vector as a batch of one.
    """
    X, _ = _as_batch(clf, X)
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if y.shape[0] != X.shape[0]:
        raise ShapeError(f"{X.shape[0]} inputs but {y.shape[0]} labels")
    pre, acts = _forward_cache(clf, X)
    s = acts[-1][:, 0]
    n = X.shape[0]
    if loss_kind == "bce":
        p = sigmoid(s)
        # clamping is flat outside [eps, 1-eps], so the gradient vanishes there
        inside = (p > PROB_EPS) & (p < 1.0 - PROB_EPS)
        ds = np.where(inside, p - y, 0.0)
    elif loss_kind == "hinge":
        ys = 2.0 * y - 1.0
        ds = np.where(ys * s < 1.0, -ys, 0.0)
    elif loss_kind == "mse":
        ds = 2.0 * (s - y)
    else:
        raise ValueError(f"unknown loss kind {loss_kind!r}")
    return _backprop(clf, pre, acts, ds[:, None] / n)


def _backprop(clf, pre, acts, delta):
    L = len(clf.weights)
    gw = [None] * L
    gb = [None] * L
    for k in range(L - 1, -1, -1):
        gw[k] = acts[k].T @ delta
        gb[k] = delta.sum(axis=0)
        if k:
            delta = (delta @ clf.weights[k].T) * (pre[k - 1] > 0)
    return [*gw, *gb]


@dataclass
class AdamState:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: list[np.ndarray] = field(default_factory=list)
    v: list[np.ndarray] = field(default_factory=list)

    @classmethod
    def for_params(cls, params, lr: float = 1e-3, **kw) -> "AdamState":
        return cls(lr=lr, m=[np.zeros_like(p) for p in params],
                   v=[np.zeros_like(p) for p in params], **kw)


def adam_step(params: list[np.ndarray], grads: list[np.ndarray], state: AdamState):
    """One bias-corrected Adam update, applied to ``params`` in place."""
    if len(params) != len(grads) or len(params) != len(state.m):
        raise ShapeError("params, grads and optimizer state differ in length")
    state.step += 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1 ** state.step
    c2 = 1.0 - b2 ** state.step
    for p, g, m, v in zip(params, grads, state.m, state.v):
        if p.shape != g.shape or p.shape != m.shape:
            raise ShapeError(f"shape mismatch {p.shape} vs {g.shape}")
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        p -= state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
    return params, state


def train(clf: NeuralClassifier, X, y, loss_kind: str, lr: float, epochs: int,
          batch_size: int | None = None, rng: Rng | None = None) -> NeuralClassifier:
    """Adam training in place. Full-batch unless ``batch_size`` is smaller than the data."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n = X.shape[0]
    params = clf.params()
    state = AdamState.for_params(params, lr=lr)
    full = batch_size is None or batch_size >= n
    order = list(range(n))
    for _ in range(int(epochs)):
        if full:
            adam_step(params, backward(clf, X, y, loss_kind), state)
        else:
            if rng is not None:
                rng.shuffle(order)
            idx = np.array(order)
            for start in range(0, n, batch_size):
                sl = idx[start:start + batch_size]
                adam_step(params, backward(clf, X[sl], y[sl], loss_kind), state)
    # NaN/inf propagate through later steps, so one check at the end catches divergence
    if not all(np.isfinite(p).all() for p in params):
        raise DivergenceError("non-finite parameter during training")
    return clf
