"""Soft (posterior-weighted) and hard (greedy routing) prediction."""

from __future__ import annotations

import numpy as np

from .numerics import ShapeError, forward
from .tree import Internal, Leaf, Node, NrtModel, leaves_of


def _batch(model: NrtModel, xs) -> np.ndarray:
    X = np.asarray(xs, dtype=float)
    if X.ndim == 1:
        X = X.reshape(1, -1) if X.size else X.reshape(0, model.dim)
    if X.ndim != 2 or X.shape[1] != model.dim:
        raise ShapeError(f"expected {model.dim} features, got {X.shape[-1]}")
    return model.standardize(X)


def leaf_posterior_matrix(model: NrtModel, xs) -> np.ndarray:
    """(n, leaves) matrix of P(leaf | x); each row multiplies the edge probabilities on its path."""
    Z = _batch(model, xs)
    cols: list[np.ndarray] = []

    def walk(node: Node, mass: np.ndarray) -> None:
        if isinstance(node, Leaf):
            cols.append(mass)
            return
        p_right = forward(node.classifier, Z) if len(Z) else np.zeros(0)
        walk(node.left, mass * (1.0 - p_right))
        walk(node.right, mass * p_right)

    walk(model.root, np.ones(Z.shape[0]))
    return np.stack(cols, axis=1)


def leaf_posteriors(model: NrtModel, x) -> np.ndarray:
    """Posterior over leaves (left-to-right order) for one input vector."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ShapeError("leaf_posteriors takes a single feature vector")
    return leaf_posterior_matrix(model, x[None, :])[0]


def predict_soft(model: NrtModel, x) -> float:
    reps = np.array([b.representative for b in leaves_of(model)])
    return float(leaf_posteriors(model, x) @ reps)


def predict_hard(model: NrtModel, x) -> tuple[float, int]:
    """Follow each node's more likely child (ties go right); returns (value, leaf index)."""
    z = _batch(model, np.asarray(x, dtype=float).reshape(1, -1))[0]
    node = model.root
    leaf_index = 0
    while isinstance(node, Internal):
        if forward(node.classifier, z) >= 0.5:
            leaf_index += _leaf_count(node.left)
            node = node.right
        else:
            node = node.left
    return node.bin.representative, leaf_index


def _leaf_count(node: Node) -> int:
    if isinstance(node, Leaf):
        return 1
    return _leaf_count(node.left) + _leaf_count(node.right)


def predict_hard_batch(model: NrtModel, xs) -> tuple[np.ndarray, np.ndarray]:
    Z = _batch(model, xs)
    values = np.empty(Z.shape[0])
    leaves = np.empty(Z.shape[0], dtype=int)

    def walk(node: Node, rows: np.ndarray, offset: int) -> None:
        if isinstance(node, Leaf):
            values[rows] = node.bin.representative
            leaves[rows] = offset
            return
        if rows.size == 0:
            return
        right = forward(node.classifier, Z[rows]) >= 0.5
        walk(node.left, rows[~right], offset)
        walk(node.right, rows[right], offset + _leaf_count(node.left))

    walk(model.root, np.arange(Z.shape[0]), 0)
    return values, leaves


def predict_batch(model: NrtModel, xs, mode: str = "soft") -> np.ndarray:
    """Predictions for a batch of inputs in the given mode, order preserved."""
    if mode not in ("soft", "hard"):
        raise ValueError(f"mode must be 'soft' or 'hard', got {mode!r}")
    if isinstance(xs, (list, tuple)):
        for i, x in enumerate(xs):
            if np.asarray(x).shape != (model.dim,):
                raise ShapeError(f"input {i}: expected {model.dim} features, got {np.asarray(x).shape}")
        if not xs:
            return np.zeros(0)
    if mode == "hard":
        return predict_hard_batch(model, xs)[0]
    reps = np.array([b.representative for b in leaves_of(model)])
    return leaf_posterior_matrix(model, xs) @ reps
