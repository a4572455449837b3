"""Datasets, response bins and training configuration."""

from __future__ import annotations

import bisect
from dataclasses import asdict, dataclass, field
from typing import NamedTuple, Sequence

import numpy as np


class Sample(NamedTuple):
    features: np.ndarray
    response: float


@dataclass
class Dataset:
    """Feature matrix ``X`` (n, dim) and responses ``y`` (n,)."""

    X: np.ndarray
    y: np.ndarray
    feature_names: list[str] | None = None

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        self.y = np.asarray(self.y, dtype=float).reshape(-1)
        if self.X.ndim == 1:
            self.X = self.X.reshape(-1, 1) if self.y.size != 1 else self.X.reshape(1, -1)
        if self.X.ndim != 2 or self.X.shape[0] != self.y.shape[0]:
            raise ValueError(f"features {self.X.shape} do not match {self.y.shape[0]} responses")
        if not (np.isfinite(self.X).all() and np.isfinite(self.y).all()):
            raise ValueError("dataset contains non-finite values")

    @classmethod
    def from_samples(cls, samples: Sequence[Sample], dim: int | None = None) -> "Dataset":
        if not samples:
            return cls(np.zeros((0, dim or 0)), np.zeros(0))
        return cls(np.array([s.features for s in samples], dtype=float),
                   np.array([s.response for s in samples], dtype=float))

    @property
    def dim(self) -> int:
        return self.X.shape[1]

    def __len__(self) -> int:
        return self.y.shape[0]

    def __iter__(self):
        for x, y in zip(self.X, self.y):
            yield Sample(x, float(y))

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx, dtype=int)
        return Dataset(self.X[idx].reshape(len(idx), self.dim), self.y[idx], self.feature_names)


@dataclass(frozen=True)
class Bin:
    """Right-closed response interval ``(low, high]`` with its leaf value."""

    low: float
    high: float
    representative: float
    count: int = 0

    def __post_init__(self):
        if not self.low < self.high:
            raise ValueError(f"empty bin ({self.low}, {self.high}]")

    def contains(self, y: float) -> bool:
        return self.low < y <= self.high


def partition_of(bins: Sequence[Bin], y: float) -> int:
    """Index of the bin holding ``y``; out-of-range values clamp to the end bins."""
    if not bins:
        raise ValueError("empty bin list")
    highs = [b.high for b in bins]
    return min(bisect.bisect_left(highs, y), len(bins) - 1)


def split_dataset(d: Dataset, t: float) -> tuple[Dataset, Dataset]:
    """Left gets ``y < t``, right gets ``y >= t``; order is kept on each side."""
    right = d.y >= t
    return d.subset(np.flatnonzero(~right)), d.subset(np.flatnonzero(right))


METHODS = ("scan", "gradient")
PENALTIES = ("entropy", "gini", "median")
CLASSIFIER_KINDS = ("neural", "linear_margin")
LEAF_VALUES = ("mean", "midpoint")


@dataclass
class TrainConfig:
    lam: float = 0.5
    beta: float = 10.0
    method: str = "scan"
    penalty: str = "entropy"
    classifier_kind: str = "neural"
    layer_sizes: tuple[int, ...] = (32, 32)
    learning_rate: float = 0.001
    epochs_per_node: int = 200
    batch_size: int | None = None
    coord_descent_rounds: int = 5
    threshold_lr: float | None = None  # None -> 0.05 * node response range
    threshold_steps: int = 10
    scan_cap: int | None = 64  # None -> every midpoint
    max_depth: int = 3
    min_node_size: int = 5
    purity_epsilon: float = 1e-9
    dev_saturation_tol: float = 0.0
    leaf_value: str = "mean"
    seed: int = 0
    num_seeds: int = 1

    def __post_init__(self):
        self.layer_sizes = tuple(int(k) for k in self.layer_sizes)
        if not 0.0 < self.lam < 1.0:
            raise ValueError(f"lambda must lie in (0, 1), got {self.lam}")
        if not self.beta > 0:
            raise ValueError(f"beta must be positive, got {self.beta}")
        for name, allowed in (("method", METHODS), ("penalty", PENALTIES),
                              ("classifier_kind", CLASSIFIER_KINDS), ("leaf_value", LEAF_VALUES)):
            if getattr(self, name) not in allowed:
                raise ValueError(f"{name} must be one of {allowed}, got {getattr(self, name)!r}")
        if self.method == "gradient" and self.penalty != "median":
            raise ValueError("the gradient method needs the differentiable median penalty")
        if self.classifier_kind == "linear_margin" and self.method != "scan":
            raise ValueError("linear_margin classifiers are trained with the scan method only")
        if self.min_node_size < 2:
            raise ValueError("min_node_size must be >= 2")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if self.purity_epsilon < 0:
            raise ValueError("purity_epsilon must be >= 0")
        if self.epochs_per_node < 0 or self.coord_descent_rounds < 1 or self.num_seeds < 1:
            raise ValueError("epochs, rounds and seeds must be positive")
        if self.scan_cap is not None and self.scan_cap < 1:
            raise ValueError("scan_cap must be positive or None")
        if self.learning_rate <= 0 or (self.threshold_lr is not None and self.threshold_lr <= 0):
            raise ValueError("learning rates must be positive")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["layer_sizes"] = list(self.layer_sizes)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        return cls(**d)


@dataclass
class EvalReport:
    mae: float
    rmse: float
    n: int
    per_sample_abs_errors: list[float] = field(default_factory=list, repr=False)
