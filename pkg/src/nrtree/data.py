"""CSV loading, stratified splitting and regime-structured synthetic data."""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .core import Dataset
from .rng import Rng


class DataError(ValueError):
    """Malformed or unusable input data."""


def load_csv(path, response_column: str | None) -> Dataset:
    """Read a headed numeric CSV; every column except the response becomes a feature.

    With ``response_column=None`` all columns are features and responses are zero,
    which is how prediction inputs without labels are read.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    rows = [r for r in rows if r]
    if not rows:
        raise DataError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    if response_column is not None and response_column not in header:
        raise DataError(f"{path}: response column {response_column!r} not found in header {header}")
    ycol = header.index(response_column) if response_column is not None else None
    fcols = [j for j in range(len(header)) if j != ycol]
    X = np.empty((len(rows) - 1, len(fcols)))
    y = np.zeros(len(rows) - 1)
    for i, row in enumerate(rows[1:]):
        if len(row) != len(header):
            raise DataError(f"{path}: row {i + 2} has {len(row)} cells, expected {len(header)}")
        try:
            vals = [float(c) for c in row]
        except ValueError:
            bad = next(j for j, c in enumerate(row) if not _is_float(c))
            raise DataError(f"{path}: row {i + 2}, column {header[bad]!r}: "
                            f"non-numeric value {row[bad]!r}") from None
        if not all(math.isfinite(v) for v in vals):
            raise DataError(f"{path}: row {i + 2} has a non-finite value")
        X[i] = [vals[j] for j in fcols]
        if ycol is not None:
            y[i] = vals[ycol]
    return Dataset(X, y, [header[j] for j in fcols])


def _is_float(s: str) -> bool:
    try:
        float(s)
        return True
    except ValueError:
        return False


def save_csv(d: Dataset, path, response_column: str = "y") -> None:
    names = d.feature_names or [f"x{j}" for j in range(d.dim)]
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow([*names, response_column])
        for x, y in zip(d.X, d.y):
            w.writerow([repr(float(v)) for v in x] + [repr(float(y))])


def stratified_split(d: Dataset, fractions: Sequence[float] = (0.7, 0.15, 0.15),
                     num_strata: int = 10, seed: int = 0) -> tuple[Dataset, Dataset, Dataset]:
    """Split by response-quantile strata so every response range reaches every part."""
    fr = np.asarray(fractions, dtype=float)
    if fr.shape != (3,) or (fr < 0).any() or not math.isclose(fr.sum(), 1.0, abs_tol=1e-9):
        raise ValueError("fractions must be three non-negative numbers summing to 1")
    if num_strata < 1:
        raise ValueError("num_strata must be >= 1")
    n = len(d)
    order = np.argsort(d.y, kind="stable")
    strata = [list(s) for s in np.array_split(order, min(num_strata, max(n, 1))) if len(s)]
    need = int((fr > 0).sum())
    merged: list[list[int]] = []
    for s in strata:
        if merged and len(merged[-1]) < need:
            merged[-1].extend(s)
        else:
            merged.append(list(s))
    if len(merged) > 1 and len(merged[-1]) < need:
        merged[-2].extend(merged.pop())
    if len(merged) < len(strata):
        warnings.warn(f"strata smaller than {need} samples were merged "
                      f"({len(strata)} -> {len(merged)})", stacklevel=2)
    rng = Rng(seed)
    parts: list[list[int]] = [[], [], []]
    for s in merged:
        idx = [int(i) for i in s]
        rng.shuffle(idx)
        m = len(idx)
        n_train = int(round(fr[0] * m))
        n_dev = int(round(fr[1] * m))
        n_dev = min(n_dev, m - n_train)
        parts[0] += idx[:n_train]
        parts[1] += idx[n_train:n_train + n_dev]
        parts[2] += idx[n_train + n_dev:]
    return tuple(d.subset(sorted(p)) for p in parts)  # type: ignore[return-value]


@dataclass
class SyntheticSpec:
    """Regimes ``k`` own response interval ``response_ranges[k]`` and feature center ``regime_centers[k]``."""

    response_ranges: list[tuple[float, float]]
    regime_centers: list[list[float]]
    feature_noise: list[float]
    n: int
    seed: int = 0
    regime_weighting: str = "width"  # or "uniform"
    true_thresholds: list[float] = field(default_factory=list)

    def __post_init__(self):
        k = len(self.response_ranges)
        if k < 1:
            raise ValueError("need at least one regime")
        if len(self.regime_centers) != k or len(self.feature_noise) != k:
            raise ValueError("one center and one noise level per regime")
        if len({len(c) for c in self.regime_centers}) != 1:
            raise ValueError("regime centers differ in dimension")
        for lo, hi in self.response_ranges:
            if not lo < hi:
                raise ValueError(f"empty response range ({lo}, {hi})")
        for (_, hi), (lo, _) in zip(self.response_ranges, self.response_ranges[1:]):
            if lo <= hi:
                raise ValueError("response ranges must be ordered and non-overlapping")
        if any(s < 0 for s in self.feature_noise) or self.n < 1:
            raise ValueError("noise must be >= 0 and n >= 1")
        if self.regime_weighting not in ("width", "uniform"):
            raise ValueError("regime_weighting must be 'width' or 'uniform'")
        if not self.true_thresholds:
            self.true_thresholds = [0.5 * (a[1] + b[0]) for a, b in
                                    zip(self.response_ranges, self.response_ranges[1:])]
        if len(self.true_thresholds) != k - 1 or list(self.true_thresholds) != sorted(self.true_thresholds):
            raise ValueError("need K-1 sorted thresholds")
        for t, (_, hi), (lo, _) in zip(self.true_thresholds, self.response_ranges,
                                       self.response_ranges[1:]):
            if not hi <= t <= lo:
                raise ValueError(f"threshold {t} is not inside the gap ({hi}, {lo})")

    @property
    def num_regimes(self) -> int:
        return len(self.response_ranges)

    @property
    def dim(self) -> int:
        return len(self.regime_centers[0])


@dataclass
class GroundTruth:
    true_thresholds: list[float]
    regime_means: list[float]
    regimes: list[int]

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=1)


def make_spec(num_regimes: int, n: int, dim: int, noise: float, seed: int = 0,
              width: float = 10.0, gap: float = 2.0, separation: float = 1.0) -> SyntheticSpec:
    """Evenly spaced response ranges; centers spread along a random direction per regime.

    Centers are ``separation`` apart on a line through the origin along a random unit
    vector, so ``noise`` is directly comparable to the center separation.
    """
    if num_regimes < 1 or dim < 1:
        raise ValueError("num_regimes and dim must be >= 1")
    rng = Rng(seed ^ 0x5EED)
    direction = rng.normal_array(dim)
    direction /= np.linalg.norm(direction) or 1.0
    centers = [((k - (num_regimes - 1) / 2.0) * separation * direction).tolist()
               for k in range(num_regimes)]
    ranges = [(k * (width + gap), k * (width + gap) + width) for k in range(num_regimes)]
    return SyntheticSpec(ranges, centers, [noise] * num_regimes, n, seed)


def generate_synthetic(spec: SyntheticSpec) -> tuple[Dataset, GroundTruth]:
    rng = Rng(spec.seed)
    widths = np.array([hi - lo for lo, hi in spec.response_ranges])
    w = widths if spec.regime_weighting == "width" else np.ones_like(widths)
    cdf = np.cumsum(w / w.sum())
    X = np.empty((spec.n, spec.dim))
    y = np.empty(spec.n)
    regimes = []
    centers = np.asarray(spec.regime_centers, dtype=float)
    for i in range(spec.n):
        k = min(int(np.searchsorted(cdf, rng.random(), side="right")), spec.num_regimes - 1)
        lo, hi = spec.response_ranges[k]
        y[i] = rng.uniform(lo, hi)
        X[i] = centers[k] + spec.feature_noise[k] * rng.normal_array(spec.dim)
        regimes.append(k)
    means = [0.5 * (lo + hi) for lo, hi in spec.response_ranges]
    names = [f"x{j}" for j in range(spec.dim)]
    return Dataset(X, y, names), GroundTruth(list(spec.true_thresholds), means, regimes)
