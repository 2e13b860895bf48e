"""Temporal local distance features.

After aligning a signal to the account template, the element-wise
absolute difference is segmented into H windows; a feature vector picks
one row from each of T selected windows and concatenates them.  At
training time the picks can be perturbed with per-row Gaussian noise
(scale sigma_hat) to multiply the scarce genuine examples.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .alignment import SIGMA_FLOOR, Template
from .errors import IncompatibleSignalError, TooShortSignalError


@dataclass(frozen=True)
class DistanceSeries:
    """Element-wise |signal - template| plus the template deviations."""

    values: np.ndarray  # l x d, nonnegative
    sigma: np.ndarray   # l x d

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        s = np.asarray(self.sigma, dtype=float)
        if v.shape != s.shape or v.ndim != 2:
            raise IncompatibleSignalError("values/sigma must share an l x d shape")
        if not (np.isfinite(v).all() and (v >= 0).all()):
            raise IncompatibleSignalError("distance entries must be finite and >= 0")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "sigma", s)

    @property
    def length(self) -> int:
        return self.values.shape[0]

    @property
    def dims(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class WindowSet:
    """T distinct window indices out of H."""

    H: int
    T: int
    indices: tuple[int, ...]

    def __post_init__(self):
        idx = tuple(sorted(int(i) for i in self.indices))
        if len(idx) != self.T or len(set(idx)) != self.T:
            raise ValueError("indices must be T distinct values")
        if self.T > self.H or any(i < 0 or i >= self.H for i in idx):
            raise ValueError("indices must lie in [0, H) with T <= H")
        object.__setattr__(self, "indices", idx)

    @classmethod
    def sample(cls, H: int, T: int, rng: np.random.Generator) -> "WindowSet":
        return cls(H, T, tuple(rng.choice(H, size=T, replace=False)))


def local_distance(aligned: np.ndarray, tmpl: Template) -> DistanceSeries:
    """Element-wise absolute difference against the template mean."""
    aligned = np.asarray(aligned, dtype=float)
    if aligned.shape != tmpl.t_hat.shape:
        raise IncompatibleSignalError("aligned signal does not match template shape")
    return DistanceSeries(np.abs(aligned - tmpl.t_hat), tmpl.sigma_hat.copy())


def partition_windows(length: int, H: int) -> list[tuple[int, int]]:
    """H contiguous [start, end) windows covering all rows.

    Sizes are floor(l/H) or ceil(l/H); the remainder goes to the leading
    windows so every sample stays in play.
    """
    if H < 1:
        raise ValueError("H must be >= 1")
    if length < H:
        raise TooShortSignalError(f"signal length {length} < window count {H}")
    base, extra = divmod(length, H)
    bounds = []
    start = 0
    for h in range(H):
        size = base + (1 if h < extra else 0)
        bounds.append((start, start + size))
        start += size
    return bounds


def sample_feature_vectors(
    ds: DistanceSeries,
    ws: WindowSet,
    count: int,
    gaussian: bool,
    rng: np.random.Generator,
) -> np.ndarray:
    """Draw `count` feature vectors of length T*d.

    Each vector concatenates one uniformly chosen row per selected
    window; with `gaussian` set, each pick is perturbed by N(0, sigma)
    per axis and clamped at 0 (distances are nonnegative).
    """
    windows = partition_windows(ds.length, ws.H)
    d = ds.dims
    bounds = np.array([windows[w] for w in ws.indices])  # (T, 2)
    rows = rng.integers(bounds[:, 0], bounds[:, 1], size=(count, ws.T))
    picks = ds.values[rows]  # (count, T, d)
    if gaussian:
        sigma = np.maximum(ds.sigma, SIGMA_FLOOR)
        picks = np.maximum(picks + rng.normal(0.0, sigma[rows]), 0.0)
    return picks.reshape(count, ws.T * d)
