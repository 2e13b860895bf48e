"""DTW alignment and account templates.

A template is the element-wise mean of K registration signals after
aligning each to the first one, stored together with the per-sample,
per-axis standard deviation that captures how repeatable the writing is.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import EmptyRegistrationError, IncompatibleSignalError
from .signals import Signal

SIGMA_FLOOR = 1e-6  # clamp when sigma_hat is used as a sampling scale


@dataclass(frozen=True)
class Template:
    """Aligned mean t_hat and per-sample deviation sigma_hat (both l x d)."""

    t_hat: np.ndarray
    sigma_hat: np.ndarray
    k_signals: int
    rate: float

    def __post_init__(self):
        t = np.asarray(self.t_hat, dtype=float)
        s = np.asarray(self.sigma_hat, dtype=float)
        if t.shape != s.shape:
            raise IncompatibleSignalError("t_hat/sigma_hat shape mismatch")
        if not (np.isfinite(t).all() and np.isfinite(s).all() and (s >= 0).all()):
            raise IncompatibleSignalError("template entries must be finite, sigma >= 0")
        object.__setattr__(self, "t_hat", t)
        object.__setattr__(self, "sigma_hat", s)

    @property
    def length(self) -> int:
        return self.t_hat.shape[0]

    @property
    def dims(self) -> int:
        return self.t_hat.shape[1]

    def sigma_clamped(self) -> np.ndarray:
        return np.maximum(self.sigma_hat, SIGMA_FLOOR)


@dataclass(frozen=True)
class AlignedSignal:
    """Query warped onto the reference grid."""

    samples: np.ndarray          # reference length x d
    warp_path: np.ndarray        # (n_steps, 2) of (ref_index, query_index)
    dtw_distance: float


@njit(cache=True)
def _dtw_core(ref, query, band):
    """Cumulative-cost DP with steps {(1,0),(0,1),(1,1)} and Euclidean
    per-sample cost.  band < 0 disables the Sakoe-Chiba constraint."""
    n = ref.shape[0]
    m = query.shape[0]
    d = ref.shape[1]
    inf = np.inf
    acc = np.full((n, m), inf)
    for i in range(n):
        lo, hi = 0, m
        if band >= 0:
            center = i * (m - 1) // max(n - 1, 1)
            lo = max(0, center - band)
            hi = min(m, center + band + 1)
        for j in range(lo, hi):
            c = 0.0
            for a in range(d):
                diff = ref[i, a] - query[j, a]
                c += diff * diff
            c = np.sqrt(c)
            if i == 0 and j == 0:
                best = 0.0
            else:
                best = inf
                if i > 0 and acc[i - 1, j] < best:
                    best = acc[i - 1, j]
                if j > 0 and acc[i, j - 1] < best:
                    best = acc[i, j - 1]
                if i > 0 and j > 0 and acc[i - 1, j - 1] < best:
                    best = acc[i - 1, j - 1]
            acc[i, j] = c + best
    return acc


def _backtrack(acc: np.ndarray) -> np.ndarray:
    n, m = acc.shape
    i, j = n - 1, m - 1
    path = [(i, j)]
    while i > 0 or j > 0:
        candidates = []
        if i > 0 and j > 0:
            candidates.append((acc[i - 1, j - 1], i - 1, j - 1))
        if i > 0:
            candidates.append((acc[i - 1, j], i - 1, j))
        if j > 0:
            candidates.append((acc[i, j - 1], i, j - 1))
        _, i, j = min(candidates)
        path.append((i, j))
    path.reverse()
    return np.array(path, dtype=np.int64)


def dtw_align(query: Signal, reference: Signal, band: int | None = None) -> AlignedSignal:
    """Align `query` onto `reference` with classic DTW.

    The aligned output has exactly the reference length; query samples
    mapped to the same reference index are averaged.
    """
    if query.dims != reference.dims:
        raise IncompatibleSignalError(
            f"axis count mismatch: {query.dims} vs {reference.dims}"
        )
    ref = np.ascontiguousarray(reference.samples)
    qry = np.ascontiguousarray(query.samples)
    acc = _dtw_core(ref, qry, -1 if band is None else band)
    path = _backtrack(acc)
    n = ref.shape[0]
    out = np.zeros((n, ref.shape[1]))
    counts = np.zeros(n)
    for i, j in path:
        out[i] += qry[j]
        counts[i] += 1
    out /= counts[:, None]
    return AlignedSignal(out, path, float(acc[-1, -1]))


def dtw_distance(a: Signal, b: Signal, band: int | None = None) -> float:
    if a.dims != b.dims:
        raise IncompatibleSignalError("axis count mismatch")
    acc = _dtw_core(
        np.ascontiguousarray(a.samples),
        np.ascontiguousarray(b.samples),
        -1 if band is None else band,
    )
    return float(acc[-1, -1])


def align_to_template(s: Signal, tmpl: Template) -> np.ndarray:
    """Warp a preprocessed signal onto the template grid (l x d)."""
    ref = Signal(tmpl.t_hat, tmpl.rate, tuple(f"a{i}" for i in range(tmpl.dims)))
    return dtw_align(s, ref).samples


def build_template(signals: list[Signal]) -> Template:
    """Align every registration signal to the first, then take the
    element-wise mean and unbiased standard deviation."""
    if len(signals) == 0:
        raise EmptyRegistrationError("no registration signals")
    first = signals[0]
    aligned = [first.samples]
    for s in signals[1:]:
        aligned.append(dtw_align(s, first).samples)
    stack = np.stack(aligned)
    # mean and deviation computed around the first signal: identical
    # registrations then yield a bit-exact template and exactly zero
    # sigma, which a plain stack.mean cannot guarantee
    t_hat = stack[0] + (stack - stack[0]).mean(axis=0)
    if len(signals) >= 2:
        sigma_hat = np.sqrt(
            ((stack - t_hat) ** 2).sum(axis=0) / (len(signals) - 1)
        )
    else:
        sigma_hat = np.zeros_like(t_hat)
    return Template(t_hat, sigma_hat, len(signals), first.rate)


def update_template(tmpl: Template, new_aligned: np.ndarray, lam: float) -> Template:
    """Affine template refresh: t_hat' = (1-lam) t_hat + lam s."""
    new_aligned = np.asarray(new_aligned, dtype=float)
    if new_aligned.shape != tmpl.t_hat.shape:
        raise IncompatibleSignalError("aligned signal does not match template shape")
    if not 0.0 <= lam <= 1.0:
        raise ValueError("lambda must be in [0, 1]")
    return Template(
        (1.0 - lam) * tmpl.t_hat + lam * new_aligned,
        tmpl.sigma_hat,
        tmpl.k_signals,
        tmpl.rate,
    )
