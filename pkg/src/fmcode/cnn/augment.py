"""Fixed-length stretching and registration-time data augmentation.

Five registration signals are nowhere near enough to train the
identifier, so the set is blown up by cross-aligning every pair,
exchanging random segments between aligned signals, and locally
perturbing time and amplitude.
"""

from __future__ import annotations

import numpy as np

from ..alignment import dtw_align
from ..errors import InsufficientRegistrationError, TooShortSignalError
from ..signals import Signal


def stretch_to_fixed(s, target_length: int = 256) -> np.ndarray:
    """Per-axis linear interpolation onto `target_length` uniform points
    spanning [0, l-1]; endpoints are preserved exactly."""
    samples = s.samples if isinstance(s, Signal) else np.asarray(s, dtype=float)
    l, d = samples.shape
    if l < 2:
        raise TooShortSignalError("need at least 2 samples to stretch")
    t_in = np.arange(l, dtype=float)
    t_out = np.linspace(0.0, l - 1.0, target_length)
    out = np.empty((target_length, d))
    for j in range(d):
        out[:, j] = np.interp(t_out, t_in, samples[:, j])
    return out


def _resample_rows(samples: np.ndarray, new_length: int) -> np.ndarray:
    if new_length == samples.shape[0]:
        return samples.copy()
    t_in = np.linspace(0.0, 1.0, samples.shape[0])
    t_out = np.linspace(0.0, 1.0, new_length)
    out = np.empty((new_length, samples.shape[1]))
    for j in range(samples.shape[1]):
        out[:, j] = np.interp(t_out, t_in, samples[:, j])
    return out


def _perturb_segment(
    samples: np.ndarray,
    rng: np.random.Generator,
    warp_limit: float = 0.1,
    amp_limit: float = 0.1,
) -> np.ndarray:
    """Locally warp a random segment in time (+-10%) and scale its
    amplitude (+-10%), then restore the original overall length."""
    l = samples.shape[0]
    seg_len = max(4, int(rng.integers(l // 4, max(l // 2, 5))))
    seg_len = min(seg_len, l - 1)
    start = int(rng.integers(0, l - seg_len))
    end = start + seg_len
    amp = 1.0 + rng.uniform(-amp_limit, amp_limit)
    warp = 1.0 + rng.uniform(-warp_limit, warp_limit)
    segment = samples[start:end] * amp
    warped = _resample_rows(segment, max(2, int(round(seg_len * warp))))
    stitched = np.vstack([samples[:start], warped, samples[end:]])
    return _resample_rows(stitched, l)


def augment_registration(
    signals: list[Signal],
    target: int = 125,
    seed: int = 0,
) -> list[Signal]:
    """Expand K registration signals to exactly `target` training signals.

    Step 1: the K originals plus every cross-alignment (K*(K-1) more).
    Steps 2+3: segment exchange between two signals aligned to the same
    reference, followed by a local time/amplitude perturbation, repeated
    until the target count is reached.  Deterministic given the seed.
    """
    K = len(signals)
    if K < 2:
        raise InsufficientRegistrationError("need at least 2 registration signals")
    rng = np.random.default_rng(seed)
    rate = signals[0].rate
    labels = signals[0].axis_labels
    # groups[k]: all signals on the grid of signals[k]
    groups: list[list[np.ndarray]] = []
    out: list[np.ndarray] = []
    for k, ref in enumerate(signals):
        group = [ref.samples]
        for j, other in enumerate(signals):
            if j != k:
                group.append(dtw_align(other, ref).samples)
        groups.append(group)
        out.extend(group)
    out = out[:target]
    while len(out) < target:
        group = groups[int(rng.integers(K))]
        a, b = rng.integers(len(group)), rng.integers(len(group))
        base = group[a].copy()
        donor = group[b]
        l = base.shape[0]
        seg_len = int(rng.integers(max(2, l // 8), max(3, l // 2)))
        start = int(rng.integers(0, max(1, l - seg_len)))
        base[start : start + seg_len] = donor[start : start + seg_len]
        out.append(_perturb_segment(base, rng))
    return [Signal(m, rate, labels) for m in out]
