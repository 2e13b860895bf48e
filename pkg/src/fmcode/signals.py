"""Raw trajectories, preprocessed signals, and the preprocessing pipeline.

The unit flowing through the whole system is a ``Signal``: an l x d real
matrix of samples at a fixed rate, with labelled axes.  Raw input is a
timestamped position trajectory from a pointer device or a 3D camera;
``derive_kinematics`` turns it into position/velocity/acceleration
channels, and ``preprocess`` trims, filters, resamples to 50 Hz, rotates
into a canonical writing posture, and z-scores each axis.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.signal import butter, filtfilt

from .errors import (
    DegenerateInputError,
    EmptyAfterTrimError,
    IncompatibleSignalError,
    MalformedInputError,
    TooShortSignalError,
)

TARGET_RATE = 50.0
CUTOFF_HZ = 10.0
TRIM_FRACTION = 0.05

DEVICE_KINDS = ("pointer2d", "camera3d", "precomputed")


@dataclass(frozen=True)
class RawTrajectory:
    """Timestamped positions straight off a capture device.

    timestamps are seconds, strictly increasing; positions are (l, 2) or
    (l, 3) in device units.
    """

    timestamps: np.ndarray
    positions: np.ndarray
    device_kind: str = "precomputed"

    def __post_init__(self):
        ts = np.asarray(self.timestamps, dtype=float)
        pos = np.asarray(self.positions, dtype=float)
        if pos.ndim != 2 or pos.shape[1] not in (2, 3):
            raise MalformedInputError("positions must be (l, 2) or (l, 3)")
        if ts.shape != (pos.shape[0],):
            raise MalformedInputError("timestamps/positions length mismatch")
        if not (np.isfinite(ts).all() and np.isfinite(pos).all()):
            raise MalformedInputError("non-finite values in trajectory")
        if len(ts) >= 2 and not (np.diff(ts) > 0).all():
            raise MalformedInputError("timestamps must be strictly increasing")
        if self.device_kind not in DEVICE_KINDS:
            raise MalformedInputError(f"unknown device kind {self.device_kind!r}")
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "positions", pos)

    def __len__(self):
        return len(self.timestamps)


@dataclass(frozen=True)
class Signal:
    """An l x d sample matrix at a fixed rate with labelled axes."""

    samples: np.ndarray
    rate: float
    axis_labels: tuple[str, ...]
    warnings: tuple[str, ...] = ()

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float)
        if s.ndim != 2 or s.shape[0] < 1 or s.shape[1] < 1:
            raise MalformedInputError("samples must be a nonempty 2D matrix")
        if not np.isfinite(s).all():
            raise MalformedInputError("signal contains non-finite entries")
        if len(self.axis_labels) != s.shape[1]:
            raise MalformedInputError("axis_labels length must equal d")
        if self.rate <= 0:
            raise MalformedInputError("rate must be positive")
        object.__setattr__(self, "samples", s)
        object.__setattr__(self, "axis_labels", tuple(self.axis_labels))

    @property
    def length(self) -> int:
        return self.samples.shape[0]

    @property
    def dims(self) -> int:
        return self.samples.shape[1]

    def axes_with_prefix(self, prefix: str) -> list[int]:
        return [i for i, a in enumerate(self.axis_labels) if a.startswith(prefix)]


_SPATIAL_SUFFIXES = ("x", "y", "z")


def derive_kinematics(raw: RawTrajectory) -> Signal:
    """Expand a position trajectory into pos/vel/acc channels.

    Velocity is the forward difference over dt, acceleration the forward
    difference of velocity; the last row of each derivative is padded by
    replicating the nearest computed value, so output length equals
    input length.  Rate is the median sample rate of the input.
    """
    if len(raw) < 2:
        raise DegenerateInputError("need at least 2 points to derive kinematics")
    ts = raw.timestamps
    pos = raw.positions
    dt = np.diff(ts)
    vel_core = np.diff(pos, axis=0) / dt[:, None]  # l-1 rows
    vel = np.vstack([vel_core, vel_core[-1]])
    if len(vel_core) >= 2:
        acc_core = np.diff(vel_core, axis=0) / dt[:-1, None]  # l-2 rows
        acc = np.vstack([acc_core, acc_core[-1], acc_core[-1]])
    else:
        acc = np.zeros_like(vel)
    rate = 1.0 / float(np.median(dt))
    ndim = pos.shape[1]
    labels = tuple(
        f"{group}_{_SPATIAL_SUFFIXES[i]}"
        for group in ("pos", "vel", "acc")
        for i in range(ndim)
    )
    return Signal(np.hstack([pos, vel, acc]), rate, labels)


def _velocity_magnitude(sig: Signal) -> np.ndarray:
    """Per-sample speed, preferring explicit velocity channels."""
    vel_idx = sig.axes_with_prefix("vel_")
    if vel_idx:
        return np.linalg.norm(sig.samples[:, vel_idx], axis=1)
    pos_idx = sig.axes_with_prefix("pos_")
    if pos_idx and sig.length >= 2:
        d = np.diff(sig.samples[:, pos_idx], axis=0) * sig.rate
        d = np.vstack([d, d[-1]])
        return np.linalg.norm(d, axis=1)
    return np.linalg.norm(sig.samples, axis=1)


def trim_stationary(sig: Signal, fraction: float = TRIM_FRACTION) -> Signal:
    """Drop leading/trailing samples slower than `fraction` of peak speed.

    Only the ends are touched: the kept index set is a contiguous slice.
    """
    vmag = _velocity_magnitude(sig)
    threshold = fraction * vmag.max()
    moving = np.flatnonzero(vmag >= threshold)
    if vmag.max() <= 0 or len(moving) == 0:
        raise EmptyAfterTrimError("signal never exceeds the motion threshold")
    lo, hi = moving[0], moving[-1] + 1
    return replace(sig, samples=sig.samples[lo:hi])


def lowpass(sig: Signal, cutoff_hz: float = CUTOFF_HZ) -> Signal:
    """Zero-phase 4th-order Butterworth low-pass (forward+backward)."""
    nyquist = sig.rate / 2.0
    if cutoff_hz >= nyquist:
        return sig  # already band-limited by the sampling itself
    b, a = butter(4, cutoff_hz / nyquist)
    default_padlen = 3 * max(len(a), len(b))
    padlen = min(default_padlen, sig.length - 1)
    filtered = filtfilt(b, a, sig.samples, axis=0, padlen=padlen)
    return replace(sig, samples=filtered)


def resample(sig: Signal, target_rate: float = TARGET_RATE) -> Signal:
    """Linear-interpolation resample onto a uniform `target_rate` grid."""
    if sig.length < 2:
        raise TooShortSignalError("need at least 2 samples to resample")
    duration = (sig.length - 1) / sig.rate
    n_out = int(math.floor(duration * target_rate)) + 1
    t_in = np.arange(sig.length) / sig.rate
    t_out = np.arange(n_out) / target_rate
    out = np.empty((n_out, sig.dims))
    for j in range(sig.dims):
        out[:, j] = np.interp(t_out, t_in, sig.samples[:, j])
    return replace(sig, samples=out, rate=target_rate)


# Eigenvalue-gap ratio below which the principal direction is treated as
# undefined and the rotation skipped (makes the step idempotent: after a
# z-score all axis variances tie at 1).
_PCA_GAP = 1e-6


def normalize_posture(sig: Signal) -> Signal:
    """Rotate spatial axes so the first principal direction of the
    position channels aligns with +x.

    The same rotation is applied to every spatial channel group (pos,
    vel, acc).  Degenerate spectra (no dominant direction) leave the
    signal untouched.
    """
    pos_idx = sig.axes_with_prefix("pos_")
    ndim = len(pos_idx)
    if ndim < 2:
        return sig
    pos = sig.samples[:, pos_idx]
    centered = pos - pos.mean(axis=0)
    cov = centered.T @ centered / max(sig.length - 1, 1)
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(evals)[::-1]
    evals, evecs = evals[order], evecs[:, order]
    scale = max(evals[0], 1e-30)
    if (evals[0] - evals[1]) / scale < _PCA_GAP:
        return sig
    # deterministic sign: largest-magnitude component of each axis positive
    for k in range(ndim):
        pivot = np.argmax(np.abs(evecs[:, k]))
        if evecs[pivot, k] < 0:
            evecs[:, k] = -evecs[:, k]
    rot = evecs.T  # rows are principal directions
    out = sig.samples.copy()
    for prefix in ("pos_", "vel_", "acc_"):
        idx = sig.axes_with_prefix(prefix)
        if len(idx) == ndim:
            out[:, idx] = sig.samples[:, idx] @ rot.T
    return replace(sig, samples=out)


def zscore(sig: Signal) -> Signal:
    """Per-axis standardisation; constant axes become zeros with a warning."""
    mu = sig.samples.mean(axis=0)
    sd = sig.samples.std(axis=0)
    out = np.empty_like(sig.samples)
    warnings = list(sig.warnings)
    for j in range(sig.dims):
        if sd[j] < 1e-12:
            out[:, j] = 0.0
            warnings.append(f"constant axis {sig.axis_labels[j]} zeroed")
        else:
            out[:, j] = (sig.samples[:, j] - mu[j]) / sd[j]
    return replace(sig, samples=out, warnings=tuple(warnings))


def preprocess(sig: Signal) -> Signal:
    """Full pipeline: trim, low-pass at 10 Hz, resample to 50 Hz, posture
    normalization, per-axis z-score."""
    out = trim_stationary(sig)
    if out.length < 10:
        raise TooShortSignalError(
            f"only {out.length} samples left after trimming (need >= 10)"
        )
    out = lowpass(out)
    out = resample(out)
    out = normalize_posture(out)
    return zscore(out)


# ---------------------------------------------------------------------------
# text formats
# ---------------------------------------------------------------------------

def format_signal(sig: Signal) -> str:
    """One-line header then one whitespace-separated row per sample.

    Floats are written with repr so the round trip is bit-exact.
    """
    buf = io.StringIO()
    buf.write(f"# rate={sig.rate!r} axes={','.join(sig.axis_labels)}\n")
    for row in sig.samples:
        buf.write(" ".join(repr(float(v)) for v in row))
        buf.write("\n")
    return buf.getvalue()


def parse_signal(text: str) -> Signal:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("#"):
        raise MalformedInputError("missing signal header line")
    header = lines[0].lstrip("# ").split()
    fields = dict(item.split("=", 1) for item in header)
    rate = float(fields["rate"])
    labels = tuple(fields["axes"].split(","))
    rows = [[float(v) for v in ln.split()] for ln in lines[1:]]
    return Signal(np.array(rows, dtype=float), rate, labels)


def write_signal(path, sig: Signal) -> None:
    with open(path, "w") as f:
        f.write(format_signal(sig))


def read_signal(path) -> Signal:
    with open(path) as f:
        return parse_signal(f.read())


def format_trajectory(raw: RawTrajectory) -> str:
    """Rows of `timestamp,x,y[,z]` in repr precision."""
    buf = io.StringIO()
    for t, p in zip(raw.timestamps, raw.positions):
        buf.write(",".join(repr(float(v)) for v in (t, *p)))
        buf.write("\n")
    return buf.getvalue()


def parse_trajectory(text: str, device_kind: str = "precomputed") -> RawTrajectory:
    rows = [
        [float(v) for v in ln.split(",")]
        for ln in text.splitlines()
        if ln.strip() and not ln.startswith("#")
    ]
    if not rows:
        raise MalformedInputError("empty trajectory")
    widths = {len(r) for r in rows}
    if widths not in ({3}, {4}):
        raise MalformedInputError("rows must be timestamp,x,y[,z]")
    arr = np.array(rows, dtype=float)
    return RawTrajectory(arr[:, 0], arr[:, 1:], device_kind)


def write_trajectory(path, raw: RawTrajectory) -> None:
    with open(path, "w") as f:
        f.write(format_trajectory(raw))


def read_trajectory(path, device_kind: str = "precomputed") -> RawTrajectory:
    with open(path) as f:
        return parse_trajectory(f.read(), device_kind)
