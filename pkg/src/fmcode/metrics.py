"""Biometric rate computation: ROC sweep, EER, FRR-at-FAR operating points.

Scores are distances: genuine requests score low, and a request is
accepted iff score < threshold.  So FRR(th) = P(genuine >= th) and
FAR(th) = P(impostor < th); both are step functions of the threshold
swept over the union of observed scores.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InsufficientScoresError


def _sweep(genuine: np.ndarray, impostor: np.ndarray):
    """Thresholds (ascending) with FRR/FAR evaluated at each."""
    thresholds = np.unique(np.concatenate([genuine, impostor]))
    # pad so the sweep covers the accept-none and accept-all regimes
    thresholds = np.concatenate([
        [thresholds[0] - 1.0], thresholds, [thresholds[-1] + 1.0]
    ])
    g = np.sort(genuine)
    i = np.sort(impostor)
    frr = 1.0 - np.searchsorted(g, thresholds, side="left") / len(g)
    far = np.searchsorted(i, thresholds, side="left") / len(i)
    return thresholds, frr, far


def eer_point(genuine: np.ndarray, impostor: np.ndarray) -> tuple[float, float]:
    """(eer, threshold) by linear interpolation between the two sweep
    points bracketing FRR = FAR."""
    if genuine.max() < impostor.min():
        # perfectly separated: every threshold in the gap has FRR=FAR=0,
        # so take the midpoint rather than the most permissive edge
        return 0.0, float((genuine.max() + impostor.min()) / 2.0)
    thresholds, frr, far = _sweep(genuine, impostor)
    diff = frr - far
    idx = int(np.argmax(diff <= 0))  # first threshold where FAR catches FRR
    if idx == 0:
        return float((frr[0] + far[0]) / 2.0), float(thresholds[0])
    d0, d1 = diff[idx - 1], diff[idx]
    if d0 == d1:
        w = 0.0
    else:
        w = d0 / (d0 - d1)
    eer = float(frr[idx - 1] + w * (frr[idx] - frr[idx - 1]))
    far_interp = float(far[idx - 1] + w * (far[idx] - far[idx - 1]))
    threshold = float(thresholds[idx - 1] + w * (thresholds[idx] - thresholds[idx - 1]))
    return (eer + far_interp) / 2.0, threshold


def eer_threshold(genuine: np.ndarray, impostor: np.ndarray) -> float:
    return eer_point(np.asarray(genuine), np.asarray(impostor))[1]


def frr_at_far(genuine: np.ndarray, impostor: np.ndarray, target_far: float) -> float:
    """FRR at the most permissive threshold keeping FAR <= target."""
    _, frr, far = _sweep(genuine, impostor)
    ok = np.flatnonzero(far <= target_far)
    return float(frr[ok[-1]]) if len(ok) else 1.0


def threshold_at_far(genuine: np.ndarray, impostor: np.ndarray, target_far: float) -> float:
    thresholds, _, far = _sweep(genuine, impostor)
    ok = np.flatnonzero(far <= target_far)
    return float(thresholds[ok[-1]]) if len(ok) else float(thresholds[0])


@dataclass
class MetricsReport:
    eer: float
    threshold_at_eer: float
    frr: float                      # at the EER threshold
    far: float
    roc: list[tuple[float, float]]  # (far, frr) points, far ascending
    frr_at_far: dict[float, float]
    eer_spoof: float | None = None
    far_spoof: float | None = None
    counts: dict[str, int] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "eer": self.eer,
            "threshold_at_eer": self.threshold_at_eer,
            "frr": self.frr,
            "far": self.far,
            "eer_spoof": self.eer_spoof,
            "far_spoof": self.far_spoof,
            "frr_at_far": {repr(k): v for k, v in self.frr_at_far.items()},
            "counts": self.counts,
            "roc": [[f, r] for f, r in self.roc],
        }


def compute_metrics(
    genuine_scores,
    guessing_scores,
    spoof_scores=None,
    counts: dict[str, int] | None = None,
) -> MetricsReport:
    """Full report from raw score sets; spoof fields appear only when
    spoof scores are supplied."""
    genuine = np.asarray(genuine_scores, dtype=float)
    guessing = np.asarray(guessing_scores, dtype=float)
    if len(genuine) == 0 or len(guessing) == 0:
        raise InsufficientScoresError("genuine and guessing score sets must be nonempty")
    eer, th = eer_point(genuine, guessing)
    frr = float(np.mean(genuine >= th))
    far = float(np.mean(guessing < th))
    _, frr_curve, far_curve = _sweep(genuine, guessing)
    # threshold order: far non-decreasing, frr non-increasing; keep the
    # lowest frr seen at each distinct far value
    roc: list[tuple[float, float]] = []
    for f, r in zip(far_curve.tolist(), frr_curve.tolist()):
        if roc and roc[-1][0] == f:
            roc[-1] = (f, min(roc[-1][1], r))
        else:
            roc.append((f, r))
    operating = {
        1e-4: frr_at_far(genuine, guessing, 1e-4),
        1e-5: frr_at_far(genuine, guessing, 1e-5),
        0.0: frr_at_far(genuine, guessing, 0.0),
    }
    eer_spoof = far_spoof = None
    if spoof_scores is not None and len(spoof_scores) > 0:
        spoof = np.asarray(spoof_scores, dtype=float)
        eer_spoof, _ = eer_point(genuine, spoof)
        far_spoof = float(np.mean(spoof < th))
    return MetricsReport(
        eer=eer,
        threshold_at_eer=th,
        frr=frr,
        far=far,
        roc=roc,
        frr_at_far=operating,
        eer_spoof=eer_spoof,
        far_spoof=far_spoof,
        counts=counts or {},
    )
