"""Per-account authentication: linear SVMs trained with SMO.

Each account gets M classifiers, each bound to its own random set of T
windows.  Genuine examples map internally to label -1 so the ensemble
score behaves as a distance: accept iff score < threshold.
"""

from __future__ import annotations

import warnings as _warnings
from dataclasses import dataclass, replace

import numpy as np

from .alignment import Template, align_to_template
from .errors import ConvergenceError, InsufficientTrainingDataError
from .features import DistanceSeries, WindowSet, local_distance, sample_feature_vectors
from .signals import Signal

GENUINE_LABEL = -1.0
IMPOSTOR_LABEL = +1.0


@dataclass(frozen=True)
class SvmModel:
    w: np.ndarray
    b: float
    window_set: WindowSet
    margin_warning: str | None = None

    def decision(self, X: np.ndarray) -> np.ndarray:
        return X @ self.w + self.b


@dataclass(frozen=True)
class EnsembleConfig:
    H: int = 64
    T: int = 16
    M: int = 32
    C: float = 1.0
    R_train: int = 8
    R_score: int = 8
    max_negative_signals: int = 1000


@dataclass(frozen=True)
class SvmEnsemble:
    models: tuple[SvmModel, ...]
    config: EnsembleConfig
    threshold: float | None = None

    def with_threshold(self, threshold: float) -> "SvmEnsemble":
        return replace(self, threshold=threshold)


# ---------------------------------------------------------------------------
# SMO solver
# ---------------------------------------------------------------------------

def smo_solve(
    X: np.ndarray,
    y: np.ndarray,
    C: float,
    tol: float = 1e-3,
    max_passes: int = 10_000,
    seed: int = 0,
) -> tuple[np.ndarray, float, int]:
    """SMO on the linear-kernel dual; returns (alpha, b, iters).

    Each iteration updates the maximal violating pair (the classic
    working-set rule), with the decision values cached and refreshed in
    O(n) per step.  Deterministic; `seed` is kept for interface
    stability but plays no role in pair selection.
    """
    n = len(y)
    K = X @ X.T
    alpha = np.zeros(n)
    F = np.zeros(n)  # K @ (alpha * y), maintained incrementally
    pos, neg = y > 0, y < 0
    for it in range(max_passes):
        # margin slack y_t - F_t; optimal iff max over I_up <= min over
        # I_low (+ tol), where I_up/I_low are the sets still free to move
        r = y - F
        up = (pos & (alpha < C)) | (neg & (alpha > 0))
        low = (neg & (alpha < C)) | (pos & (alpha > 0))
        if not up.any() or not low.any():
            return alpha, 0.0, it
        up_idx = np.flatnonzero(up)[np.argsort(-r[up])]
        low_idx = np.flatnonzero(low)[np.argsort(r[low])]
        if r[up_idx[0]] - r[low_idx[0]] < tol:
            free = (alpha > 0) & (alpha < C)
            b = (
                float(r[free].mean()) if free.any()
                else float((r[up_idx[0]] + r[low_idx[0]]) / 2.0)
            )
            return alpha, b, it
        # the top pair can be box-blocked (zero step); fall back to the
        # next partners in violation order until one can actually move
        moved = False
        for i in up_idx:
            for j in low_idx:
                if r[i] - r[j] < tol:
                    break
                a_i_old, a_j_old = alpha[i], alpha[j]
                if y[i] != y[j]:
                    lo = max(0.0, a_j_old - a_i_old)
                    hi = min(C, C + a_j_old - a_i_old)
                else:
                    lo = max(0.0, a_i_old + a_j_old - C)
                    hi = min(C, a_i_old + a_j_old)
                eta = 2.0 * K[i, j] - K[i, i] - K[j, j]
                if eta > -1e-12:
                    eta = -1e-12
                e_i, e_j = F[i] - y[i], F[j] - y[j]
                a_j = a_j_old - y[j] * (e_i - e_j) / eta
                a_j = min(hi, max(lo, a_j))
                if a_j == a_j_old:
                    continue
                a_i = a_i_old + y[i] * y[j] * (a_j_old - a_j)
                F += K[:, i] * (y[i] * (a_i - a_i_old)) + K[:, j] * (y[j] * (a_j - a_j_old))
                alpha[i], alpha[j] = a_i, a_j
                moved = True
                break
            if moved:
                break
        if not moved:
            # no feasible pair can improve; report the best bias we have
            free = (alpha > 0) & (alpha < C)
            b = (
                float(r[free].mean()) if free.any()
                else float((r[up_idx[0]] + r[low_idx[0]]) / 2.0)
            )
            return alpha, b, it
    raise ConvergenceError(
        f"SMO did not converge within {max_passes} iterations", max_passes
    )


def dual_objective(alpha: np.ndarray, X: np.ndarray, y: np.ndarray) -> float:
    """SVM dual value: sum(alpha) - 0.5 * (alpha y)' K (alpha y)."""
    ay = alpha * y
    return float(alpha.sum() - 0.5 * ay @ (X @ X.T) @ ay)


def train_svm(
    pos: np.ndarray,
    neg: np.ndarray,
    C: float = 1.0,
    window_set: WindowSet | None = None,
    seed: int = 0,
) -> SvmModel:
    """Train one linear soft-margin SVM via SMO.

    `pos` are genuine feature vectors (label -1 internally), `neg` the
    guessing class (+1).  Emits a margin-quality warning when the two
    classes cannot be separated at all.
    """
    pos = np.atleast_2d(np.asarray(pos, dtype=float))
    neg = np.atleast_2d(np.asarray(neg, dtype=float))
    if len(pos) == 0 or len(neg) == 0:
        raise InsufficientTrainingDataError("both classes must be nonempty")
    if pos.shape[1] != neg.shape[1]:
        raise InsufficientTrainingDataError("feature length mismatch between classes")
    X = np.vstack([pos, neg])
    y = np.concatenate([
        np.full(len(pos), GENUINE_LABEL),
        np.full(len(neg), IMPOSTOR_LABEL),
    ])
    alpha, b, _ = smo_solve(X, y, C, seed=seed)
    w = (alpha * y) @ X
    margin_warning = None
    preds = np.sign(X @ w + b)
    train_err = float(np.mean(preds != y))
    if np.linalg.norm(w) < 1e-9 or train_err >= 0.5:
        margin_warning = (
            f"degenerate margin: |w|={np.linalg.norm(w):.2e}, "
            f"training error {train_err:.2f}"
        )
        _warnings.warn(margin_warning, RuntimeWarning, stacklevel=2)
    return SvmModel(w, float(b), window_set or WindowSet(1, 1, (0,)), margin_warning)


# ---------------------------------------------------------------------------
# ensemble training and scoring
# ---------------------------------------------------------------------------

def _distance_series(signals: list[Signal], tmpl: Template) -> list[DistanceSeries]:
    return [local_distance(align_to_template(s, tmpl), tmpl) for s in signals]


def train_ensemble(
    reg_signals: list[Signal],
    tmpl: Template,
    negatives: list[Signal],
    cfg: EnsembleConfig = EnsembleConfig(),
    seed: int = 0,
    window_sets: list[WindowSet] | None = None,
) -> SvmEnsemble:
    """Build M classifiers for one account.

    Positives: Gaussian-augmented feature vectors from the K
    registration signals.  Negatives: one raw vector per sampled
    negative signal, capped at `max_negative_signals`.  Passing
    `window_sets` (e.g. from a previous ensemble) retrains with the same
    windows, which is how the permanence retrain policy works.
    """
    if len(reg_signals) == 0:
        raise InsufficientTrainingDataError("no registration signals")
    if len(negatives) == 0:
        raise InsufficientTrainingDataError("no negative signals")
    rng = np.random.default_rng(seed)
    pos_ds = _distance_series(reg_signals, tmpl)
    neg_pool = negatives
    if len(neg_pool) > cfg.max_negative_signals:
        idx = rng.choice(len(neg_pool), size=cfg.max_negative_signals, replace=False)
        neg_pool = [neg_pool[i] for i in sorted(idx)]
    neg_ds = _distance_series(neg_pool, tmpl)
    if window_sets is None:
        window_sets = [WindowSet.sample(cfg.H, cfg.T, rng) for _ in range(cfg.M)]
    models = []
    for ws in window_sets:
        pos_vecs = np.vstack([
            sample_feature_vectors(ds, ws, cfg.R_train, True, rng) for ds in pos_ds
        ])
        neg_vecs = np.vstack([
            sample_feature_vectors(ds, ws, 1, False, rng) for ds in neg_ds
        ])
        models.append(
            train_svm(pos_vecs, neg_vecs, cfg.C, ws, seed=int(rng.integers(2**31)))
        )
    return SvmEnsemble(tuple(models), cfg)


def score_distance_series(ens: SvmEnsemble, ds: DistanceSeries, seed: int = 0) -> float:
    """Ensemble score of an already-aligned distance series."""
    rng = np.random.default_rng(seed)
    per_model = []
    for model in ens.models:
        vecs = sample_feature_vectors(ds, model.window_set, ens.config.R_score, False, rng)
        per_model.append(float(model.decision(vecs).mean()))
    return float(np.mean(per_model))


def score(ens: SvmEnsemble, tmpl: Template, s: Signal, seed: int = 0) -> float:
    """Align, extract features per model, average f over picks and models."""
    ds = local_distance(align_to_template(s, tmpl), tmpl)
    return score_distance_series(ens, ds, seed=seed)


def authenticate(
    ens: SvmEnsemble,
    tmpl: Template,
    s: Signal,
    threshold: float | None = None,
    seed: int = 0,
) -> tuple[str, float]:
    """Accept iff score < threshold (boundary rejects)."""
    if threshold is None:
        threshold = ens.threshold
    if threshold is None:
        raise ValueError("no decision threshold configured")
    value = score(ens, tmpl, s, seed=seed)
    return ("accept" if value < threshold else "reject"), value


def calibrate_threshold(
    ens: SvmEnsemble,
    tmpl: Template,
    reg_signals: list[Signal],
    negatives: list[Signal],
    seed: int = 0,
    max_negatives: int = 200,
) -> float:
    """EER threshold from registration-signal scores vs negative scores."""
    from .metrics import eer_threshold

    rng = np.random.default_rng(seed)
    neg_pool = negatives
    if len(neg_pool) > max_negatives:
        idx = rng.choice(len(neg_pool), size=max_negatives, replace=False)
        neg_pool = [neg_pool[i] for i in sorted(idx)]
    genuine = np.array([score(ens, tmpl, s, seed=seed) for s in reg_signals])
    impostor = np.array([score(ens, tmpl, s, seed=seed) for s in neg_pool])
    return eer_threshold(genuine, impostor)
