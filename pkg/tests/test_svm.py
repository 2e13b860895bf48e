import itertools

import numpy as np
import pytest

from fmcode.alignment import build_template
from fmcode.errors import InsufficientTrainingDataError
from fmcode.svm import (
    EnsembleConfig,
    GENUINE_LABEL,
    authenticate,
    dual_objective,
    score,
    smo_solve,
    train_ensemble,
    train_svm,
)

from conftest import random_signal


def brute_force_dual_optimum(X, y, C):
    """Exact maximum of the SVM dual by KKT active-set enumeration.

    Every optimum of the concave dual satisfies KKT with each alpha_i at
    0, at C, or free (stationary).  Enumerate all 3^n assignments, solve
    the resulting linear system for the free alphas plus the equality
    multiplier, keep feasible solutions, and return the best objective.
    """
    n = len(y)
    K = X @ X.T
    best = -np.inf
    for states in itertools.product((0, 1, 2), repeat=n):
        alpha = np.zeros(n)
        free = [i for i, s in enumerate(states) if s == 2]
        for i, s in enumerate(states):
            if s == 1:
                alpha[i] = C
        if free:
            # stationarity: (K u)_i + beta = y_i for free i, u = alpha*y
            # equality:     sum(alpha * y) = 0
            nf = len(free)
            A = np.zeros((nf + 1, nf + 1))
            rhs = np.zeros(nf + 1)
            bound_u = alpha * y
            for r, i in enumerate(free):
                for c, j in enumerate(free):
                    A[r, c] = K[i, j] * y[j]
                A[r, nf] = 1.0
                rhs[r] = y[i] - K[i] @ bound_u
            A[nf, :nf] = y[free]
            rhs[nf] = -float(bound_u.sum())
            sol, *_ = np.linalg.lstsq(A, rhs, rcond=None)
            if np.linalg.norm(A @ sol - rhs) > 1e-8:
                continue
            alpha[free] = sol[:nf]
        if np.any(alpha < -1e-10) or np.any(alpha > C + 1e-10):
            continue
        if abs(float(alpha @ y)) > 1e-8:
            continue
        best = max(best, dual_objective(np.clip(alpha, 0, C), X, y))
    return best


class TestSmoOracle:
    @pytest.mark.parametrize("seed", range(12))
    def test_dual_within_1e4_of_exhaustive_optimum(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(3, 7))
        X = rng.standard_normal((n, 2)) * 2
        y = np.ones(n)
        y[: n // 2] = -1
        rng.shuffle(y)
        if len(set(y)) < 2:
            y[0] = -y[0]
        C = float(rng.choice([0.5, 1.0, 2.0]))
        # tight KKT tolerance: this checks solver correctness, so the
        # stopping slack must be well below the 1e-4 comparison bound
        alpha, b, _ = smo_solve(X, y, C, tol=1e-6, seed=seed)
        got = dual_objective(alpha, X, y)
        want = brute_force_dual_optimum(X, y, C)
        assert got == pytest.approx(want, abs=1e-4)

    def test_alpha_stays_in_box_and_balanced(self):
        rng = np.random.default_rng(99)
        X = rng.standard_normal((6, 2))
        y = np.array([-1.0, -1.0, -1.0, 1.0, 1.0, 1.0])
        alpha, b, _ = smo_solve(X, y, 1.0, seed=1)
        assert np.all(alpha >= -1e-12) and np.all(alpha <= 1.0 + 1e-12)
        assert abs(float(alpha @ y)) < 1e-8


class TestTrainSvm:
    def test_separable_toy_reaches_zero_training_error(self):
        rng = np.random.default_rng(0)
        pos = rng.normal(0.0, 0.3, (20, 2))        # genuine: small distances
        neg = rng.normal(5.0, 0.3, (20, 2))        # guessing: large distances
        model = train_svm(pos, neg, C=1.0, seed=0)
        assert np.all(model.decision(pos) < 0)
        assert np.all(model.decision(neg) > 0)
        assert model.margin_warning is None

    def test_genuine_side_is_negative_decision(self):
        assert GENUINE_LABEL == -1.0

    def test_identical_classes_warn_degenerate_margin(self):
        same = np.ones((5, 3))
        with pytest.warns(RuntimeWarning, match="degenerate margin"):
            model = train_svm(same, same.copy(), seed=0)
        assert model.margin_warning is not None

    def test_empty_class_rejected(self):
        with pytest.raises(InsufficientTrainingDataError):
            train_svm(np.empty((0, 2)), np.ones((3, 2)))


class TestEnsemble:
    def test_deterministic_for_fixed_seed(self, rendered_account):
        reg = rendered_account["reg"]
        tmpl = build_template(reg)
        negatives = [rendered_account["other"]] * 3
        cfg = EnsembleConfig(H=16, T=4, M=4, R_train=4)
        a = train_ensemble(reg, tmpl, negatives, cfg, seed=3)
        b = train_ensemble(reg, tmpl, negatives, cfg, seed=3)
        for ma, mb in zip(a.models, b.models):
            np.testing.assert_array_equal(ma.w, mb.w)
            assert ma.b == mb.b and ma.window_set == mb.window_set

    def test_genuine_scores_below_other_content(self, rendered_account):
        reg = rendered_account["reg"]
        tmpl = build_template(reg)
        rng = np.random.default_rng(2)
        negatives = [random_signal(rng, 300, reg[0].dims) for _ in range(6)]
        cfg = EnsembleConfig(H=32, T=8, M=8, R_train=4)
        ens = train_ensemble(reg, tmpl, negatives, cfg, seed=0)
        genuine = [score(ens, tmpl, s, seed=7) for s in rendered_account["extra"]]
        other = score(ens, tmpl, rendered_account["other"], seed=7)
        assert max(genuine) < other

    def test_authenticate_boundary_rejects(self, rendered_account):
        reg = rendered_account["reg"]
        tmpl = build_template(reg)
        cfg = EnsembleConfig(H=16, T=4, M=2, R_train=2)
        ens = train_ensemble(reg, tmpl, [rendered_account["other"]], cfg, seed=0)
        s = rendered_account["extra"][0]
        value = score(ens, tmpl, s, seed=7)
        decision, _ = authenticate(ens, tmpl, s, threshold=value, seed=7)
        assert decision == "reject"
        decision, _ = authenticate(ens, tmpl, s, threshold=value + 1e-9, seed=7)
        assert decision == "accept"

    def test_negative_cap_respected(self, rendered_account):
        reg = rendered_account["reg"]
        tmpl = build_template(reg)
        negatives = [rendered_account["other"]] * 12
        cfg = EnsembleConfig(H=16, T=4, M=2, R_train=2, max_negative_signals=5)
        ens = train_ensemble(reg, tmpl, negatives, cfg, seed=0)
        assert len(ens.models) == 2

    def test_retrain_with_fixed_window_sets_keeps_windows(self, rendered_account):
        reg = rendered_account["reg"]
        tmpl = build_template(reg)
        cfg = EnsembleConfig(H=16, T=4, M=3, R_train=2)
        first = train_ensemble(reg, tmpl, [rendered_account["other"]], cfg, seed=0)
        second = train_ensemble(
            reg, tmpl, [rendered_account["other"]], cfg, seed=5,
            window_sets=[m.window_set for m in first.models],
        )
        assert [m.window_set for m in second.models] == [m.window_set for m in first.models]
