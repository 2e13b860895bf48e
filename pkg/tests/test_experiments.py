import numpy as np
import pytest

from fmcode import experiments
from fmcode.cnn import TrainConfig
from fmcode.errors import InsufficientScoresError
from fmcode.metrics import MetricsReport
from fmcode.svm import EnsembleConfig
from fmcode.synthgen import gen_corpus

SMALL_CFG = EnsembleConfig(H=16, T=4, M=4, R_train=4, R_score=4)
SMALL_TRAIN = TrainConfig(epochs=3, batch_size=16, dropout_rate=0.0, seed=0)


@pytest.fixture(scope="module")
def small_corpus():
    return gen_corpus(3, specs_per_user=1, reg=3, test=2, spoofers=1,
                      spoof_reps=2, sessions=2, session_drift=0.02, seed=5)


@pytest.fixture(scope="module")
def prepared(small_corpus):
    p = experiments.prepare_corpus(small_corpus)
    experiments.enroll_accounts(p, SMALL_CFG, seed=0)
    experiments.calibrate_id_thresholds(p, seed=0)
    return p


class TestAuthExperiment:
    def test_report_shape_and_counts(self, small_corpus, prepared):
        report = experiments.run_auth_experiment(
            small_corpus, "svm_ensemble", SMALL_CFG, seed=0, prepared=prepared
        )
        assert isinstance(report, MetricsReport)
        assert 0.0 <= report.eer <= 1.0
        assert report.counts == {"n": 3, "k": 2, "m": 2}
        assert report.eer_spoof is not None

    def test_plain_dtw_method(self, small_corpus):
        report = experiments.run_auth_experiment(small_corpus, "plain_dtw", seed=0)
        assert 0.0 <= report.eer <= 1.0

    def test_unknown_method_rejected(self, small_corpus):
        with pytest.raises(ValueError):
            experiments.run_auth_experiment(small_corpus, "nope")

    def test_separable_corpus_yields_low_eer(self, small_corpus, prepared):
        report = experiments.run_auth_experiment(
            small_corpus, "svm_ensemble", SMALL_CFG, seed=0, prepared=prepared
        )
        assert report.eer <= 0.25


class TestIdentExperiment:
    def test_accuracy_monotone_in_k_and_verify_helps_on_spoofs(
        self, small_corpus, prepared
    ):
        report = experiments.run_ident_experiment(
            small_corpus, k_range=range(1, 4), cfg=SMALL_CFG,
            train_cfg=SMALL_TRAIN, seed=0, prepared=prepared,
        )
        ks = report.k_values
        no_v = [report.accuracy_without_verify[k] for k in ks]
        assert no_v == sorted(no_v)  # top-k hit rate cannot drop as k grows
        for k in ks:
            assert 0.0 <= report.accuracy_with_verify[k] <= 1.0
            assert (
                report.spoof_success_with_verify[k]
                <= report.spoof_success_without_verify[k]
            )

    def test_exhaustive_baseline(self, small_corpus, prepared):
        result = experiments.run_exhaustive_ident(
            small_corpus, seed=0, prepared=prepared
        )
        assert 0.0 <= result["accuracy"] <= 1.0
        assert len(result["latency_seconds"]) >= 1
        for v in result["latency_seconds"].values():
            assert v > 0


class TestPermanence:
    def test_session_series_shape(self, small_corpus, prepared):
        out = experiments.run_permanence(
            small_corpus, "update", SMALL_CFG, seed=0, prepared=prepared
        )
        assert out["policy"] == "update"
        assert len(out["acceptance_by_session"]) == 2
        assert out["final_acceptance"] == out["acceptance_by_session"][-1]
        assert all(0.0 <= a <= 1.0 for a in out["acceptance_by_session"])

    def test_unknown_policy_rejected(self, small_corpus):
        with pytest.raises(ValueError):
            experiments.run_permanence(small_corpus, "frobnicate")

    def test_corpus_without_sessions_rejected(self):
        corpus = gen_corpus(2, specs_per_user=1, reg=2, test=1, spoofers=1,
                            spoof_reps=1, sessions=0, seed=1)
        with pytest.raises(InsufficientScoresError):
            experiments.run_permanence(corpus, "static", SMALL_CFG)
