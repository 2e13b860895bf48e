import numpy as np
import pytest

from fmcode.alignment import dtw_distance
from fmcode.synthgen import (
    PasscodeSpec,
    SAMPLE_RATE,
    UserStyle,
    gen_corpus,
    gen_signal,
    render_preprocessed,
)


class TestGeneration:
    def test_signal_is_reproducible(self):
        rng = np.random.default_rng(0)
        spec = PasscodeSpec.random(rng)
        style = UserStyle.random(spec, rng)
        a = gen_signal(spec, style, seed=5)
        b = gen_signal(spec, style, seed=5)
        np.testing.assert_array_equal(a.positions, b.positions)
        np.testing.assert_array_equal(a.timestamps, b.timestamps)

    def test_different_seeds_differ(self):
        rng = np.random.default_rng(1)
        spec = PasscodeSpec.random(rng)
        style = UserStyle.random(spec, rng)
        a = gen_signal(spec, style, seed=1)
        b = gen_signal(spec, style, seed=2)
        assert a.positions.shape != b.positions.shape or not np.array_equal(
            a.positions, b.positions
        )

    def test_uniform_60hz_sampling(self):
        rng = np.random.default_rng(2)
        spec = PasscodeSpec.random(rng)
        traj = gen_signal(spec, UserStyle.random(spec, rng), seed=0)
        dts = np.diff(traj.timestamps)
        np.testing.assert_allclose(dts, 1.0 / SAMPLE_RATE, atol=1e-9)

    def test_speed_scale_changes_duration(self):
        rng = np.random.default_rng(3)
        spec = PasscodeSpec.random(rng)
        base = UserStyle.random(spec, rng)
        slow = UserStyle(base.speed_scale * 1.5, base.slant, base.via_jitter,
                         base.tremor_sigma)
        t_base = gen_signal(spec, base, seed=0).timestamps[-1]
        t_slow = gen_signal(spec, slow, seed=0).timestamps[-1]
        assert t_slow > t_base * 1.2

    def test_separability_ordering(self):
        # the property every evaluation depends on: same writer closest,
        # spoofer (same content, fresh style) in between, other content far
        rng = np.random.default_rng(4)
        spec = PasscodeSpec.random(rng)
        style = UserStyle.random(spec, rng)
        reg = render_preprocessed(spec, style, 0)
        genuine = render_preprocessed(spec, style, 1)
        spoofer = UserStyle.random(spec, rng, jitter_scale=0.45, tremor_sigma=0.02)
        spoof = render_preprocessed(spec, spoofer, 2)
        other_spec = PasscodeSpec.random(rng)
        other = render_preprocessed(other_spec, UserStyle.random(other_spec, rng), 3)
        d_genuine = dtw_distance(genuine, reg)
        d_spoof = dtw_distance(spoof, reg)
        d_other = dtw_distance(other, reg)
        assert d_genuine < d_spoof < d_other


class TestCorpus:
    def test_shape_and_counts(self):
        corpus = gen_corpus(2, specs_per_user=2, reg=3, test=2, spoofers=2,
                            spoof_reps=2, sessions=2, seed=0)
        assert len(corpus.accounts) == 4
        acct = corpus.accounts[0]
        assert len(acct.reg) == 3
        assert len(acct.test) == 2
        assert len(acct.spoof) == 4
        assert len(acct.sessions) == 2 and len(acct.sessions[0]) == 2

    def test_generation_deterministic(self):
        a = gen_corpus(2, specs_per_user=1, reg=2, test=1, spoofers=1,
                       spoof_reps=1, seed=7)
        b = gen_corpus(2, specs_per_user=1, reg=2, test=1, spoofers=1,
                       spoof_reps=1, seed=7)
        for x, y in zip(a.accounts, b.accounts):
            assert x.account_id == y.account_id
            np.testing.assert_array_equal(x.reg[0].positions, y.reg[0].positions)

    def test_save_load_round_trip(self, tmp_path):
        corpus = gen_corpus(2, specs_per_user=1, reg=2, test=1, spoofers=1,
                            spoof_reps=1, sessions=1, seed=3)
        corpus.save(tmp_path)
        loaded = type(corpus).load(tmp_path)
        assert loaded.seed == corpus.seed
        assert loaded.params == corpus.params
        for orig, back in zip(corpus.accounts, loaded.accounts):
            assert orig.account_id == back.account_id
            assert len(back.sessions) == len(orig.sessions)
            np.testing.assert_array_equal(
                orig.reg[0].positions, back.reg[0].positions
            )
            np.testing.assert_array_equal(
                orig.sessions[0][0].timestamps, back.sessions[0][0].timestamps
            )

    def test_too_few_users_rejected(self):
        with pytest.raises(ValueError):
            gen_corpus(1)
