import numpy as np
import pytest

from fmcode.signals import RawTrajectory, Signal
from fmcode.synthgen import PasscodeSpec, UserStyle, render_preprocessed


def random_signal(rng, length, dims=2, rate=50.0):
    labels = tuple(f"a{i}" for i in range(dims))
    return Signal(rng.standard_normal((length, dims)), rate, labels)


@pytest.fixture(scope="session")
def rendered_account():
    """One synthetic account: 5 registration + 3 extra genuine signals,
    plus a different-content signal and a spoof rendering."""
    rng = np.random.default_rng(11)
    spec = PasscodeSpec.random(rng)
    style = UserStyle.random(spec, rng)
    reg = [render_preprocessed(spec, style, i) for i in range(5)]
    extra = [render_preprocessed(spec, style, 100 + i) for i in range(3)]
    other_spec = PasscodeSpec.random(rng)
    other = render_preprocessed(other_spec, UserStyle.random(other_spec, rng), 7)
    spoof_style = UserStyle.random(spec, rng, jitter_scale=0.45, tremor_sigma=0.02)
    spoof = render_preprocessed(spec, spoof_style, 55)
    return {"spec": spec, "style": style, "reg": reg, "extra": extra,
            "other": other, "spoof": spoof}


@pytest.fixture
def ramp_trajectory():
    t = np.arange(20) / 50.0
    pos = np.stack([t, np.zeros_like(t)], axis=1)
    return RawTrajectory(t, pos, "pointer2d")


def pytest_terminal_summary(terminalreporter):
    """One [PASS]/[FAIL] line per acceptance criterion, printed where
    output capture cannot swallow it."""
    try:
        import test_acceptance
    except ImportError:
        return
    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in test_acceptance.RESULTS:
            terminalreporter.write_line(line)
