import pytest
from hypothesis import given, strategies as st

from devlab.user_model import choose, decide, optimal_arm, regret


def test_choose_examples():
    assert choose(1.0, 0.3, -0.1) == 1
    assert choose(1.0, 0.3, -0.5) == -1
    assert choose(-2.0, 0.5, 1.0) == -1  # exact tie goes to -1


def test_optimal_examples():
    assert optimal_arm(1.0, 0.2, 0.1) == 1
    assert optimal_arm(1.0, 0.2, -0.3) == -1
    assert optimal_arm(0.0, 0.9, -0.3) == -1


def test_regret_examples():
    assert regret(1.0, 0.2, 0.1, 1) == 0.0
    assert regret(1.0, 0.2, 0.1, -1) == pytest.approx(0.3)
    assert regret(1.0, 0.2, -0.5, 1) == pytest.approx(0.3)


r = st.floats(-10, 10)


@given(r, st.floats(-1, 1), r, st.sampled_from([-1, 1]))
def test_regret_properties(x, theta, z, b):
    reg = regret(x, theta, z, b)
    assert reg >= 0.0
    if b == optimal_arm(x, theta, z):
        assert reg == 0.0
    else:
        assert reg == pytest.approx(abs(x * theta + z), abs=1e-15)


@given(r, st.floats(-1, 1), r, r)
def test_decide_bundle(x, theta, z, Z):
    d = decide(x, theta, z, Z)
    assert d.chosen == choose(x, theta, Z)
    assert d.optimal == optimal_arm(x, theta, z)
    assert d.per_round_regret == regret(x, theta, z, d.chosen)
