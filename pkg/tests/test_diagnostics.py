import math

import numpy as np
import pytest

from devlab.belief import Belief
from devlab.diagnostics import (
    UpdateSource,
    accuracy,
    accuracy_decomposition,
    classify_log,
    classify_update,
    mean_series,
    run_diagnostics,
)
from devlab.engine import RecordGranularity, RoundLog, SimConfig, TrialResult, run_trial, run_trials
from devlab.policies import PolicySpec

FULL = RecordGranularity.FULL


def test_accuracy_examples():
    assert accuracy(2.0) == 0.0
    assert accuracy(2.0 / math.e) == pytest.approx(1.0, rel=1e-15)
    assert accuracy(0.2) == pytest.approx(math.log(10.0), rel=1e-15)


@pytest.mark.parametrize("w", [0.0, -0.1, 2.5, math.nan])
def test_accuracy_rejects(w):
    with pytest.raises(ValueError):
        accuracy(w)


def test_flat_trial_has_zero_series():
    T = 20
    log = RoundLog.allocate(np.zeros(T), np.zeros(T))
    log.lower_after[:] = -1.0
    log.upper_after[:] = 1.0
    log.message[:] = 1
    log.chosen[:] = 1
    trial = TrialResult(0, 0.1, np.zeros(T), Belief(), rounds=log)
    d = accuracy_decomposition(trial)
    for name in d.columns():
        assert not np.any(getattr(d, name)), name


def test_rejects_cumulative_only():
    res = run_trial(SimConfig(PolicySpec.ternary(), horizon=10, trials=1), 0)
    with pytest.raises(ValueError):
        accuracy_decomposition(res)


@pytest.mark.parametrize("policy", [PolicySpec.ternary(), PolicySpec.straightforward(), PolicySpec.myopic()],
                         ids=lambda p: p.label)
def test_classification_agrees_with_engine(policy):
    for res in run_trials(SimConfig(policy, horizon=600, trials=3, record=FULL), workers=1):
        vec = classify_log(res.rounds)
        assert np.array_equal(vec, res.rounds.source)
        for i in range(0, 600, 37):
            assert classify_update(res.rounds[i]) == vec[i]


def test_identity_and_monotone_counts():
    for res in run_trials(SimConfig(PolicySpec.ternary(), horizon=3000, trials=10, record=FULL), workers=1):
        d = accuracy_decomposition(res)
        assert d.identity_residual() <= 1e-9
        for c in (d.count_obey, d.count_deviate, d.count_otf):
            assert np.all(np.diff(c) >= 0)
        assert np.all(d.acc_obey >= 0) and np.all(d.acc_deviate >= 0)
        assert d.acc_total[-1] == pytest.approx(accuracy(res.final_width), abs=1e-12)


def test_ternary_gains_come_from_fence():
    series = [accuracy_decomposition(r)
              for r in run_trials(SimConfig(PolicySpec.ternary(), horizon=5000, trials=20, record=FULL), workers=1)]
    m = mean_series(series)
    assert (m.acc_obey[-1] + m.acc_deviate[-1]) <= 0.05 * m.acc_total[-1]
    assert m.acc_otf[-1] == pytest.approx(m.acc_total[-1], rel=0.05)


def test_straightforward_learns_from_deviations():
    wins = 0
    trials = run_trials(SimConfig(PolicySpec.straightforward(), horizon=5000, trials=40, record=FULL), workers=1)
    for r in trials:
        d = accuracy_decomposition(r)
        assert d.count_otf[-1] == 0
        wins += d.acc_deviate[-1] > d.acc_obey[-1]
    assert wins > len(trials) / 2


def test_batch_matches_manual_average():
    c = SimConfig(PolicySpec.straightforward(), horizon=400, trials=7, record=FULL)
    manual = mean_series(accuracy_decomposition(r) for r in run_trials(c, workers=1))
    batch = run_diagnostics(c, workers=2, chunk=3)
    assert np.array_equal(batch.mean.acc_total, manual.acc_total)
    assert np.array_equal(batch.mean.count_deviate, manual.count_deviate)
    assert batch.max_identity_residual <= 1e-9
    assert len(batch.final_acc) == 7
