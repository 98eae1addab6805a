"""Deviation-based learning: a recommender learns a scalar state from whether
informed users follow or deviate from its recommendations."""

__version__ = "0.1.0"

from .belief import Belief, UpdateSource, update  # noqa: E402
from .engine import (  # noqa: E402
    AggregateResult,
    InvariantViolation,
    RecordGranularity,
    SimConfig,
    TrialResult,
    per_round_regret_experiment,
    run_batch,
    run_trial,
    run_trials,
    shrink_experiment,
)
from .normal_math import eve_threshold, mills_lower, mills_upper, truncated_mean  # noqa: E402
from .policies import PolicyKind, PolicySpec, myopic_threshold, myopic_value, signal  # noqa: E402

__all__ = [
    "__version__",
    "AggregateResult",
    "Belief",
    "InvariantViolation",
    "PolicyKind",
    "PolicySpec",
    "RecordGranularity",
    "SimConfig",
    "TrialResult",
    "UpdateSource",
    "eve_threshold",
    "mills_lower",
    "mills_upper",
    "myopic_threshold",
    "myopic_value",
    "per_round_regret_experiment",
    "run_batch",
    "run_trial",
    "run_trials",
    "shrink_experiment",
    "signal",
    "truncated_mean",
    "update",
]
