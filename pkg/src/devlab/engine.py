"""Sequential game loop, batched Monte Carlo trials and single-round experiments.

Every trial draws its state, contexts and private signals from its own
Philox stream keyed by ``(base_seed, trial_index[, policy])``, so a trial's
outcome depends only on the configuration and its index, never on worker
count or scheduling.
"""
from __future__ import annotations

import enum
import math
import os
from concurrent.futures import ProcessPoolExecutor, ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from ._backend import get_backend
from .belief import Belief, UpdateSource
from .policies import PolicyKind, PolicySpec

ERROR_NAMES = {
    1: "consistency (state left the belief interval)",
    2: "informativeness (deviation/obedience width dichotomy)",
    3: "EvE exploration halving",
    4: "nesting (belief interval grew)",
    5: "myopic optimum below the always-recommend rules",
}


class InvariantViolation(RuntimeError):
    """A runtime invariant failed inside a trial."""

    def __init__(self, code: int, trial_index: int, t: int):
        self.code = code
        self.trial_index = trial_index
        self.t = t
        super().__init__(f"{ERROR_NAMES.get(code, code)} violated in trial {trial_index}, round {t + 1}")


class RecordGranularity(str, enum.Enum):
    FULL = "full"
    CUMULATIVE_ONLY = "cumulative"


@dataclass(frozen=True)
class SimConfig:
    policy: PolicySpec
    horizon: int = 10_000
    trials: int = 5_000
    base_seed: int = 0
    record: RecordGranularity = RecordGranularity.CUMULATIVE_ONLY
    paired_seeds: bool = False

    def __post_init__(self):
        object.__setattr__(self, "record", RecordGranularity(self.record))
        if self.horizon < 1 or self.trials < 1:
            raise ValueError("horizon and trials must be positive")
        if self.base_seed < 0:
            raise ValueError("base_seed must be non-negative")


def trial_rng(config: SimConfig, trial_index: int) -> np.random.Generator:
    """Counter-based generator for one trial.

    With ``paired_seeds`` the stream ignores the policy, so different policies
    face identical states, contexts and signals trial by trial.
    """
    key = (trial_index,) if config.paired_seeds else (trial_index, config.policy.kind.code + 1)
    seq = np.random.SeedSequence(entropy=config.base_seed, spawn_key=key)
    return np.random.Generator(np.random.Philox(seq))


def draw_world(config: SimConfig, trial_index: int):
    """``(theta, x, z)`` for one trial, drawn in that fixed order."""
    rng = trial_rng(config, trial_index)
    theta = rng.uniform(-1.0, 1.0)
    x = rng.standard_normal(config.horizon)
    z = rng.standard_normal(config.horizon)
    return float(theta), x, z


@dataclass(frozen=True)
class RoundRecord:
    t: int
    x: float
    z: float
    message: int
    chosen: int
    optimal: int
    reg: float
    z_mean: float
    belief_before: Belief
    belief_after: Belief
    update_source: UpdateSource


@dataclass
class RoundLog:
    """Column-wise per-round log of one trial (round ``t`` is index ``t - 1``)."""

    x: np.ndarray
    z: np.ndarray
    message: np.ndarray
    chosen: np.ndarray
    optimal: np.ndarray
    reg: np.ndarray
    z_mean: np.ndarray
    lower_after: np.ndarray
    upper_after: np.ndarray
    source: np.ndarray

    @classmethod
    def allocate(cls, x: np.ndarray, z: np.ndarray) -> "RoundLog":
        T = len(x)
        return cls(
            x=x,
            z=z,
            message=np.zeros(T, dtype=np.int8),
            chosen=np.zeros(T, dtype=np.int8),
            optimal=np.zeros(T, dtype=np.int8),
            reg=np.zeros(T),
            z_mean=np.zeros(T),
            lower_after=np.zeros(T),
            upper_after=np.zeros(T),
            source=np.zeros(T, dtype=np.int8),
        )

    def kernel_arrays(self):
        return (self.message, self.chosen, self.optimal, self.reg, self.z_mean,
                self.lower_after, self.upper_after, self.source)

    @property
    def lower_before(self) -> np.ndarray:
        return np.concatenate(([-1.0], self.lower_after[:-1]))

    @property
    def upper_before(self) -> np.ndarray:
        return np.concatenate(([1.0], self.upper_after[:-1]))

    @property
    def width_before(self) -> np.ndarray:
        return self.upper_before - self.lower_before

    @property
    def width_after(self) -> np.ndarray:
        return self.upper_after - self.lower_after

    def __len__(self) -> int:
        return len(self.x)

    def __getitem__(self, i: int) -> RoundRecord:
        if i < 0:
            i += len(self)
        before = Belief(-1.0, 1.0) if i == 0 else Belief(float(self.lower_after[i - 1]), float(self.upper_after[i - 1]))
        return RoundRecord(
            t=i + 1,
            x=float(self.x[i]),
            z=float(self.z[i]),
            message=int(self.message[i]),
            chosen=int(self.chosen[i]),
            optimal=int(self.optimal[i]),
            reg=float(self.reg[i]),
            z_mean=float(self.z_mean[i]),
            belief_before=before,
            belief_after=Belief(float(self.lower_after[i]), float(self.upper_after[i])),
            update_source=UpdateSource(int(self.source[i])),
        )

    def __iter__(self):
        return (self[i] for i in range(len(self)))


@dataclass
class TrialResult:
    trial_index: int
    theta: float
    cumulative_regret: np.ndarray
    final_belief: Belief
    clamp_count: int = 0
    rounds: Optional[RoundLog] = None

    @property
    def final_width(self) -> float:
        return self.final_belief.width

    @property
    def total_regret(self) -> float:
        return float(self.cumulative_regret[-1])


def run_trial(config: SimConfig, trial_index: int, backend=None, out: Optional[np.ndarray] = None) -> TrialResult:
    """Play one full trial; ``out`` optionally receives the cumulative regret in place."""
    kernel = get_backend(backend)
    theta, x, z = draw_world(config, trial_index)
    cum = out if out is not None else np.empty(config.horizon)
    log = RoundLog.allocate(x, z) if config.record is RecordGranularity.FULL else None
    kind, c_eps, cutoff = config.policy.kernel_args()
    lower, upper, clamps, err, err_t = kernel.run_trial(
        kind, c_eps, cutoff, theta, x, z, cum, None if log is None else log.kernel_arrays()
    )
    if err:
        raise InvariantViolation(err, trial_index, err_t)
    return TrialResult(trial_index, theta, cum, Belief(lower, upper), int(clamps), log)


def resolve_workers(workers: Optional[int] = None) -> int:
    if workers is None:
        env = os.environ.get("DEVLAB_WORKERS")
        workers = int(env) if env else (os.cpu_count() or 1)
    if workers < 1:
        raise ValueError("workers must be >= 1")
    return workers


def _run_chunk(config: SimConfig, indices: Sequence[int], backend_name: str) -> List[TrialResult]:
    return [run_trial(config, i, backend_name) for i in indices]


def run_trials(config: SimConfig, workers: Optional[int] = None, backend=None,
               regret_matrix: Optional[np.ndarray] = None,
               indices: Optional[Sequence[int]] = None) -> List[TrialResult]:
    """Run the trials of ``config`` (all, or just ``indices``), returned in index order.

    The compiled kernel releases the GIL, so it is driven by threads; the
    Python loop uses processes.  ``regret_matrix`` rows (by position in
    ``indices``) receive the cumulative regret curves.
    """
    kernel = get_backend(backend)
    indices = list(range(config.trials)) if indices is None else list(indices)
    n = len(indices)
    workers = max(1, min(resolve_workers(workers), n))

    def row(k):
        return None if regret_matrix is None else regret_matrix[k]

    if workers == 1:
        return [run_trial(config, i, kernel, row(k)) for k, i in enumerate(indices)]
    if kernel.RELEASES_GIL:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(lambda k: run_trial(config, indices[k], kernel, row(k)), range(n)))
    chunks = [range(k, n, workers) for k in range(workers)]
    results: List[Optional[TrialResult]] = [None] * n
    with ProcessPoolExecutor(max_workers=workers) as pool:
        jobs = [[indices[k] for k in chunk] for chunk in chunks]
        for chunk, out in zip(chunks, pool.map(_run_chunk, [config] * workers, jobs, [kernel.NAME] * workers)):
            for k, res in zip(chunk, out):
                if regret_matrix is not None:
                    regret_matrix[k] = res.cumulative_regret
                    res.cumulative_regret = regret_matrix[k]
                results[k] = res
    return results  # type: ignore[return-value]


@dataclass
class AggregateResult:
    policy: PolicySpec
    horizon: int
    trials: int
    mean_cum_regret: np.ndarray
    p25: np.ndarray
    p75: np.ndarray
    final_mean: float
    final_two_sigma: float
    final_regrets: np.ndarray
    final_widths: np.ndarray
    clamp_count: int = 0
    trial_results: Optional[List[TrialResult]] = field(default=None, repr=False)

    def mean_at(self, t: int) -> float:
        """Mean cumulative regret after round ``t`` (1-based)."""
        return float(self.mean_cum_regret[t - 1])


def aggregate(policy: PolicySpec, matrix: np.ndarray, widths: np.ndarray, clamps: int = 0,
              trial_results=None) -> AggregateResult:
    """Reduce a ``(trials, T)`` cumulative-regret matrix to curves and final-round stats."""
    n, T = matrix.shape
    mean = matrix.mean(axis=0)
    p25, p75 = np.percentile(matrix, [25.0, 75.0], axis=0, method="linear")
    final = matrix[:, -1].copy()
    sd = final.std(ddof=1) if n > 1 else 0.0
    return AggregateResult(
        policy=policy,
        horizon=T,
        trials=n,
        mean_cum_regret=mean,
        p25=p25,
        p75=p75,
        final_mean=float(final.mean()),
        final_two_sigma=float(2.0 * sd / math.sqrt(n)),
        final_regrets=final,
        final_widths=np.asarray(widths, dtype=float),
        clamp_count=int(clamps),
        trial_results=trial_results,
    )


def run_batch(config: SimConfig, workers: Optional[int] = None, backend=None,
              keep_trials: bool = False) -> AggregateResult:
    """Run all trials and aggregate mean, interquartile band and the final two-sigma half-width."""
    matrix = np.empty((config.trials, config.horizon))
    results = run_trials(config, workers, backend, regret_matrix=matrix)
    widths = np.array([r.final_width for r in results])
    clamps = sum(r.clamp_count for r in results)
    return aggregate(config.policy, matrix, widths, clamps, results if keep_trials else None)


# -- single-round experiments -----------------------------------------------


@dataclass(frozen=True)
class SingleRoundRow:
    width: float
    samples: int
    shrink_pct: float
    shrink_pct_se: float
    regret: float
    regret_se: float


def _width_rng(seed: int, width: float) -> np.random.Generator:
    bits = int(np.float64(width).view(np.uint64))
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy=seed, spawn_key=(bits,))))


def single_round_experiment(policy: PolicySpec, u_fixed: float, widths: Sequence[float],
                            samples: int = 10_000, seed: int = 0, backend=None) -> List[SingleRoundRow]:
    """Play one round from ``Belief(u_fixed - w, u_fixed)`` for each width ``w``.

    ``theta`` is drawn uniformly from the belief and ``x, z`` from N(0, 1).
    Draws depend only on ``(seed, w)``, so policies are compared on identical
    samples.
    """
    kernel = get_backend(backend)
    kind, c_eps, cutoff = policy.kernel_args()
    rows = []
    for w in widths:
        if not w > 0:
            raise ValueError(f"width must be positive, got {w}")
        start = Belief(u_fixed - w, u_fixed)
        rng = _width_rng(seed, float(w))
        theta = rng.uniform(start.lower, start.upper, samples)
        x = rng.standard_normal(samples)
        z = rng.standard_normal(samples)
        w_after = np.empty(samples)
        reg = np.empty(samples)
        kernel.single_round(kind, c_eps, cutoff, start.lower, start.upper, theta, x, z, w_after, reg)
        shrink = (start.width - w_after) / start.width * 100.0
        se = math.sqrt(samples)
        rows.append(SingleRoundRow(
            width=float(w),
            samples=samples,
            shrink_pct=float(shrink.mean()),
            shrink_pct_se=float(shrink.std(ddof=1) / se) if samples > 1 else 0.0,
            regret=float(reg.mean()),
            regret_se=float(reg.std(ddof=1) / se) if samples > 1 else 0.0,
        ))
    return rows


def shrink_experiment(policy: PolicySpec, u_fixed: float, widths: Sequence[float],
                      samples: int = 10_000, seed: int = 0, backend=None):
    """Expected per-round percentage shrink of the belief width, ``[(w, pct, se), ...]``."""
    rows = single_round_experiment(policy, u_fixed, widths, samples, seed, backend)
    return [(r.width, r.shrink_pct, r.shrink_pct_se) for r in rows]


def per_round_regret_experiment(policy: PolicySpec, u_fixed: float, widths: Sequence[float],
                                samples: int = 10_000, seed: int = 0, backend=None):
    """Expected per-round regret, ``[(w, mean_regret, se), ...]``."""
    rows = single_round_experiment(policy, u_fixed, widths, samples, seed, backend)
    return [(r.width, r.regret, r.regret_se) for r in rows]


def default_policy(kind: str, horizon: int = 10_000, c_eps: float = 0.25) -> PolicySpec:
    kind = PolicyKind(kind)
    if kind is PolicyKind.TERNARY:
        return PolicySpec.ternary(c_eps)
    if kind is PolicyKind.EVE:
        return PolicySpec.eve(horizon)
    return PolicySpec(kind)
