"""Where the recommender's knowledge comes from: per-source update counts and accuracy gains.

Accuracy after round ``t`` is ``-log(w_{t+1} / 2)``, zero at the prior.  Each
round's gain ``-log(w_{t+1} / w_t)`` is credited to the kind of update that
produced it (obedience, deviation or an on-the-fence message), so the three
partial sums add up to the total.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace
from typing import Iterable, Optional

import numpy as np

from .belief import UpdateSource
from .engine import RecordGranularity, RoundLog, RoundRecord, SimConfig, TrialResult, run_trials

__all__ = [
    "UpdateSource",
    "DiagnosticsSeries",
    "classify_update",
    "classify_log",
    "accuracy",
    "accuracy_decomposition",
    "mean_series",
    "BatchDiagnostics",
    "run_diagnostics",
]


def classify_update(record: RoundRecord) -> UpdateSource:
    """Source of the belief change in one round, or ``NONE`` if nothing changed."""
    if record.belief_after == record.belief_before:
        return UpdateSource.NONE
    if record.message == 0:
        return UpdateSource.ON_THE_FENCE
    if record.message != record.chosen:
        return UpdateSource.DEVIATE
    return UpdateSource.OBEY


def classify_log(log: RoundLog) -> np.ndarray:
    """Vectorised ``classify_update`` over a whole trial."""
    changed = (log.lower_after != log.lower_before) | (log.upper_after != log.upper_before)
    out = np.full(len(log), int(UpdateSource.NONE), dtype=np.int8)
    out[changed & (log.message == log.chosen)] = UpdateSource.OBEY
    out[changed & (log.message != 0) & (log.message != log.chosen)] = UpdateSource.DEVIATE
    out[changed & (log.message == 0)] = UpdateSource.ON_THE_FENCE
    return out


def accuracy(width_after: float) -> float:
    """``-ln(width_after / 2)``: 0 for the prior, one nat per factor ``e`` of shrinkage."""
    if not width_after > 0.0:
        raise ValueError(f"width must be positive, got {width_after}")
    if width_after > 2.0:
        raise ValueError(f"width cannot exceed the prior width 2, got {width_after}")
    return -math.log(width_after / 2.0)


@dataclass
class DiagnosticsSeries:
    """Cumulative series indexed by round (entry ``t - 1`` holds the value after round ``t``)."""

    count_obey: np.ndarray
    count_deviate: np.ndarray
    count_otf: np.ndarray
    acc_total: np.ndarray
    acc_obey: np.ndarray
    acc_deviate: np.ndarray
    acc_otf: np.ndarray

    def __len__(self) -> int:
        return len(self.acc_total)

    def identity_residual(self) -> float:
        """Largest ``|acc_total - (acc_obey + acc_deviate + acc_otf)|`` over all rounds."""
        parts = self.acc_obey + self.acc_deviate + self.acc_otf
        return float(np.max(np.abs(self.acc_total - parts))) if len(self) else 0.0

    def columns(self):
        return [f.name for f in fields(self)]


def accuracy_decomposition(trial: TrialResult) -> DiagnosticsSeries:
    """Split one trial's accuracy gain by update source; needs full round records."""
    log = trial.rounds
    if log is None:
        raise ValueError("accuracy decomposition needs a trial run with full round records")
    source = classify_log(log)
    gain = -np.log(log.width_after / log.width_before)
    gain[source == UpdateSource.NONE] = 0.0

    def part(kind):
        mask = source == kind
        return np.cumsum(mask, dtype=np.int64), np.cumsum(np.where(mask, gain, 0.0))

    n_obey, acc_obey = part(UpdateSource.OBEY)
    n_dev, acc_dev = part(UpdateSource.DEVIATE)
    n_otf, acc_otf = part(UpdateSource.ON_THE_FENCE)
    return DiagnosticsSeries(
        count_obey=n_obey,
        count_deviate=n_dev,
        count_otf=n_otf,
        acc_total=-np.log(log.width_after / 2.0),
        acc_obey=acc_obey,
        acc_deviate=acc_dev,
        acc_otf=acc_otf,
    )


class _Accumulator:
    # running field-wise sum in trial order, so averages do not depend on chunking
    def __init__(self):
        self.total = None
        self.n = 0

    def add(self, d: DiagnosticsSeries):
        if self.total is None:
            self.total = {name: getattr(d, name).astype(float) for name in d.columns()}
        else:
            for name, acc in self.total.items():
                acc += getattr(d, name)
        self.n += 1

    def mean(self) -> DiagnosticsSeries:
        if not self.n:
            raise ValueError("no series to average")
        return DiagnosticsSeries(**{name: acc / self.n for name, acc in self.total.items()})


def mean_series(series: Iterable[DiagnosticsSeries]) -> DiagnosticsSeries:
    """Average a collection of per-trial series field by field (counts become floats)."""
    acc = _Accumulator()
    for s in series:
        acc.add(s)
    return acc.mean()


@dataclass
class BatchDiagnostics:
    mean: DiagnosticsSeries
    final_acc: np.ndarray
    max_identity_residual: float


def run_diagnostics(config: SimConfig, workers: Optional[int] = None, backend=None,
                    chunk: int = 128) -> BatchDiagnostics:
    """Run ``config`` with full records and average the decomposition over trials.

    Trials are processed ``chunk`` at a time so round logs never pile up.
    """
    if config.record is not RecordGranularity.FULL:
        config = replace(config, record=RecordGranularity.FULL)
    acc = _Accumulator()
    final = np.empty(config.trials)
    worst = 0.0
    for start in range(0, config.trials, chunk):
        idx = range(start, min(start + chunk, config.trials))
        for res in run_trials(config, workers, backend, indices=idx):
            d = accuracy_decomposition(res)
            acc.add(d)
            final[res.trial_index] = d.acc_total[-1]
            worst = max(worst, d.identity_residual())
    return BatchDiagnostics(acc.mean(), final, worst)
