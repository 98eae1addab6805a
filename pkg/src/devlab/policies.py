"""Signal functions of the four recommendation policies.

Each policy maps ``(belief, x, z)`` to a message in ``{-1, 0, +1}`` together
with ``Z``, the conditional mean of ``z`` a rational user infers from that
message.  Binary policies are threshold rules: send +1 iff ``z > rho``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional, Tuple, Union

from .belief import Belief
from .normal_math import eve_threshold, mills_lower, mills_upper, std_cdf, std_pdf, truncated_mean

# golden-section termination in rho
RHO_TOL = 1e-10
# half-width of the rho search domain beyond |x|
RHO_MARGIN = 12.0
# widths within this relative distance of 1/sqrt(T) count as exploited, so a
# belief such as (0.49, 0.50) sits on the boundary despite rounding
PHASE_RTOL = 1e-12

_INV_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
_INV_GOLDEN_SQ = (3.0 - math.sqrt(5.0)) / 2.0


class PolicyKind(str, enum.Enum):
    STRAIGHTFORWARD = "straightforward"
    TERNARY = "ternary"
    MYOPIC = "myopic"
    EVE = "eve"

    @property
    def code(self) -> int:
        return _KIND_CODES[self]


_KIND_CODES = {
    PolicyKind.STRAIGHTFORWARD: 0,
    PolicyKind.TERNARY: 1,
    PolicyKind.MYOPIC: 2,
    PolicyKind.EVE: 3,
}


@dataclass(frozen=True)
class PolicySpec:
    """Policy choice plus its parameters.

    ``c_eps`` (on-the-fence half-width per unit of belief width) is required
    for the ternary policy only; ``horizon`` (sets the exploration cutoff
    ``1/sqrt(horizon)``) for EvE only.
    """

    kind: PolicyKind
    c_eps: Optional[float] = None
    horizon: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "kind", PolicyKind(self.kind))
        if self.kind is PolicyKind.TERNARY:
            if self.c_eps is None or not self.c_eps > 0:
                raise ValueError("ternary policy needs c_eps > 0")
        elif self.c_eps is not None:
            raise ValueError(f"c_eps only applies to the ternary policy, not {self.kind.value}")
        if self.kind is PolicyKind.EVE:
            if self.horizon is None or self.horizon < 1:
                raise ValueError("EvE policy needs horizon >= 1")
        elif self.horizon is not None:
            raise ValueError(f"horizon only applies to the EvE policy, not {self.kind.value}")

    @classmethod
    def straightforward(cls) -> "PolicySpec":
        return cls(PolicyKind.STRAIGHTFORWARD)

    @classmethod
    def ternary(cls, c_eps: float = 0.25) -> "PolicySpec":
        return cls(PolicyKind.TERNARY, c_eps=c_eps)

    @classmethod
    def myopic(cls) -> "PolicySpec":
        return cls(PolicyKind.MYOPIC)

    @classmethod
    def eve(cls, horizon: int) -> "PolicySpec":
        return cls(PolicyKind.EVE, horizon=horizon)

    @classmethod
    def eve_exploration(cls) -> "PolicySpec":
        """EvE pinned to its exploration phase for any realistic belief width."""
        return cls(PolicyKind.EVE, horizon=2**62)

    @property
    def label(self) -> str:
        return self.kind.value

    def kernel_args(self) -> Tuple[int, float, float]:
        """``(kind code, c_eps, exploration cutoff)`` as passed to the trial kernels."""
        c_eps = self.c_eps if self.c_eps is not None else 0.0
        cutoff = eve_cutoff(self.horizon) if self.horizon is not None else 0.0
        return self.kind.code, float(c_eps), cutoff


@dataclass(frozen=True)
class SignalRealization:
    message: int
    z_conditional_mean: float
    threshold_used: Union[float, Tuple[float, float]]

    def window(self) -> Tuple[float, float]:
        """Truncation window of ``z`` implied by the message."""
        if isinstance(self.threshold_used, tuple):
            lo, hi = self.threshold_used
            return {-1: (-math.inf, lo), 0: (lo, hi), 1: (hi, math.inf)}[self.message]
        rho = self.threshold_used
        return (rho, math.inf) if self.message == 1 else (-math.inf, rho)


def threshold_signal(rho: float, z: float) -> SignalRealization:
    """Binary threshold rule: +1 iff ``z > rho``, with the matching one-sided mean."""
    if z > rho:
        return SignalRealization(1, mills_upper(rho), rho)
    return SignalRealization(-1, -mills_lower(rho), rho)


def straightforward_signal(belief: Belief, x: float, z: float) -> SignalRealization:
    """Recommend the arm that looks better at the posterior mean."""
    return threshold_signal(-x * belief.mid, z)


def ternary_signal(belief: Belief, x: float, z: float, c_eps: float) -> SignalRealization:
    eps = c_eps * belief.width
    center = -x * belief.mid
    lo, hi = center - eps, center + eps
    s = x * belief.mid + z
    if s > eps:
        return SignalRealization(1, mills_upper(hi), (lo, hi))
    if s < -eps:
        return SignalRealization(-1, -mills_lower(lo), (lo, hi))
    return SignalRealization(0, truncated_mean(lo, hi), (lo, hi))


# -- myopic policy ---------------------------------------------------------
#
# The closed forms below assume x > 0.  For x < 0, flipping the signs of
# (x, z, rho) swaps the two arms while leaving the state interval alone, so
# V(rho; x, l, u) = V(-rho; -x, l, u) + x*m.


def _case_from(a: float, b: float, xl: float, xu: float) -> int:
    # a = E[z | z > rho], b = -E[z | z < rho]
    if xl > b:
        return 5
    if xu < -a:
        return 6
    if xl < -a:
        return 1 if xu > b else 3
    return 2 if xu > b else 4


def _case_pos(rho: float, x: float, lower: float, upper: float) -> int:
    return _case_from(mills_upper(rho), mills_lower(rho), x * lower, x * upper)


def _value_pos(rho: float, x: float, lower: float, upper: float) -> float:
    a = mills_upper(rho)
    b = mills_lower(rho)
    case = _case_from(a, b, x * lower, x * upper)
    w = upper - lower
    m = 0.5 * (lower + upper)
    if case == 5:
        return x * m
    if case == 6:
        return 0.0
    ph = std_pdf(rho)
    cdf = std_cdf(rho)
    if case == 1:
        return (x * upper * upper + a * b / x) / (2.0 * w)
    base = x * m * (1.0 - cdf) + ph
    if case == 4:
        return base
    if case == 2:
        return base + (x * upper * upper * cdf + ph * b / x - 2.0 * ph * upper) / (2.0 * w)
    return base + (x * lower * lower * (1.0 - cdf) + ph * a / x + 2.0 * ph * lower) / (2.0 * w)


def myopic_case(rho: float, x: float, belief: Belief) -> int:
    """Which of the six closed-form regimes ``rho`` falls in (after reflecting ``x < 0``)."""
    if x == 0.0:
        raise ValueError("myopic value is undefined for x = 0")
    if x > 0.0:
        return _case_pos(rho, x, belief.lower, belief.upper)
    return _case_pos(-rho, -x, belief.lower, belief.upper)


def myopic_value(rho: float, x: float, belief: Belief) -> float:
    """Current user's expected payoff ``V(rho)`` under threshold ``rho``.

    Expectation over ``theta ~ Unif[belief]`` and ``z ~ N(0, 1)``; arm -1 pays 0.
    """
    if x == 0.0:
        raise ValueError("myopic value is undefined for x = 0")
    if x > 0.0:
        return _value_pos(rho, x, belief.lower, belief.upper)
    return _value_pos(-rho, -x, belief.lower, belief.upper) + x * belief.mid


def golden_section_max(f, a: float, b: float, tol: float = RHO_TOL) -> Tuple[float, float]:
    """Maximise ``f`` on ``[a, b]``; returns ``(argmax, max)``."""
    dist = b - a
    if dist <= tol:
        mid = 0.5 * (a + b)
        return mid, f(mid)
    n = int(math.ceil(math.log(tol / dist) / math.log(_INV_GOLDEN)))
    c = a + _INV_GOLDEN_SQ * dist
    d = a + _INV_GOLDEN * dist
    fc = f(c)
    fd = f(d)
    for _ in range(n - 1):
        dist *= _INV_GOLDEN
        if fc > fd:
            b = d
            d, fd = c, fc
            c = a + _INV_GOLDEN_SQ * dist
            fc = f(c)
        else:
            a = c
            c, fc = d, fd
            d = a + _INV_GOLDEN * dist
            fd = f(d)
    return (c, fc) if fc > fd else (d, fd)


def _threshold_pos(x: float, lower: float, upper: float) -> float:
    m = 0.5 * (lower + upper)
    span = x + RHO_MARGIN
    # the case boundaries in rho are exactly c(x*l) and c(x*u)
    cuts = []
    for bound in (lower, upper):
        if bound != 0.0:
            r = eve_threshold(x * bound)
            if -span < r < span:
                cuts.append(r)
    edges = [-span] + sorted(cuts) + [span]

    def value(r):
        return _value_pos(r, x, lower, upper)

    best_rho = -x * m
    best_val = value(best_rho)
    cand = value(0.0)
    if cand > best_val:
        best_rho, best_val = 0.0, cand
    for a, b in zip(edges[:-1], edges[1:]):
        if not b > a:
            continue
        case = _case_pos(0.5 * (a + b), x, lower, upper)
        if case == 1:
            points = [min(max(0.0, a), b)]
        elif case == 4:
            points = [min(max(-x * m, a), b)]
        elif case in (2, 3):
            r, v = golden_section_max(value, a, b)
            if v > best_val:
                best_rho, best_val = r, v
            points = [a, b]
        else:
            continue
        for r in points:
            v = value(r)
            if v > best_val:
                best_rho, best_val = r, v
    # the always-recommend rules (Cases 5 and 6) are limits of the search space
    if best_val < max(x * m, 0.0) - 1e-12:
        return math.nan
    return best_rho


class MyopicOptimumError(ArithmeticError):
    """The threshold search ended below the payoff of always recommending one arm."""


def myopic_threshold(x: float, belief: Belief) -> float:
    """``argmax_rho V(rho)``; ``x == 0`` falls back to the straightforward cut (0)."""
    if x > 0.0:
        rho = _threshold_pos(x, belief.lower, belief.upper)
    elif x < 0.0:
        rho = -_threshold_pos(-x, belief.lower, belief.upper)
    else:
        return 0.0
    if math.isnan(rho):
        raise MyopicOptimumError(f"myopic search fell below the trivial rules at x={x}, belief={belief}")
    return rho


def myopic_signal(belief: Belief, x: float, z: float) -> SignalRealization:
    return threshold_signal(myopic_threshold(x, belief), z)


def eve_cutoff(horizon: int) -> float:
    """Belief width at which EvE stops exploring, ``1/sqrt(horizon)`` plus rounding slack."""
    return (1.0 + PHASE_RTOL) / math.sqrt(horizon)


def eve_rho(belief: Belief, x: float, horizon: int) -> float:
    if belief.width > eve_cutoff(horizon):
        return eve_threshold(x * belief.mid)
    return -x * belief.mid


def eve_signal(belief: Belief, x: float, z: float, horizon: int) -> SignalRealization:
    """Explore with threshold ``c(x*m)`` while the width exceeds ``1/sqrt(horizon)``, then go straightforward."""
    return threshold_signal(eve_rho(belief, x, horizon), z)


def signal(spec: PolicySpec, belief: Belief, x: float, z: float) -> SignalRealization:
    kind = spec.kind
    if kind is PolicyKind.STRAIGHTFORWARD:
        return straightforward_signal(belief, x, z)
    if kind is PolicyKind.TERNARY:
        return ternary_signal(belief, x, z, spec.c_eps)
    if kind is PolicyKind.MYOPIC:
        return myopic_signal(belief, x, z)
    return eve_signal(belief, x, z, spec.horizon)
