"""Uniform posterior over the state and its interval update."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

# width of the interval substituted when rounding collapses an update
CLAMP_WIDTH = 1e-15


class UpdateSource(enum.IntEnum):
    """Which kind of round produced a belief change (integer codes match the kernel)."""

    NONE = 0
    OBEY = 1
    DEVIATE = 2
    ON_THE_FENCE = 3


@dataclass(frozen=True)
class Belief:
    """``Unif[lower, upper]`` posterior; the prior is ``Belief(-1, 1)``."""

    lower: float = -1.0
    upper: float = 1.0

    def __post_init__(self):
        if not (-1.0 <= self.lower < self.upper <= 1.0):
            raise ValueError(f"invalid belief interval [{self.lower}, {self.upper}]")

    @property
    def mid(self) -> float:
        return 0.5 * (self.lower + self.upper)

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def contains(self, theta: float) -> bool:
        return self.lower <= theta <= self.upper

    def nested_in(self, other: "Belief") -> bool:
        return other.lower <= self.lower and self.upper <= other.upper


@dataclass(frozen=True)
class UpdateOutcome:
    belief_after: Belief
    changed: bool
    source: UpdateSource
    clamped: bool = False


def sgn(x: float) -> int:
    """Sign with the convention ``sgn(0) = +1``."""
    return -1 if x < 0.0 else 1


def classify_source(changed: bool, message: int, chosen: int) -> UpdateSource:
    if not changed:
        return UpdateSource.NONE
    if message == 0:
        return UpdateSource.ON_THE_FENCE
    if message == chosen:
        return UpdateSource.OBEY
    return UpdateSource.DEVIATE


def update(belief: Belief, x: float, Z: float, b: int, message: int) -> UpdateOutcome:
    """Bayes update of the interval after observing the user's action ``b``.

    The user picks arm 1 iff ``x*theta + Z > 0``, so the action reveals which
    side of ``-Z/x`` the state lies on.  ``Z`` is the user's conditional mean of
    the private signal as computed by the policy; ``message`` only feeds the
    source tag.  ``x == 0`` carries no information and leaves the belief as is.
    """
    if not (math.isfinite(x) and math.isfinite(Z)):
        raise ValueError(f"non-finite update input x={x}, Z={Z}")
    if b not in (-1, 1):
        raise ValueError(f"action must be -1 or +1, got {b}")
    lower, upper = belief.lower, belief.upper
    if x == 0.0:
        return UpdateOutcome(belief, False, UpdateSource.NONE)

    cut = -Z / x
    new_lower, new_upper = lower, upper
    if b * sgn(x) > 0:
        if cut > lower:
            new_lower = cut
    elif cut < upper:
        new_upper = cut

    clamped = False
    if not new_lower < new_upper:
        center = min(max(cut, lower), upper)
        new_lower = max(center - 0.5 * CLAMP_WIDTH, lower)
        new_upper = min(center + 0.5 * CLAMP_WIDTH, upper)
        clamped = True

    changed = new_lower != lower or new_upper != upper
    after = Belief(new_lower, new_upper) if changed else belief
    return UpdateOutcome(after, changed, classify_source(changed, message, b), clamped)
