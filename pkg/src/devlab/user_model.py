"""The rational short-lived user and the omniscient benchmark."""
from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class UserDecision:
    chosen: int
    optimal: int
    per_round_regret: float


def choose(x: float, theta: float, Z: float) -> int:
    """Arm picked by a user who knows ``theta`` and believes ``E[z] = Z``.

    Ties go to arm -1.
    """
    return 1 if x * theta + Z > 0.0 else -1


def optimal_arm(x: float, theta: float, z: float) -> int:
    return 1 if x * theta + z > 0.0 else -1


def regret(x: float, theta: float, z: float, chosen: int) -> float:
    """Payoff gap to the better arm; arm -1 pays 0, arm 1 pays ``x*theta + z``."""
    r1 = x * theta + z
    best = r1 if r1 > 0.0 else 0.0
    got = r1 if chosen == 1 else 0.0
    return best - got


def decide(x: float, theta: float, z: float, Z: float) -> UserDecision:
    b = choose(x, theta, Z)
    return UserDecision(b, optimal_arm(x, theta, z), regret(x, theta, z, b))
