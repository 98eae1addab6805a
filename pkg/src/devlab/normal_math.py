"""Standard-normal primitives, truncated-normal means and the EvE threshold.

Everything here is a pure scalar function.  The Cython kernel in
``_kernel.pyx`` mirrors these routines operation for operation, so the two
backends agree bit for bit on the same inputs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.special import erfcx

SQRT_2 = math.sqrt(2.0)
INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)
SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)

# positive half of the 8-point Gauss-Legendre rule on [-1, 1]
_GL_NODES = (0.18343464249564978, 0.525532409916329, 0.7966664774136267, 0.9602898564975362)
_GL_WEIGHTS = (0.36268378337836177, 0.31370664587788705, 0.22238103445337434, 0.10122853629037669)

# windows with half-width * (1 + max|bound|) below this use the quadrature branch
_NARROW = 0.5


def std_pdf(x: float) -> float:
    """Standard normal density."""
    return INV_SQRT_2PI * math.exp(-0.5 * x * x)


def std_cdf(x: float) -> float:
    """Standard normal CDF, via ``erfc`` so the left tail keeps full relative precision."""
    return 0.5 * math.erfc(-x / SQRT_2)


def mills_lower(c: float) -> float:
    """Return ``phi(c) / Phi(c)``, i.e. ``-E[z | z < c]`` for standard normal ``z``.

    For ``c <= 0`` the ratio is evaluated as ``sqrt(2/pi) / erfcx(-c/sqrt(2))``,
    which stays exact deep in the left tail where ``Phi(c)`` underflows.
    """
    if c > 0.0:
        return std_pdf(c) / std_cdf(c)
    return SQRT_2_OVER_PI / float(erfcx(-c / SQRT_2))


def mills_upper(c: float) -> float:
    """Return ``phi(c) / (1 - Phi(c))``, i.e. ``E[z | z > c]``."""
    return mills_lower(-c)


def _narrow_mean(lower: float, upper: float) -> float:
    # density relative to phi(center) is exp(-center*s - s*s/2) on s in [-h, h]
    center = 0.5 * (lower + upper)
    h = 0.5 * (upper - lower)
    num = 0.0
    den = 0.0
    for t, w in zip(_GL_NODES, _GL_WEIGHTS):
        s = h * t
        fp = math.exp(-center * s - 0.5 * s * s)
        fm = math.exp(center * s - 0.5 * s * s)
        num += w * s * (fp - fm)
        den += w * (fp + fm)
    return center + num / den


def _left_two_sided_mean(lower: float, upper: float) -> float:
    # lower < upper <= 0; everything is scaled by exp(upper**2 / 2)
    d = 0.5 * (lower - upper) * (lower + upper)
    r_up = float(erfcx(-upper / SQRT_2))
    r_lo = float(erfcx(-lower / SQRT_2))
    return SQRT_2_OVER_PI * math.expm1(-d) / (r_up - r_lo * math.exp(-d))


def truncated_mean(lower: float, upper: float) -> float:
    """Mean of a standard normal truncated to ``(lower, upper)``.

    Either bound may be infinite.  One-sided windows use the Mills-ratio
    forms; two-sided windows use ``(phi(l) - phi(u)) / (Phi(u) - Phi(l))``
    with a rescaled variant in the tails and Gauss-Legendre quadrature for
    windows too narrow for the closed form to be free of cancellation.
    """
    if not lower < upper:
        raise ValueError(f"empty truncation window ({lower}, {upper})")
    lo_inf = math.isinf(lower)
    up_inf = math.isinf(upper)
    if lo_inf and up_inf:
        return 0.0
    if lo_inf:
        return -mills_lower(upper)
    if up_inf:
        return mills_lower(-lower)
    if lower >= 0.0:
        return -truncated_mean(-upper, -lower)
    if 0.5 * (upper - lower) * (1.0 + max(-lower, abs(upper))) <= _NARROW:
        return _narrow_mean(lower, upper)
    if upper <= 0.0:
        return _left_two_sided_mean(lower, upper)
    num = std_pdf(lower) - std_pdf(upper)
    den = 0.5 * (math.erf(upper / SQRT_2) - math.erf(lower / SQRT_2))
    return num / den


@dataclass(frozen=True)
class TruncationWindow:
    """Support ``(lower, upper)`` of a truncated standard normal; bounds may be infinite."""

    lower: float = -math.inf
    upper: float = math.inf

    def __post_init__(self):
        if math.isnan(self.lower) or math.isnan(self.upper) or not self.lower < self.upper:
            raise ValueError(f"invalid truncation window ({self.lower}, {self.upper})")

    def mean(self) -> float:
        return truncated_mean(self.lower, self.upper)

    def contains(self, value: float) -> bool:
        return self.lower < value < self.upper


def _invert_mills_lower(y: float) -> float:
    """Solve ``phi(c)/Phi(c) = y`` for ``y > 0``.

    The ratio is strictly decreasing in ``c`` and exceeds ``-c`` everywhere,
    so ``c = -y`` always sits left of the root.  The bracket is expanded to
    the right, then refined by Newton steps that fall back to bisection
    whenever they would leave the bracket.
    """
    lo = -y
    step = 1.0
    hi = lo + step
    for _ in range(2000):
        if mills_lower(hi) < y:
            break
        lo = hi
        step *= 2.0
        hi = lo + step

    c = 0.5 * (lo + hi)
    for _ in range(200):
        b = mills_lower(c)
        f = b - y
        if f == 0.0:
            return c
        if f > 0.0:
            lo = c
        else:
            hi = c
        slope = -b * (c + b)
        nxt = c - f / slope if slope != 0.0 else 0.5 * (lo + hi)
        if not lo < nxt < hi:
            nxt = 0.5 * (lo + hi)
        if abs(nxt - c) <= 1e-15 * (1.0 + abs(c)) or hi - lo <= 4e-16 * (1.0 + abs(c)):
            return nxt
        c = nxt
    return c


def eve_threshold(y: float) -> float:
    """Threshold ``c(y)`` that makes the exploration message leave the user indifferent.

    For ``y > 0`` returns the ``c`` with ``E[z | z < c] = -y``; for ``y < 0`` the
    ``c`` with ``E[z | z > c] = -y``.  ``c(0)`` is fixed to 0.  The function is
    odd: ``eve_threshold(-y) == -eve_threshold(y)`` exactly.
    """
    if y > 0.0:
        return _invert_mills_lower(y)
    if y < 0.0:
        return -_invert_mills_lower(-y)
    return 0.0
