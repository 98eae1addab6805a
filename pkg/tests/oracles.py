"""Independent reference computations used by the tests.

Nothing here imports the package's numerics: densities come from
``scipy.stats.norm``, integrals from ``scipy.integrate.quad`` and roots from
``scipy.optimize.brentq``, extended-precision integrals from ``mpmath``.
"""
import math

import mpmath
import numpy as np
from scipy import integrate, optimize, stats

norm = stats.norm


def quad_truncated_mean(lower, upper):
    """E[z | lower < z < upper] by adaptive quadrature of z*phi(z) and phi(z)."""
    # densities relative to the window's mode keep deep-tail windows representable
    center = min(max(0.0, lower), upper)

    def dens(z):
        return math.exp(-0.5 * (z * z - center * center))

    pieces = [(lo, hi) for lo, hi in ((lower, center), (center, upper)) if lo < hi]
    num = den = 0.0
    for lo, hi in pieces:
        # z keeps one sign on each piece, so relative tolerances are meaningful
        num += integrate.quad(lambda z: z * dens(z), lo, hi, epsabs=0, epsrel=1e-13, limit=200)[0]
        den += integrate.quad(dens, lo, hi, epsabs=0, epsrel=1e-13, limit=200)[0]
    return num / den


def mp_truncated_mean(lower, upper, dps=40):
    """E[z | lower < z < upper] by extended-precision quadrature; keeps relative accuracy near a zero mean."""
    with mpmath.workdps(dps):
        a, b = mpmath.mpf(lower), mpmath.mpf(upper)
        num = mpmath.quad(lambda t: t * mpmath.npdf(t), [a, b])
        den = mpmath.quad(mpmath.npdf, [a, b])
        return float(num / den)


def brentq_eve_threshold(y):
    """c with phi(c)/Phi(c) = y (y > 0) or phi(c)/(1-Phi(c)) = -y (y < 0), via log-densities."""
    if y == 0:
        return 0.0
    if y < 0:
        return -brentq_eve_threshold(-y)

    def f(c):
        return math.exp(norm.logpdf(c) - norm.logcdf(c)) - y

    return optimize.brentq(f, -y - 1.0, 60.0, xtol=1e-15, rtol=1e-15, maxiter=500)


def eve_residual(y, c):
    """Defining-equation residual of a candidate threshold."""
    if y > 0:
        return math.exp(norm.logpdf(c) - norm.logcdf(c)) - y
    return math.exp(norm.logpdf(c) - norm.logsf(c)) + y


def myopic_value_quad(rho, x, lower, upper):
    """Myopic payoff by integrating over theta; the z-expectation uses scipy's truncated normal.

    Valid for either sign of x: given the message the user picks arm 1 iff
    x*theta + E[z | message] > 0, and E[z 1{message}] is P(message) * E[z | message].
    """
    p_hi = norm.sf(rho)
    p_lo = norm.cdf(rho)
    a = stats.truncnorm.mean(rho, np.inf) if p_hi > 0 else rho
    b = -stats.truncnorm.mean(-np.inf, rho) if p_lo > 0 else -rho

    def integrand(theta):
        return p_hi * max(x * theta + a, 0.0) + p_lo * max(x * theta - b, 0.0)

    kinks = [k for k in (-a / x, b / x) if lower < k < upper]
    val = integrate.quad(integrand, lower, upper, points=kinks or None, epsabs=1e-14, epsrel=1e-12, limit=200)[0]
    return val / (upper - lower)


def myopic_value_mc(rho, x, lower, upper, n, rng):
    """Monte Carlo estimate ``(mean, standard error)`` of the myopic payoff."""
    theta = rng.uniform(lower, upper, n)
    z = rng.standard_normal(n)
    a = stats.truncnorm.mean(rho, np.inf)
    b = -stats.truncnorm.mean(-np.inf, rho)
    zbar = np.where(z > rho, a, -b)
    pick = x * theta + zbar > 0
    pay = np.where(pick, x * theta + z, 0.0)
    return float(pay.mean()), float(pay.std(ddof=1) / math.sqrt(n))


def myopic_value_clip(rho, x, lower, upper):
    """Closed form of the theta integral for x > 0, using clipped kink locations."""
    phi = norm.pdf(rho)
    cdf = norm.cdf(rho)
    a = phi / norm.sf(rho)
    b = phi / cdf
    t_plus = min(max(-a / x, lower), upper)
    t_minus = min(max(b / x, lower), upper)
    val = ((1 - cdf) * x * (upper ** 2 - t_plus ** 2) / 2 + phi * (upper - t_plus)
           + cdf * x * (upper ** 2 - t_minus ** 2) / 2 - phi * (upper - t_minus))
    return val / (upper - lower)


def expected_shrink_eve_explore_only(m, c_of):
    """50% x P(exploration message) for a fixed belief midpoint ``m``, integrating over x."""
    def f(x):
        y = abs(x * m)
        return norm.pdf(x) * (0.5 if y == 0 else norm.cdf(c_of(y)))

    return 50.0 * 2.0 * integrate.quad(f, 0.0, 12.0, limit=200)[0]
