"""Pure-Python trial loop, used when the compiled kernel is unavailable.

Same call signature and error codes as ``devlab._kernel``; built directly on
the public policy, user and belief functions.
"""
from __future__ import annotations

from .belief import Belief, update
from .normal_math import eve_threshold
from .policies import (
    MyopicOptimumError,
    PolicyKind,
    myopic_signal,
    straightforward_signal,
    ternary_signal,
    threshold_signal,
)
from .user_model import choose, optimal_arm, regret

NAME = "python"
RELEASES_GIL = False

OK = 0
ERR_CONSISTENCY = 1
ERR_INFORMATIVENESS = 2
ERR_EVE_HALVING = 3
ERR_NESTING = 4
ERR_MYOPIC_OPTIMUM = 5

_STRAIGHT = PolicyKind.STRAIGHTFORWARD.code
_TERNARY = PolicyKind.TERNARY.code
_MYOPIC = PolicyKind.MYOPIC.code
_EVE = PolicyKind.EVE.code


def _signal(kind, c_eps, cutoff, belief, x, z):
    if kind == _STRAIGHT:
        return straightforward_signal(belief, x, z)
    if kind == _TERNARY:
        return ternary_signal(belief, x, z, c_eps)
    if kind == _MYOPIC:
        return myopic_signal(belief, x, z)
    if belief.width > cutoff:
        return threshold_signal(eve_threshold(x * belief.mid), z)
    return threshold_signal(-x * belief.mid, z)


def _check(kind, cutoff, theta, x, before, after, message, chosen, changed, clamped):
    if not after.contains(theta):
        return ERR_CONSISTENCY
    if not after.nested_in(before):
        return ERR_NESTING
    if not changed or clamped:
        return OK
    w, w_next = before.width, after.width
    if kind == _STRAIGHT:
        if message != chosen:
            if not w_next < 0.5 * w:
                return ERR_INFORMATIVENESS
        elif not w_next > 0.5 * w:
            return ERR_INFORMATIVENESS
    elif kind == _EVE and w > cutoff:
        xm = x * before.mid
        explore_msg = -1 if xm > 0.0 else (1 if xm < 0.0 else 0)
        if message == explore_msg and w_next > 0.5 * w + 1e-12:
            return ERR_EVE_HALVING
    return OK


def run_trial(kind, c_eps, cutoff, theta, x, z, cum_regret, records=None):
    """Play one trial over the pre-drawn contexts ``x`` and private signals ``z``.

    ``cum_regret`` receives the running regret.  ``records`` is either None or
    the tuple ``(message, chosen, optimal, reg, z_mean, lower_after,
    upper_after, source)`` of preallocated arrays.  Returns ``(lower, upper,
    clamp_count, error_code, error_round)``.
    """
    belief = Belief()
    total = 0.0
    clamps = 0
    theta = float(theta)
    for t in range(len(x)):
        xt = float(x[t])
        zt = float(z[t])
        try:
            sig = _signal(kind, c_eps, cutoff, belief, xt, zt)
        except MyopicOptimumError:
            return belief.lower, belief.upper, clamps, ERR_MYOPIC_OPTIMUM, t
        b = choose(xt, theta, sig.z_conditional_mean)
        reg = regret(xt, theta, zt, b)
        out = update(belief, xt, sig.z_conditional_mean, b, sig.message)
        clamps += out.clamped
        total += reg
        cum_regret[t] = total
        if records is not None:
            rec_msg, rec_chosen, rec_opt, rec_reg, rec_zm, rec_lo, rec_up, rec_src = records
            rec_msg[t] = sig.message
            rec_chosen[t] = b
            rec_opt[t] = optimal_arm(xt, theta, zt)
            rec_reg[t] = reg
            rec_zm[t] = sig.z_conditional_mean
            rec_lo[t] = out.belief_after.lower
            rec_up[t] = out.belief_after.upper
            rec_src[t] = int(out.source)
        err = _check(kind, cutoff, theta, xt, belief, out.belief_after, sig.message, b,
                     out.changed, out.clamped)
        if err != OK:
            return belief.lower, belief.upper, clamps, err, t
        belief = out.belief_after
    return belief.lower, belief.upper, clamps, OK, -1


def single_round(kind, c_eps, cutoff, lower, upper, theta, x, z, width_after, reg_out):
    """One round from the fixed belief ``[lower, upper]`` for each draw ``(theta[i], x[i], z[i])``."""
    start = Belief(lower, upper)
    clamps = 0
    for i in range(len(x)):
        xt = float(x[i])
        zt = float(z[i])
        th = float(theta[i])
        sig = _signal(kind, c_eps, cutoff, start, xt, zt)
        b = choose(xt, th, sig.z_conditional_mean)
        reg_out[i] = regret(xt, th, zt, b)
        out = update(start, xt, sig.z_conditional_mean, b, sig.message)
        clamps += out.clamped
        width_after[i] = out.belief_after.width
    return clamps

