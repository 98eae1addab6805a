# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled trial loop.

Mirrors ``devlab._pyloop`` (and the scalar routines it calls) operation for
operation; the inner loop runs without the GIL.
"""
from libc.math cimport exp, expm1, erf, erfc, sqrt, log, ceil, fabs, fmax, fmin, M_PI, INFINITY, NAN, isnan
from scipy.special.cython_special cimport erfcx

NAME = "compiled"
RELEASES_GIL = True

cdef enum:
    OK = 0
    ERR_CONSISTENCY = 1
    ERR_INFORMATIVENESS = 2
    ERR_EVE_HALVING = 3
    ERR_NESTING = 4
    ERR_MYOPIC_OPTIMUM = 5
    K_STRAIGHT = 0
    K_TERNARY = 1
    K_MYOPIC = 2
    K_EVE = 3
    SRC_NONE = 0
    SRC_OBEY = 1
    SRC_DEVIATE = 2
    SRC_OTF = 3

cdef double SQRT_2 = sqrt(2.0)
cdef double INV_SQRT_2PI = 1.0 / sqrt(2.0 * M_PI)
cdef double SQRT_2_OVER_PI = sqrt(2.0 / M_PI)
cdef double INV_GOLDEN = (sqrt(5.0) - 1.0) / 2.0
cdef double INV_GOLDEN_SQ = (3.0 - sqrt(5.0)) / 2.0
cdef double RHO_TOL = 1e-10
cdef double RHO_MARGIN = 12.0
cdef double NARROW = 0.5
cdef double CLAMP_WIDTH = 1e-15

cdef double[4] GL_NODES = [0.18343464249564978, 0.525532409916329, 0.7966664774136267, 0.9602898564975362]
cdef double[4] GL_WEIGHTS = [0.36268378337836177, 0.31370664587788705, 0.22238103445337434, 0.10122853629037669]


# -- normal primitives -------------------------------------------------------

cdef inline double std_pdf(double x) noexcept nogil:
    return INV_SQRT_2PI * exp(-0.5 * x * x)


cdef inline double std_cdf(double x) noexcept nogil:
    return 0.5 * erfc(-x / SQRT_2)


cdef inline double mills_lower(double c) noexcept nogil:
    if c > 0.0:
        return std_pdf(c) / std_cdf(c)
    return SQRT_2_OVER_PI / erfcx(-c / SQRT_2)


cdef inline double mills_upper(double c) noexcept nogil:
    return mills_lower(-c)


cdef double narrow_mean(double lower, double upper) noexcept nogil:
    cdef double center = 0.5 * (lower + upper)
    cdef double h = 0.5 * (upper - lower)
    cdef double num = 0.0, den = 0.0, s, fp, fm
    cdef int i
    for i in range(4):
        s = h * GL_NODES[i]
        fp = exp(-center * s - 0.5 * s * s)
        fm = exp(center * s - 0.5 * s * s)
        num += GL_WEIGHTS[i] * s * (fp - fm)
        den += GL_WEIGHTS[i] * (fp + fm)
    return center + num / den


cdef double truncated_mean(double lower, double upper) noexcept nogil:
    # callers guarantee lower < upper
    cdef double d, r_up, r_lo, num, den, t
    if lower == -INFINITY and upper == INFINITY:
        return 0.0
    if lower == -INFINITY:
        return -mills_lower(upper)
    if upper == INFINITY:
        return mills_lower(-lower)
    if lower >= 0.0:
        return -truncated_mean(-upper, -lower)
    t = fmax(-lower, fabs(upper))
    if 0.5 * (upper - lower) * (1.0 + t) <= NARROW:
        return narrow_mean(lower, upper)
    if upper <= 0.0:
        d = 0.5 * (lower - upper) * (lower + upper)
        r_up = erfcx(-upper / SQRT_2)
        r_lo = erfcx(-lower / SQRT_2)
        return SQRT_2_OVER_PI * expm1(-d) / (r_up - r_lo * exp(-d))
    num = std_pdf(lower) - std_pdf(upper)
    den = 0.5 * (erf(upper / SQRT_2) - erf(lower / SQRT_2))
    return num / den


cdef double invert_mills_lower(double y) noexcept nogil:
    cdef double lo = -y, step = 1.0, hi, c, b, f, slope, nxt
    cdef int i
    hi = lo + step
    for i in range(2000):
        if mills_lower(hi) < y:
            break
        lo = hi
        step *= 2.0
        hi = lo + step
    c = 0.5 * (lo + hi)
    for i in range(200):
        b = mills_lower(c)
        f = b - y
        if f == 0.0:
            return c
        if f > 0.0:
            lo = c
        else:
            hi = c
        slope = -b * (c + b)
        if slope != 0.0:
            nxt = c - f / slope
        else:
            nxt = 0.5 * (lo + hi)
        if not (lo < nxt and nxt < hi):
            nxt = 0.5 * (lo + hi)
        if fabs(nxt - c) <= 1e-15 * (1.0 + fabs(c)) or hi - lo <= 4e-16 * (1.0 + fabs(c)):
            return nxt
        c = nxt
    return c


cdef inline double eve_threshold(double y) noexcept nogil:
    if y > 0.0:
        return invert_mills_lower(y)
    if y < 0.0:
        return -invert_mills_lower(-y)
    return 0.0


# -- myopic policy -------------------------------------------------------------

cdef inline int case_from(double a, double b, double xl, double xu) noexcept nogil:
    if xl > b:
        return 5
    if xu < -a:
        return 6
    if xl < -a:
        return 1 if xu > b else 3
    return 2 if xu > b else 4


cdef inline int case_pos(double rho, double x, double lower, double upper) noexcept nogil:
    return case_from(mills_upper(rho), mills_lower(rho), x * lower, x * upper)


cdef double value_pos(double rho, double x, double lower, double upper) noexcept nogil:
    cdef double a = mills_upper(rho)
    cdef double b = mills_lower(rho)
    cdef int case = case_from(a, b, x * lower, x * upper)
    cdef double w = upper - lower
    cdef double m = 0.5 * (lower + upper)
    cdef double ph, cdf, base
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


cdef double golden_max(double a, double b, double x, double lower, double upper,
                       double* best) noexcept nogil:
    cdef double dist = b - a, c, d, fc, fd, mid
    cdef int n, i
    if dist <= RHO_TOL:
        mid = 0.5 * (a + b)
        best[0] = value_pos(mid, x, lower, upper)
        return mid
    n = <int>ceil(log(RHO_TOL / dist) / log(INV_GOLDEN))
    c = a + INV_GOLDEN_SQ * dist
    d = a + INV_GOLDEN * dist
    fc = value_pos(c, x, lower, upper)
    fd = value_pos(d, x, lower, upper)
    for i in range(n - 1):
        dist *= INV_GOLDEN
        if fc > fd:
            b = d
            d = c
            fd = fc
            c = a + INV_GOLDEN_SQ * dist
            fc = value_pos(c, x, lower, upper)
        else:
            a = c
            c = d
            fc = fd
            d = a + INV_GOLDEN * dist
            fd = value_pos(d, x, lower, upper)
    if fc > fd:
        best[0] = fc
        return c
    best[0] = fd
    return d


cdef double threshold_pos(double x, double lower, double upper) noexcept nogil:
    cdef double m = 0.5 * (lower + upper)
    cdef double span = x + RHO_MARGIN
    cdef double[4] edges
    cdef double[2] pts
    cdef int n_edges = 1, n_pts, i, j, case
    cdef double r, v, a, b, tmp, best_rho, best_val, gv
    edges[0] = -span
    if lower != 0.0:
        r = eve_threshold(x * lower)
        if -span < r and r < span:
            edges[n_edges] = r
            n_edges += 1
    if upper != 0.0:
        r = eve_threshold(x * upper)
        if -span < r and r < span:
            edges[n_edges] = r
            n_edges += 1
    if n_edges == 3 and edges[2] < edges[1]:
        tmp = edges[1]
        edges[1] = edges[2]
        edges[2] = tmp
    edges[n_edges] = span
    n_edges += 1

    best_rho = -x * m
    best_val = value_pos(best_rho, x, lower, upper)
    v = value_pos(0.0, x, lower, upper)
    if v > best_val:
        best_rho = 0.0
        best_val = v
    for i in range(n_edges - 1):
        a = edges[i]
        b = edges[i + 1]
        if not b > a:
            continue
        case = case_pos(0.5 * (a + b), x, lower, upper)
        if case == 1:
            pts[0] = fmin(fmax(0.0, a), b)
            n_pts = 1
        elif case == 4:
            pts[0] = fmin(fmax(-x * m, a), b)
            n_pts = 1
        elif case == 2 or case == 3:
            r = golden_max(a, b, x, lower, upper, &gv)
            if gv > best_val:
                best_rho = r
                best_val = gv
            pts[0] = a
            pts[1] = b
            n_pts = 2
        else:
            continue
        for j in range(n_pts):
            v = value_pos(pts[j], x, lower, upper)
            if v > best_val:
                best_rho = pts[j]
                best_val = v
    # the always-recommend rules (Cases 5 and 6) are limits of the search space
    if best_val < fmax(x * m, 0.0) - 1e-12:
        return NAN
    return best_rho


cdef inline double myopic_threshold(double x, double lower, double upper) noexcept nogil:
    if x > 0.0:
        return threshold_pos(x, lower, upper)
    if x < 0.0:
        return -threshold_pos(-x, lower, upper)
    return 0.0


# -- one round -----------------------------------------------------------------

cdef struct Signal:
    int message
    double z_mean


cdef inline Signal threshold_signal(double rho, double z) noexcept nogil:
    cdef Signal s
    if z > rho:
        s.message = 1
        s.z_mean = mills_upper(rho)
    else:
        s.message = -1
        s.z_mean = -mills_lower(rho)
    return s


cdef Signal policy_signal(int kind, double c_eps, double cutoff, double lower, double upper,
                          double x, double z) noexcept nogil:
    cdef double m = 0.5 * (lower + upper)
    cdef double w = upper - lower
    cdef double eps, center, lo, hi, s
    cdef Signal sig
    if kind == K_STRAIGHT:
        return threshold_signal(-x * m, z)
    if kind == K_TERNARY:
        eps = c_eps * w
        center = -x * m
        lo = center - eps
        hi = center + eps
        s = x * m + z
        if s > eps:
            sig.message = 1
            sig.z_mean = mills_upper(hi)
        elif s < -eps:
            sig.message = -1
            sig.z_mean = -mills_lower(lo)
        else:
            sig.message = 0
            sig.z_mean = truncated_mean(lo, hi)
        return sig
    if kind == K_MYOPIC:
        return threshold_signal(myopic_threshold(x, lower, upper), z)
    if w > cutoff:
        return threshold_signal(eve_threshold(x * m), z)
    return threshold_signal(-x * m, z)


cdef struct Update:
    double lower
    double upper
    bint changed
    bint clamped
    int source


cdef Update belief_update(double lower, double upper, double x, double Z, int b,
                          int message) noexcept nogil:
    cdef Update u
    cdef double cut, new_lower = lower, new_upper = upper, center
    cdef int sg
    u.clamped = False
    if x == 0.0:
        u.lower = lower
        u.upper = upper
        u.changed = False
        u.source = SRC_NONE
        return u
    cut = -Z / x
    sg = -1 if x < 0.0 else 1
    if b * sg > 0:
        if cut > lower:
            new_lower = cut
    elif cut < upper:
        new_upper = cut
    if not new_lower < new_upper:
        center = fmin(fmax(cut, lower), upper)
        new_lower = fmax(center - 0.5 * CLAMP_WIDTH, lower)
        new_upper = fmin(center + 0.5 * CLAMP_WIDTH, upper)
        u.clamped = True
    u.changed = new_lower != lower or new_upper != upper
    u.lower = new_lower
    u.upper = new_upper
    if not u.changed:
        u.source = SRC_NONE
    elif message == 0:
        u.source = SRC_OTF
    elif message == b:
        u.source = SRC_OBEY
    else:
        u.source = SRC_DEVIATE
    return u


cdef inline double regret(double x, double theta, double z, int chosen) noexcept nogil:
    cdef double r1 = x * theta + z
    cdef double best = r1 if r1 > 0.0 else 0.0
    cdef double got = r1 if chosen == 1 else 0.0
    return best - got


cdef int check_round(int kind, double cutoff, double theta, double x,
                     double lo0, double up0, Update* u, int message, int chosen) noexcept nogil:
    cdef double w, w_next, xm
    cdef int explore_msg
    if not (u.lower <= theta and theta <= u.upper):
        return ERR_CONSISTENCY
    if not (lo0 <= u.lower and u.upper <= up0):
        return ERR_NESTING
    if not u.changed or u.clamped:
        return OK
    w = up0 - lo0
    w_next = u.upper - u.lower
    if kind == K_STRAIGHT:
        if message != chosen:
            if not w_next < 0.5 * w:
                return ERR_INFORMATIVENESS
        elif not w_next > 0.5 * w:
            return ERR_INFORMATIVENESS
    elif kind == K_EVE and w > cutoff:
        xm = x * (0.5 * (lo0 + up0))
        if xm > 0.0:
            explore_msg = -1
        elif xm < 0.0:
            explore_msg = 1
        else:
            explore_msg = 0
        if message == explore_msg and w_next > 0.5 * w + 1e-12:
            return ERR_EVE_HALVING
    return OK


def run_trial(int kind, double c_eps, double cutoff, double theta,
              const double[::1] x, const double[::1] z, double[::1] cum_regret,
              records=None):
    """See ``devlab._pyloop.run_trial``."""
    cdef Py_ssize_t T = x.shape[0], t
    cdef signed char[::1] rec_msg, rec_chosen, rec_opt, rec_src
    cdef double[::1] rec_reg, rec_zm, rec_lo, rec_up
    cdef bint full = records is not None
    cdef double lower = -1.0, upper = 1.0, total = 0.0, reg, xt, zt
    cdef long clamps = 0
    cdef int err = OK, b
    cdef Py_ssize_t err_t = -1
    cdef Signal sig
    cdef Update u
    if cum_regret.shape[0] < T or z.shape[0] < T:
        raise ValueError("array length mismatch")
    if full:
        rec_msg, rec_chosen, rec_opt, rec_reg, rec_zm, rec_lo, rec_up, rec_src = records
    with nogil:
        for t in range(T):
            xt = x[t]
            zt = z[t]
            sig = policy_signal(kind, c_eps, cutoff, lower, upper, xt, zt)
            if isnan(sig.z_mean):
                err = ERR_MYOPIC_OPTIMUM
                err_t = t
                break
            b = 1 if xt * theta + sig.z_mean > 0.0 else -1
            reg = regret(xt, theta, zt, b)
            u = belief_update(lower, upper, xt, sig.z_mean, b, sig.message)
            clamps += u.clamped
            total += reg
            cum_regret[t] = total
            if full:
                rec_msg[t] = sig.message
                rec_chosen[t] = b
                rec_opt[t] = 1 if xt * theta + zt > 0.0 else -1
                rec_reg[t] = reg
                rec_zm[t] = sig.z_mean
                rec_lo[t] = u.lower
                rec_up[t] = u.upper
                rec_src[t] = u.source
            err = check_round(kind, cutoff, theta, xt, lower, upper, &u, sig.message, b)
            if err != OK:
                err_t = t
                break
            lower = u.lower
            upper = u.upper
    return lower, upper, clamps, err, err_t


def single_round(int kind, double c_eps, double cutoff, double lower, double upper,
                 const double[::1] theta, const double[::1] x, const double[::1] z,
                 double[::1] width_after, double[::1] reg_out):
    """See ``devlab._pyloop.single_round``."""
    cdef Py_ssize_t n = x.shape[0], i
    cdef long clamps = 0
    cdef int b
    cdef Signal sig
    cdef Update u
    if not (-1.0 <= lower and lower < upper and upper <= 1.0):
        raise ValueError(f"invalid belief interval [{lower}, {upper}]")
    with nogil:
        for i in range(n):
            sig = policy_signal(kind, c_eps, cutoff, lower, upper, x[i], z[i])
            b = 1 if x[i] * theta[i] + sig.z_mean > 0.0 else -1
            reg_out[i] = regret(x[i], theta[i], z[i], b)
            u = belief_update(lower, upper, x[i], sig.z_mean, b, sig.message)
            clamps += u.clamped
            width_after[i] = u.upper - u.lower
    return clamps


# thin wrappers so tests can compare the compiled scalars with the Python ones

def py_truncated_mean(double lower, double upper):
    return truncated_mean(lower, upper)


def py_eve_threshold(double y):
    return eve_threshold(y)


def py_myopic_threshold(double x, double lower, double upper):
    return myopic_threshold(x, lower, upper)


def py_myopic_value_pos(double rho, double x, double lower, double upper):
    return value_pos(rho, x, lower, upper)
