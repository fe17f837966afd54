# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops.

Every function mirrors one in ``_pykernels`` operation for operation and
draws from numpy's C distribution functions, so both backends consume the
same random stream and return bitwise-identical results.
"""

import numpy as np

cimport numpy as cnp
from cpython.pycapsule cimport PyCapsule_GetPointer
from libc.math cimport exp, log, sqrt, INFINITY, NAN
from numpy.random cimport bitgen_t
from numpy.random.c_distributions cimport random_standard_normal, random_standard_uniform

cnp.import_array()

cdef enum:
    FTL = 0
    FIXED = 1
    STRATEGY_B = 2

cdef enum:
    STOPPED = 0
    HORIZON = 1

# exp(-36) ~ 2e-16: bridge crossings less likely than this are ignored
cdef double BRIDGE_CUT = 36.0


cdef bitgen_t *_bitgen(gen) except NULL:
    return <bitgen_t *> PyCapsule_GetPointer(gen.bit_generator.capsule, "BitGenerator")


# ---------------------------------------------------------------- stage ODE

cdef inline double _stage_rhs(int n, double b, double mu, double p0, double y, double B) noexcept nogil:
    cdef double K = (n - 1) + b * exp(-mu * y)
    cdef double c = 1.0 - p0 * (1.0 + K)
    cdef double num = ((n - 1) * mu * B + 2.0 * n * (K - 1.0) / mu
                       - 2.0 * (1.0 - 2.0 * p0) * (K - n + 1.0) * (K + 1.0) / (mu * K))
    return num / c


def integrate_stage(int n, double b, double mu, double eps, double y_lo, double y_hi,
                    double B0, Py_ssize_t m):
    """Classical RK4 for the stage coefficient B on ``m`` equal steps."""
    cdef double p0 = 1.0 - eps
    cdef double h = (y_hi - y_lo) / m
    cdef double hh = 0.5 * h
    cdef double y, B, k1, k2, k3, k4
    cdef Py_ssize_t i
    ys = np.empty(m + 1)
    Bs = np.empty(m + 1)
    cdef double[::1] yv = ys
    cdef double[::1] Bv = Bs
    yv[0] = y_lo
    Bv[0] = B0
    B = B0
    with nogil:
        for i in range(m):
            y = y_lo + i * h
            k1 = _stage_rhs(n, b, mu, p0, y, B)
            k2 = _stage_rhs(n, b, mu, p0, y + hh, B + hh * k1)
            k3 = _stage_rhs(n, b, mu, p0, y + hh, B + hh * k2)
            k4 = _stage_rhs(n, b, mu, p0, y + h, B + h * k3)
            B = B + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            yv[i + 1] = y_lo + (i + 1) * h
            Bv[i + 1] = B
        yv[m] = y_hi
    return ys, Bs


# ---------------------------------------------------------------- search

cdef inline Py_ssize_t _ftl_index(double[::1] x) noexcept nogil:
    cdef Py_ssize_t i, best = 0
    for i in range(1, x.shape[0]):
        if x[i] >= x[best]:
            best = i
    return best


cdef inline void _stop_levels(double[::1] x, Py_ssize_t J, double mu, double log_odds,
                              double inv_odds, double *up, double *lo) noexcept nogil:
    # up: x_J at which box J reaches the threshold; lo: x_J at which the best other box does
    cdef Py_ssize_t i, k = -1, N = x.shape[0]
    cdef double mo = -INFINITY, s = 0.0, rest = 0.0, bracket
    for i in range(N):
        if i != J and x[i] >= mo:
            mo = x[i]
            k = i
    for i in range(N):
        if i != J:
            s += exp(mu * (x[i] - mo))
            if i != k:
                rest += exp(mu * (x[i] - mo))
    up[0] = mo + (log(s) + log_odds) / mu
    bracket = inv_odds - rest
    if bracket > 0.0:
        lo[0] = mo + log(bracket) / mu
    else:
        lo[0] = -INFINITY


def run_search(gen, double[::1] x, double mu, double eps, double dt, int policy,
               Py_ssize_t target, double switch_level, long long max_steps, int substeps=1):
    """Simulate one search in place on ``x``.

    Each step of length ``dt`` sums ``substeps`` normals scaled by
    ``sqrt(dt / substeps)``, so a coarse run shares its Brownian path with
    a fine run on the same stream.  Returns ``(n_steps, true_index,
    status)`` with status 0 when the threshold was reached and 1 when
    ``max_steps`` ran out first.
    """
    if substeps < 1:
        raise ValueError("substeps must be positive")
    cdef bitgen_t *rng = _bitgen(gen)
    cdef Py_ssize_t N = x.shape[0]
    cdef Py_ssize_t i, J, jstar
    cdef double p0 = 1.0 - eps
    cdef double log_odds = log(p0 / (1.0 - p0))
    cdef double inv_odds = (1.0 - p0) / p0
    cdef double sdt = sqrt(dt / substeps)
    cdef int k
    cdef double u, acc, mmax, wsum, up, lo, sw_lt, sw_le, sw_ge, d, xj, z
    cdef long long n = 0
    cdef int phase = 0
    cdef int status = -1

    with nogil:
        mmax = x[0]
        for i in range(1, N):
            if x[i] > mmax:
                mmax = x[i]
        wsum = 0.0
        for i in range(N):
            wsum += exp(mu * (x[i] - mmax))
        u = random_standard_uniform(rng)
        acc = 0.0
        jstar = N - 1
        for i in range(N):
            acc += exp(mu * (x[i] - mmax)) / wsum
            if u < acc:
                jstar = i
                break

        while status < 0:
            if policy == FIXED or (policy == STRATEGY_B and phase == 0):
                J = target
            else:
                J = _ftl_index(x)
            _stop_levels(x, J, mu, log_odds, inv_odds, &up, &lo)
            xj = x[J]
            if n == 0 and (xj >= up or xj <= lo):
                status = STOPPED
                break
            sw_lt = -INFINITY
            sw_le = -INFINITY
            sw_ge = INFINITY
            if policy == FTL or (policy == STRATEGY_B and phase == 1):
                for i in range(J):
                    if x[i] > sw_lt:
                        sw_lt = x[i]
                for i in range(J + 1, N):
                    if x[i] > sw_le:
                        sw_le = x[i]
            elif policy == STRATEGY_B:
                sw_ge = switch_level
            d = dt * ((mu if J == jstar else 0.0) - 0.5 * mu)
            while True:
                if n >= max_steps:
                    status = HORIZON
                    break
                z = random_standard_normal(rng)
                for k in range(1, substeps):
                    z += random_standard_normal(rng)
                xj = xj + (sdt * z + d)
                n += 1
                if xj >= up or xj <= lo:
                    status = STOPPED
                    break
                if xj < sw_lt or xj <= sw_le or xj >= sw_ge:
                    if policy == STRATEGY_B:
                        phase = 1
                    break
            x[J] = xj
    return n, jstar, status


# ---------------------------------------------------------------- exit oracle

def exit_paths(gen_normal, gen_uniform, Py_ssize_t n_paths, double x, double a, double b,
               double lam, double sigma2, double dt, long long max_steps):
    """Euler paths of drifted Brownian motion until exit from ``(b, a)``.

    Crossings inside a step are detected with the Brownian-bridge exceedance
    probability and timed at the step midpoint.  Returns ``(side, time)``
    with side 1 (upper), 0 (lower) or -1 (no exit within ``max_steps``).
    """
    cdef bitgen_t *rn = _bitgen(gen_normal)
    cdef bitgen_t *ru = _bitgen(gen_uniform)
    side = np.empty(n_paths, dtype=np.int8)
    times = np.empty(n_paths)
    cdef signed char[::1] sv = side
    cdef double[::1] tv = times
    cdef double sd = sqrt(sigma2 * dt)
    cdef double d = lam * dt
    cdef double s2dt = sigma2 * dt
    cdef double xp, xn, au, al, pu, pl, U
    cdef long long n
    cdef Py_ssize_t k
    cdef signed char s
    with nogil:
        for k in range(n_paths):
            xp = x
            n = 0
            s = -1
            while n < max_steps:
                xn = xp + (sd * random_standard_normal(rn) + d)
                n += 1
                if xn >= a:
                    s = 1
                    break
                if xn <= b:
                    s = 0
                    break
                au = 2.0 * (a - xp) * (a - xn) / s2dt
                al = 2.0 * (xp - b) * (xn - b) / s2dt
                if au < BRIDGE_CUT or al < BRIDGE_CUT:
                    pu = exp(-au) if au < BRIDGE_CUT else 0.0
                    pl = exp(-al) if al < BRIDGE_CUT else 0.0
                    U = random_standard_uniform(ru)
                    if U < pu:
                        s = 1
                        break
                    if U < pu + pl:
                        s = 0
                        break
                xp = xn
            sv[k] = s
            tv[k] = (n - 0.5) * dt if s >= 0 else NAN
    return side, times


# ---------------------------------------------------------------- excursion paths

def driftless_paths(gen, int n_boxes, Py_ssize_t n_steps, double dt):
    """One Brownian path split into labelled excursions above its running minimum.

    Returns ``(W, running_min, X, labels)``; ``labels[i]`` is the box owning
    the excursion in progress at step ``i`` or -1 when ``W`` sits at its minimum.
    """
    cdef bitgen_t *rng = _bitgen(gen)
    W = np.empty(n_steps + 1)
    M = np.empty(n_steps + 1)
    X = np.empty((n_steps + 1, n_boxes))
    labels = np.full(n_steps + 1, -1, dtype=np.int64)
    cdef double[::1] Wv = W
    cdef double[::1] Mv = M
    cdef double[:, ::1] Xv = X
    cdef long long[::1] Lv = labels
    cdef double sdt = sqrt(dt)
    cdef double base
    cdef Py_ssize_t i, j
    cdef long long cur = -1
    with nogil:
        Wv[0] = 0.0
        for i in range(n_steps):
            Wv[i + 1] = sdt * random_standard_normal(rng)
        for i in range(n_steps):
            Wv[i + 1] = Wv[i] + Wv[i + 1]
        Mv[0] = 0.0
        for i in range(1, n_steps + 1):
            Mv[i] = Wv[i] if Wv[i] < Mv[i - 1] else Mv[i - 1]
        for i in range(n_steps + 1):
            base = Mv[i] / n_boxes
            for j in range(n_boxes):
                Xv[i, j] = base
            if Wv[i] > Mv[i]:
                if Wv[i - 1] == Mv[i - 1]:
                    cur = <long long> (random_standard_uniform(rng) * n_boxes)
                    if cur >= n_boxes:
                        cur = n_boxes - 1
                Lv[i] = cur
                Xv[i, cur] = base + (Wv[i] - Mv[i])
    return W, M, X, labels
