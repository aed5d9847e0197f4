"""Vectorised double-double (hi + lo) arithmetic for phase reduction.

Only what the exponential-sum code needs: error-free sums and products,
``log n`` for integer ``n`` accurate to ~1e-22 absolute, reciprocal powers,
and reduction of a large phase modulo 2*pi.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

_SPLIT = 134217729.0  # 2**27 + 1

# 2*pi and ln 2 as exact double-double pairs
TWO_PI = (6.283185307179586, 2.4492935982947064e-16)
LN2 = (0.6931471805599453, 2.3190468138462996e-17)

_TABLE_BITS = 10


def two_sum(a, b):
    s = a + b
    bb = s - a
    err = (a - (s - bb)) + (b - bb)
    return s, err


def quick_two_sum(a, b):
    s = a + b
    return s, b - (s - a)


def _split(a):
    t = _SPLIT * a
    hi = t - (t - a)
    return hi, a - hi


def two_prod(a, b):
    p = a * b
    ah, al = _split(a)
    bh, bl = _split(b)
    err = ((ah * bh - p) + ah * bl + al * bh) + al * bl
    return p, err


def dd_add(x, y):
    s, e = two_sum(x[0], y[0])
    t, f = two_sum(x[1], y[1])
    e = e + t
    s, e = quick_two_sum(s, e)
    e = e + f
    return quick_two_sum(s, e)


def dd_mul_d(x, b):
    p, e = two_prod(x[0], b)
    e = e + x[1] * b
    return quick_two_sum(p, e)


def dd_mul(x, y):
    p, e = two_prod(x[0], y[0])
    e = e + (x[0] * y[1] + x[1] * y[0])
    return quick_two_sum(p, e)


def dd_recip_int(n):
    """1/n as a double-double for float-exact integers ``n``."""
    n = np.asarray(n, dtype=np.float64)
    q = 1.0 / n
    p, e = two_prod(q, n)
    r = (1.0 - p) - e
    return quick_two_sum(q, r / n)


@lru_cache(maxsize=1)
def _log_table():
    import mpmath

    size = 1 << _TABLE_BITS
    hi = np.empty(size)
    lo = np.empty(size)
    with mpmath.workprec(160):
        for j in range(size):
            v = mpmath.log(1 + mpmath.mpf(j) / size)
            h = float(v)
            hi[j] = h
            lo[j] = float(v - h)
    return hi, lo


def dd_log_int(n):
    """``log n`` as a double-double for integers ``1 <= n < 2**53``."""
    x = np.asarray(n, dtype=np.float64)
    m, e = np.frexp(x)  # x = m * 2**e, m in [0.5, 1)
    m = 2.0 * m
    e = (e - 1).astype(np.float64)
    size = 1 << _TABLE_BITS
    j = np.floor((m - 1.0) * size).astype(np.int64)
    c = 1.0 + j / size
    thi, tlo = _log_table()
    num = m - c  # exact: both in [1, 2) on the 2**-52 grid
    u = num / c
    p, pe = two_prod(u, c)
    ulo = ((num - p) - pe) / c
    # log1p(u) = u - u^2/2 + u^3/3 - ...; |u| < 2**-10
    u2 = u * u
    sq_hi, sq_lo = two_prod(u, u)
    tail = -(sq_lo * 0.5 + u * ulo) + u2 * u * (1.0 / 3.0 - u * (0.25 - u * (0.2 - u * (1.0 / 6.0 - u / 7.0))))
    l1p = dd_add((u, ulo), (-0.5 * sq_hi, tail))
    res = dd_add((thi[j], tlo[j]), l1p)
    return dd_add(dd_mul_d(LN2, e), res)


def reduce_2pi(x):
    """Reduce a double-double to a double in ``[-pi, pi]`` (sign-symmetric)."""
    hi, lo = x
    k = np.rint(hi / TWO_PI[0])
    p, pe = two_prod(k, TWO_PI[0])
    s, se = two_sum(hi, -p)
    r = s + ((se - pe) + (lo - k * TWO_PI[1]))
    # one correction step for values landing just outside the interval
    r = np.where(r > np.pi, r - TWO_PI[0], r)
    r = np.where(r < -np.pi, r + TWO_PI[0], r)
    return r
