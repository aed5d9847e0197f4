import math

import mpmath
import numpy as np
import pytest

from multlab import oracles as O
from multlab.expsum import (
    LogPolyPhase,
    PhaseCapError,
    ShiftLogPhase,
    decay_experiment,
    exp_sum,
    phase_eval,
    vdc_bound,
    vdc_Q,
)

LOG = LogPolyPhase(1.0)


def reference_phase(N, g, n):
    with mpmath.workprec(128):
        x = mpmath.mpf(int(n))
        v = mpmath.mpf(g.c0) * mpmath.log(x)
        for i, ci in enumerate(g.c, start=1):
            v += mpmath.mpf(ci) / x**i
        return float(mpmath.fmod(mpmath.mpf(N) * v, 2 * mpmath.pi) % (2 * mpmath.pi))


def test_phase_eval_examples():
    assert phase_eval(0, LOG, 7) == 0
    assert phase_eval(1, LOG, 1) == 0
    ref = reference_phase(1e12, LOG, 2)
    assert abs(phase_eval(1e12, LOG, 2) - ref) < 1e-5


def test_phase_eval_random_against_reference():
    rng = np.random.default_rng(21)
    for _ in range(1000):
        N = float(10 ** rng.uniform(0, 13))
        g = LogPolyPhase(float(rng.choice([0.0, 1.0, -0.5])), tuple(rng.normal(size=2)))
        n = int(rng.integers(1, 10**6))
        got, ref = phase_eval(N, g, n), reference_phase(N, g, n)
        assert abs(complex(math.cos(got), math.sin(got)) - complex(math.cos(ref), math.sin(ref))) < 1e-5


def test_phase_cap():
    with pytest.raises(PhaseCapError):
        phase_eval(1e15, LOG, 10**6)


def test_exp_sum_basics():
    assert exp_sum(0, LOG, 1, 1000) == 1
    L = 10**5
    N = 1e4
    naive = np.mean(np.exp(1j * N * np.log(np.arange(1, L + 1, dtype=float))))
    assert abs(exp_sum(N, LOG, 1, L) - naive) < 1e-9
    v = exp_sum(3e9, LogPolyPhase(0.0, (1.0, 2.0)), 10, 50_000)
    assert exp_sum(-3e9, LogPolyPhase(0.0, (1.0, 2.0)), 10, 50_000) == v.conjugate()
    assert abs(v) <= 1


def test_reciprocal_phase_self_consistent():
    # (1/L) sum_{n<=L} exp(i L^2 / n) is a Riemann sum in x = n/L of exp(i L / x)
    for L in (10**3, 10**4):
        direct = exp_sum(float(L) ** 2, LogPolyPhase(0.0, (1.0,)), 1, L)
        oracle = O.riemann_oracle(float(L), 1, L)
        assert abs(direct - oracle) < 1e-9


def test_shift_phase_merges_and_matches_oracle():
    g = ShiftLogPhase((1, -1, 2), (0, 0, 3))
    assert g.shifts == (3,) and g.exponents == (2,)
    v = exp_sum(1e7, ShiftLogPhase((-1, 1), (0, 1)), 1, 10**7)
    assert abs(v - O.oscillatory_integral(1, 1, 1e-8)) < 1e-2


def test_vdc_bound_examples():
    assert vdc_Q(2) == 2 and vdc_Q(3) == 6
    assert vdc_bound(2, 0.5, 1e3, 1e4, 1.0) == pytest.approx(0.1001, rel=1e-12)
    Ls = [1e3, 2e3, 4e3, 8e3]
    vals = [vdc_bound(2, 0.5, L, 1e4, 1.0) for L in Ls]
    assert all(b < a for a, b in zip(vals, vals[1:]))


def test_decay_small_schedule():
    sched = [(N, int(N**0.6)) for N in (1e4, 1e6, 1e8)]
    rep = decay_experiment(LOG, sched)
    mags = [r.abs_empirical for r in rep.rows]
    assert all(r.in_growth_window for r in rep.rows)
    assert rep.rows[0].ratio == pytest.approx(1.0)
    assert mags[-1] < mags[0]
