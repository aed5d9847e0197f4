import math

import numpy as np
import pytest

from multlab import families as F
from multlab import pretentious as P
from multlab.averaging import Mode
from multlab.mfunc import primes_up_to, value_at

VI = F.example_family("vi")
ONE = F.constant_one()


def test_distance_examples():
    assert P.distance_sq_partial(VI, VI, 10**4) == pytest.approx(0, abs=1e-13)
    # 2 (1/2 + 1/3 + 1/5 + 1/7) = 247/105
    assert P.distance_sq_partial(F.liouville(), ONE, 10) == pytest.approx(247 / 105, abs=1e-12)
    gap = P.distance_sq_partial(VI, ONE, 10**6) - P.distance_sq_partial(VI, ONE, 10**4)
    p = primes_up_to(10**6)
    p = p[p > 10**4]
    tail = math.fsum(((1 - np.cos(2 * np.pi / p)) / p).tolist())
    assert gap == pytest.approx(tail, abs=1e-12) and gap <= 1e-3


def test_distance_monotone_symmetric_triangle():
    rng = np.random.default_rng(4)
    specs = [VI, ONE, F.character(5, 1).spec, F.archimedean(0.3), F.liouville()]
    Ps = [10, 100, 1000, 10**4]
    for f in specs:
        vals = [v for _, v in P.distance_sq_series(f, ONE, Ps)]
        assert all(b >= a for a, b in zip(vals, vals[1:]))
    for _ in range(20):
        f, g, h = (specs[i] for i in rng.choice(len(specs), 3))
        for Pc in Ps:
            d = lambda a, b: math.sqrt(max(P.distance_sq_partial(a, b, Pc), 0.0))
            assert d(f, g) == pytest.approx(d(g, f), abs=1e-12)
            assert d(f, g) <= d(f, h) + d(h, g) + 1e-12


def test_polar_data():
    pd = P.polar_data(ONE, 1000)
    assert np.all(pd.r == 1) and np.all(pd.theta == 0) and pd.sum_theta_sq == 0
    pd = P.polar_data(VI, 1000)
    assert pd.theta[0] == -0.5
    assert np.allclose(pd.theta[1:], 1.0 / pd.primes[1:], atol=1e-15)
    pd = P.polar_data(F.example_family("vi", variant="1-1/p"), 1000)
    assert np.allclose(pd.r, 1 - 1 / pd.primes) and np.all(pd.theta == 0)


def test_A_of_N_and_slow_variation():
    assert P.A_of_N(ONE, 1, 10**4) == 0
    p = primes_up_to(10**6).astype(float)
    expected = -0.25 + math.fsum((1 / p[1:] ** 2).tolist())
    assert P.A_of_N(VI, 1, 10**6) == pytest.approx(expected, abs=1e-14)
    p3 = p[(p > 10**3)]
    assert P.slowly_varying_defect(VI, 10**6, 0.5) <= math.fsum((1 / p3**2).tolist())


def test_concentration_defect():
    assert P.concentration_defect(ONE, 1000, 0.0) == 0
    A = P.A_of_N(VI, 1, 10**5)
    v = P.concentration_defect(VI, 10**5, A)
    assert abs(v - P.concentration_defect_direct(VI, 10**5, A)) <= 1e-12
    grid = np.linspace(-0.5, 0.5, 201)
    best = min(P.concentration_defect(VI, 10**4, t) for t in grid)
    assert best <= P.concentration_defect(VI, 10**4, P.A_of_N(VI, 1, 10**4))
    with pytest.raises(ValueError):
        P.concentration_defect(F.mobius(), 100, 0.0)


def test_decompose():
    r = P.decompose(ONE, 0.1, 1000)
    assert r.P_eps == 2 and r.tail_bound == 0
    r = P.decompose(VI, 1e-6, 10**6)
    assert r.P_eps <= 1000 and r.tail_bound <= 1e-6
    rng = np.random.default_rng(8)
    for n in rng.integers(1, 10**7, 1000).tolist():
        assert abs(value_at(r.f1, n) * value_at(r.f2, n) - value_at(VI, n)) <= 1e-12
    for n in (2, 97, 1009, 10**6 + 3):
        assert abs(abs(value_at(r.f2, n)) - 1) < 1e-15
    pd2 = P.polar_data(r.f2, 10**6)
    mask = pd2.primes > r.P_eps
    assert math.fsum((pd2.theta[mask] ** 2 / pd2.primes[mask]).tolist()) <= 1e-6
    with pytest.raises(ValueError):
        P.decompose(F.liouville(), 1e-9, 30)


def test_besicovitch():
    ex3 = F.example_family("iii")
    assert P.besicovitch_defect(ex3, [-1, 1, 1], 0.0, 3000) == 0
    A = P.A_of_N(VI, 1, 10**5)
    assert abs(P.besicovitch_defect(VI, [1], A, 10**5) - P.concentration_defect(VI, 10**5, A)) <= 1e-12
    assert P.besicovitch_defect(ex3, [-1, 1, 1], 0.0, 3000, Mode.LOGARITHMIC) == 0
