from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from multlab import families as F
from multlab import summation as sm
from multlab.averaging import (
    CorrelationQuery,
    Mode,
    WindowSchedule,
    correlation,
    correlation_series,
    harmonic,
    log_average_partial_summation,
    twisted_correlation,
    window_average,
)


def alternating(n):
    return np.where(np.asarray(n) % 2 == 1, 1.0, -1.0).astype(complex)


EX3 = F.example_family("iii")
Q1 = CorrelationQuery((0,), (1,))


def test_window_average_examples():
    one = F.constant_one()
    for mode in Mode:
        assert window_average(one, mode, 1000) == 1
    assert window_average(alternating, Mode.CESARO, 10) == 0
    assert window_average(alternating, Mode.LOGARITHMIC, 4) == pytest.approx(0.28, abs=1e-15)
    with pytest.raises(ValueError):
        window_average(one, Mode.CESARO, 0)


def test_harmonic():
    assert harmonic(4) == pytest.approx(25 / 12, abs=1e-15)


def test_correlation_examples():
    assert correlation(EX3, CorrelationQuery((0, 5), (0, 0)), 100) == 1
    v = correlation(alternating, CorrelationQuery((0, 1), (1, 1)), 10**4)
    assert abs(v + 1) < 1e-12
    w = correlation(EX3, CorrelationQuery((0, 1), (1, 1)), 3 * 10**4)
    assert abs(w + 1 / 3) < 1e-3


def test_series_matches_pointwise_and_prefix():
    q = CorrelationQuery((0, 2), (1, -1), Mode.LOGARITHMIC)
    f = F.example_family("vi")
    windows = [5000, 10000, 50_001, 123_457]
    ser = correlation_series(f, q, windows)
    for N, v in ser:
        assert v == correlation(f, q, N)


def test_series_constant_and_geometric_bound():
    assert all(v == 1 for _, v in correlation_series(F.constant_one(), Q1, [10, 100, 1000]))
    ser = correlation_series(alternating, Q1, [10, 100, 1000])
    assert all(abs(v) <= 1 / N for N, v in ser)


def test_mrt_log_series_increases():
    q = CorrelationQuery((0, 1), (-1, 1), Mode.LOGARITHMIC)
    ser = correlation_series(F.mrt_phase_spec(1000), q, [10**3, 10**4, 10**5, 10**6])
    mags = [abs(v) for _, v in ser]
    assert mags[-1] > mags[0] and abs(mags[-1] - 0.5) < 0.15


def test_twisted_examples():
    for alpha in (0, Fraction(0)):
        assert twisted_correlation(EX3, alpha, Q1, 999) == correlation(EX3, Q1, 999)
    assert abs(abs(twisted_correlation(EX3, Fraction(1, 3), Q1, 3 * 10**5)) - 2 / 3) < 1e-3
    assert abs(twisted_correlation(EX3, Fraction(1, 9), Q1, 3 * 10**5)) <= 5e-3


def test_conjugation_symmetry_exact():
    f = F.example_family("vi")
    q = CorrelationQuery((0, 1, 3), (1, -2, 1))
    for mode in Mode:
        assert correlation(f, q.conjugate(), 20_000, mode) == correlation(f, q, 20_000, mode).conjugate()


def test_shift_stability():
    f = F.example_family("vi")
    q = CorrelationQuery((0, 2), (1, -1))
    N = 20_000
    shifted = CorrelationQuery((1, 3), (1, -1))
    assert abs(correlation(f, q, N) - correlation(f, shifted, N)) <= 2 * (1 + 2 + 1) / N


def test_log_two_routes_agree():
    f = F.example_family("vi")
    for N in (1, 17, 4096, 4097, 100_000):
        assert abs(window_average(f, Mode.LOGARITHMIC, N) - log_average_partial_summation(f, N)) <= 1e-12


@given(st.lists(st.integers(-3, 3), min_size=1, max_size=3), st.integers(0, 3), st.integers(1, 20_000))
@settings(max_examples=30, deadline=None)
def test_magnitude_bound(ks, h, N):
    q = CorrelationQuery(tuple(range(h, h + len(ks))), tuple(ks))
    assert abs(correlation(F.example_family("vi"), q, N)) <= 1 + 1e-12


def test_parallel_serial_bit_identical():
    f = F.mrt_phase_spec(5000)
    q = CorrelationQuery((0, 1), (-1, 1), Mode.LOGARITHMIC)
    windows = [10**5, 3 * 10**6]
    with sm.threads(1):
        a = correlation_series(f, q, windows)
    with sm.threads(4):
        b = correlation_series(f, q, windows)
    assert a == b


def test_schedule_validation():
    with pytest.raises(ValueError):
        WindowSchedule((10, 10))
    with pytest.raises(ValueError):
        WindowSchedule((0, 10))
    assert WindowSchedule.power_of_scale(1.0, [10**4, 10**6], 2).windows == (100, 1000)
