"""Finite-window spectral probes: twisted averages, AP discrepancy, rational
scans, dilation (stationarity) defects, divisibility scans, Cesàro/log
agreement and the mean-value drift.

Twists use ``e(t) = exp(2 pi i t)``; the drift divides by ``N**(it)`` in radians.
"""

from __future__ import annotations

import cmath
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .averaging import (
    ArraySource,
    CorrelationQuery,
    Mode,
    WindowSchedule,
    as_mode,
    as_source,
    correlation,
    correlation_series,
    twisted_series,
    window_average,
)
from .mfunc import value_at

LIGHT_THRESHOLD = 0.05


@dataclass
class ProbeResult:
    alpha: float | Fraction
    magnitude: float
    best_query: CorrelationQuery
    window: int
    series: list[tuple[int, complex]] = field(default_factory=list)

    @property
    def lights_up(self) -> bool:
        """Magnitude at least 0.05 and nondecreasing over the last three windows.

        A drop smaller than ``N**-0.5`` at the earlier window counts as flat:
        a converged nonzero probe still fluctuates at finite-size scale.
        """
        if self.magnitude < LIGHT_THRESHOLD:
            return False
        tail = self.series[-3:]
        return all(abs(b) >= abs(a) - Na**-0.5 for (Na, a), (_, b) in zip(tail, tail[1:]))

    def to_dict(self) -> dict:
        a = self.alpha
        num, den = (a.numerator, a.denominator) if isinstance(a, Fraction) else (float(a), 1)
        return {"alpha_num": num, "alpha_den": den, "magnitude": self.magnitude,
                "best_query": str(self.best_query), "window": self.window}


def default_queries(max_shift: int = 3, mode=Mode.CESARO) -> list[CorrelationQuery]:
    """All queries with one or two terms, shifts in ``[-3, 3]`` and exponents ``+-1``."""
    shifts = range(-max_shift, max_shift + 1)
    out = [CorrelationQuery((h,), (k,), mode) for h in shifts for k in (1, -1)]
    for h1, h2 in itertools.combinations(shifts, 2):
        for k1, k2 in itertools.product((1, -1), repeat=2):
            out.append(CorrelationQuery((h1, h2), (k1, k2), mode))
    return out


def two_point_queries(max_shift: int = 3, mode=Mode.CESARO) -> list[CorrelationQuery]:
    """Two-term queries anchored at shift 0."""
    return [CorrelationQuery((0, h), (k1, k2), mode)
            for h in range(1, max_shift + 1) for k1, k2 in itertools.product((1, -1), repeat=2)]


def _windows(schedule) -> list[int]:
    if isinstance(schedule, WindowSchedule):
        return list(schedule.windows)
    if isinstance(schedule, int):
        return [schedule]
    return list(schedule)


def _shared_source(spec, queries: Sequence[CorrelationQuery], top: int):
    return as_source(spec, top + max(0, max(q.max_shift for q in queries)))


def spectral_probe(spec, alpha, queries: Sequence[CorrelationQuery], schedule, mode=None) -> ProbeResult:
    """Largest ``|E e(-n alpha) prod f^{k_j}(n + n_j)|`` over the queries at the last window."""
    if not queries:
        raise ValueError("need at least one query")
    windows = _windows(schedule)
    src = _shared_source(spec, queries, windows[-1])
    best = None
    for q in queries:
        ser = twisted_series(src, alpha, q, windows, mode)
        mag = abs(ser[-1][1])
        if best is None or mag > best.magnitude:
            best = ProbeResult(alpha, mag, q, windows[-1], ser)
    return best


def ap_discrepancy(spec, q: int, r: int, N: int, mode=Mode.CESARO) -> float:
    """``|E f(qn + r) - E f(n)|``; log mode averages both over ``[N]``."""
    if q < 2 or not 0 <= r < q:
        raise ValueError("need q >= 2 and 0 <= r < q")
    mode = as_mode(mode)
    N = int(N)
    M = N if mode is Mode.LOGARITHMIC else N // q
    if M < 1:
        raise ValueError("window too short for this modulus")
    src = as_source(spec, q * M + r)
    vals = src.window(0, q * M + r)
    sub = np.zeros(M + 1, dtype=np.complex128)
    sub[1:] = vals[q * np.arange(1, M + 1) + r]
    progression = window_average(ArraySource(sub), mode, M)
    whole = window_average(src, mode, N)
    return abs(progression - whole)


def reduced_fractions(Q_max: int) -> list[Fraction]:
    """``a/b`` in ``[0, 1)`` with ``b <= Q_max``, in lowest terms."""
    return sorted({Fraction(a, b) for b in range(1, Q_max + 1) for a in range(b)})


def rational_scan(spec, Q_max: int, queries: Sequence[CorrelationQuery], schedule, mode=None) -> list[ProbeResult]:
    if Q_max < 2:
        raise ValueError("Q_max must be at least 2")
    windows = _windows(schedule)
    src = _shared_source(spec, queries, windows[-1])
    res = [spectral_probe(src, a, queries, windows, mode) for a in reduced_fractions(Q_max)]
    return sorted(res, key=lambda p: (-p.magnitude, p.alpha))


def stationarity_defect(spec, query: CorrelationQuery, r: int, N: int, mode=None) -> float:
    """``|corr(n_j) - corr(r n_j)|`` at window ``N``."""
    if r < 1:
        raise ValueError("r must be at least 1")
    if r == 1:
        return 0.0
    dil = query.dilated(r)
    src = as_source(spec, int(N) + max(0, dil.max_shift, query.max_shift))
    return abs(correlation(src, query, N, mode) - correlation(src, dil, N, mode))


def divisibility_probe(spec, alpha, r: int, queries: Sequence[CorrelationQuery], schedule,
                       mode=None) -> list[ProbeResult]:
    """Probes at ``(alpha + k) / r`` for ``k = 0..r-1``, strongest first."""
    if r < 1:
        raise ValueError("r must be at least 1")
    if abs(value_at(spec, r)) == 0:
        raise ValueError(f"f({r}) = 0; the divisibility scan needs f(r) != 0")
    windows = _windows(schedule)
    src = _shared_source(spec, queries, windows[-1])
    if isinstance(alpha, (int, Fraction)):
        points = [(Fraction(alpha) + k) / r for k in range(r)]
    else:
        points = [(float(alpha) + k) / r for k in range(r)]
    res = [spectral_probe(src, a, queries, windows, mode) for a in points]
    return sorted(res, key=lambda p: -p.magnitude)


def ceslog_agreement(spec, queries: Iterable[CorrelationQuery], N: int) -> float:
    """``max |Cesàro - logarithmic|`` correlation gap over the queries at window ``N``."""
    queries = list(queries)
    src = _shared_source(spec, queries, int(N))
    return max(abs(correlation(src, q, N, Mode.CESARO) - correlation(src, q, N, Mode.LOGARITHMIC))
               for q in queries)


@dataclass
class HalaszDrift:
    t: float
    windows: list[int]
    residuals: list[complex]

    @property
    def moduli(self) -> list[float]:
        return [abs(z) for z in self.residuals]

    @property
    def phase_increments(self) -> list[float]:
        """Wrapped differences of consecutive residual arguments, in radians."""
        ph = [cmath.phase(z) for z in self.residuals]
        return [math.remainder(b - a, 2 * math.pi) for a, b in zip(ph, ph[1:])]


def halasz_drift(spec, t: float, schedule) -> HalaszDrift:
    """Cesàro mean over ``[N]`` divided by ``N**(it)`` along the schedule."""
    windows = _windows(schedule)
    src = as_source(spec, windows[-1])
    ser = correlation_series(src, CorrelationQuery((0,), (1,)), windows, Mode.CESARO)
    res = [v * cmath.exp(-1j * float(t) * math.log(N)) for N, v in ser]
    return HalaszDrift(float(t), windows, res)
