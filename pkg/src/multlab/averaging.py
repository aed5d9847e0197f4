"""Cesàro and logarithmic window averages and multi-point correlations.

``[N]`` always means ``n = 1 .. floor(N)``.  Shifted indices ``n + n_j`` may
leave the window; they are read from the value source (which must have
headroom) and ``n + n_j <= 0`` evaluates to 0.  Twists use ``e(t) = exp(2*pi*i*t)``.

All sums go through :mod:`multlab.summation`, so results do not depend on the
thread count and every entry of a window series equals the standalone value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Callable, Iterable, Sequence, Union

import numpy as np

from . import summation as sm
from .mfunc import (
    DEFAULT_SPF_CAP,
    MultiplicativeSpec,
    ValueTable,
    evaluate_range,
    evaluate_segment,
    primes_up_to,
)

# in-memory table limit for specs without a closed form; larger ranges are sieved per segment
TABLE_LIMIT = 40_000_000


class Mode(str, Enum):
    CESARO = "cesaro"
    LOGARITHMIC = "logarithmic"


def as_mode(mode) -> Mode:
    return mode if isinstance(mode, Mode) else Mode(str(mode))


@dataclass(frozen=True)
class CorrelationQuery:
    """Shifts ``n_j`` and exponents ``k_j``; ``f**k`` means ``conj(f)**|k|`` for ``k < 0``."""

    shifts: tuple[int, ...]
    exponents: tuple[int, ...]
    mode: Mode = Mode.CESARO

    def __post_init__(self):
        object.__setattr__(self, "shifts", tuple(int(x) for x in self.shifts))
        object.__setattr__(self, "exponents", tuple(int(x) for x in self.exponents))
        object.__setattr__(self, "mode", as_mode(self.mode))
        if not self.shifts:
            raise ValueError("query needs at least one term")
        if len(self.shifts) != len(self.exponents):
            raise ValueError("shifts and exponents differ in length")

    @property
    def max_shift(self) -> int:
        return max(self.shifts)

    @property
    def min_shift(self) -> int:
        return min(self.shifts)

    def with_mode(self, mode) -> "CorrelationQuery":
        return CorrelationQuery(self.shifts, self.exponents, as_mode(mode))

    def dilated(self, r: int) -> "CorrelationQuery":
        return CorrelationQuery(tuple(r * s for s in self.shifts), self.exponents, self.mode)

    def conjugate(self) -> "CorrelationQuery":
        return CorrelationQuery(self.shifts, tuple(-k for k in self.exponents), self.mode)

    def to_dict(self) -> dict:
        return {"shifts": list(self.shifts), "exponents": list(self.exponents), "mode": self.mode.value}

    def __str__(self) -> str:
        return f"k={list(self.exponents)} n={list(self.shifts)}"


@dataclass(frozen=True)
class WindowSchedule:
    """Strictly increasing window lengths."""

    windows: tuple[int, ...]
    generator: str = "explicit"
    params: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        w = tuple(int(x) for x in self.windows)
        object.__setattr__(self, "windows", w)
        if not w:
            raise ValueError("schedule is empty")
        if w[0] < 1:
            raise ValueError("windows must be positive")
        if any(b <= a for a, b in zip(w, w[1:])):
            raise ValueError("windows must be strictly increasing")

    @classmethod
    def explicit(cls, windows: Iterable[int]) -> "WindowSchedule":
        return cls(tuple(windows))

    @classmethod
    def geometric(cls, start: int, base: float, count: int) -> "WindowSchedule":
        w = [int(math.floor(start * base**i)) for i in range(count)]
        return cls(tuple(w), "geometric", {"start": start, "base": base, "count": count})

    @classmethod
    def power_of_scale(cls, a: float, scales: Sequence[float], d: float) -> "WindowSchedule":
        """Windows ``floor(a * S**(1/d))`` for each scale ``S``."""
        w = [int(math.floor(a * float(S) ** (1.0 / d))) for S in scales]
        return cls(tuple(w), "power-of-scale", {"a": a, "scales": list(scales), "d": d})

    @property
    def last(self) -> int:
        return self.windows[-1]

    def __iter__(self):
        return iter(self.windows)

    def __len__(self):
        return len(self.windows)


# --------------------------------------------------------------------------- value sources


class ValueSource:
    """Chunked access to ``f(n)``; ``window(lo, hi)`` covers ``n`` in ``[lo, hi]``."""

    label = ""

    def window(self, lo: int, hi: int) -> np.ndarray:  # pragma: no cover - interface
        raise NotImplementedError


class TableSource(ValueSource):
    def __init__(self, table: ValueTable):
        self.table = table
        self.label = table.label

    def window(self, lo, hi):
        return self.table.window(lo, hi)


class FunctionSource(ValueSource):
    """Wraps a vectorised ``n -> value`` callable (zero-extended below 1)."""

    def __init__(self, fn: Callable[[np.ndarray], np.ndarray], label: str = ""):
        self.fn = fn
        self.label = label

    def window(self, lo, hi):
        out = np.zeros(hi - lo + 1, dtype=np.complex128)
        a = max(lo, 1)
        if a <= hi:
            out[a - lo :] = self.fn(np.arange(a, hi + 1, dtype=np.int64))
        return out


class SegmentedSource(ValueSource):
    """Sieves each requested window on the fly; memory independent of ``N``."""

    def __init__(self, spec: MultiplicativeSpec, limit: int):
        self.spec = spec
        self.label = spec.label
        self.small = primes_up_to(math.isqrt(limit) + 1)

    def window(self, lo, hi):
        return evaluate_segment(self.spec, lo, hi, self.small)


Values = Union[ValueSource, ValueTable, MultiplicativeSpec, Callable, np.ndarray]


class ArraySource(ValueSource):
    """``arr[n]`` indexing, as for a ValueTable's raw array."""

    def __init__(self, arr):
        self.arr = np.asarray(arr, dtype=np.complex128)

    def window(self, lo, hi):
        if hi >= self.arr.shape[0]:
            raise IndexError(f"array source too short for index {hi}")
        out = np.zeros(hi - lo + 1, dtype=np.complex128)
        a = max(lo, 1)
        if a <= hi:
            out[a - lo :] = self.arr[a : hi + 1]
        return out


def as_source(obj: Values, needed: int) -> ValueSource:
    """Turn a spec/table/callable into a value source covering ``[.., needed]``."""
    if isinstance(obj, ValueSource):
        return obj
    if isinstance(obj, ValueTable):
        return TableSource(obj)
    if isinstance(obj, MultiplicativeSpec):
        if obj.closed_form is not None:
            return FunctionSource(obj.closed_form, obj.label)
        if needed <= TABLE_LIMIT:
            return TableSource(evaluate_range(obj, max(needed, 2)))
        return SegmentedSource(obj, needed)
    if isinstance(obj, np.ndarray):
        return ArraySource(obj)
    if callable(obj):
        return FunctionSource(obj)
    raise TypeError(f"cannot use {type(obj).__name__} as a value source")


# --------------------------------------------------------------------------- averages


def _weights(mode: Mode, a: int, b: int) -> np.ndarray | None:
    if mode is Mode.CESARO:
        return None
    return 1.0 / np.arange(a, b + 1, dtype=np.float64)


def _denominator(mode: Mode, N: int) -> float:
    if mode is Mode.CESARO:
        return float(N)
    return float(sm.tree_sum(sm.blocked_range_sums(lambda a, b: 1.0 / np.arange(a, b + 1, dtype=np.float64), N)))


def harmonic(N: int) -> float:
    """``H_N`` with the package's deterministic summation."""
    return _denominator(Mode.LOGARITHMIC, int(N))


def _weighted_term(term: Callable[[int, int], np.ndarray], mode: Mode):
    def inner(a, b):
        v = term(a, b)
        w = _weights(mode, a, b)
        return v if w is None else v * w

    return inner


def window_average(values: Values, mode, N: int) -> complex:
    """Weighted mean of ``a(n)`` over ``n in [N]``."""
    N = int(math.floor(N))
    if N < 1:
        raise ValueError("window must be at least 1")
    mode = as_mode(mode)
    src = as_source(values, N)
    num = sm.tree_sum(sm.blocked_range_sums(_weighted_term(src.window, mode), N))
    return complex(num) / _denominator(mode, N)


def log_average_partial_summation(values: Values, N: int) -> complex:
    """Logarithmic mean via Abel summation of the Cesàro prefix sums.

    ``sum a(n)/n = S(N)/N + sum_{n<N} S(n)/(n(n+1))`` with ``S`` the running
    sum; an independent route to :func:`window_average` in log mode.
    """
    N = int(N)
    src = as_source(values, N)
    a = src.window(1, N)
    S = np.cumsum(a)
    n = np.arange(1, N, dtype=np.float64)
    total = S[-1] / N + np.sum(S[:-1] / (n * (n + 1.0)))
    H = math.fsum(1.0 / k for k in range(1, N + 1))
    return complex(total) / H


def _power(v: np.ndarray, k: int) -> np.ndarray:
    if k == 0:
        return np.ones_like(v)
    base = v if k > 0 else np.conj(v)
    out = base
    for _ in range(abs(k) - 1):
        out = out * base
    return out


def _product_term(src: ValueSource, query: CorrelationQuery):
    lo_s, hi_s = query.min_shift, query.max_shift

    def term(a, b):
        buf = src.window(a + lo_s, b + hi_s)
        m = b - a + 1
        out = None
        for h, k in zip(query.shifts, query.exponents):
            piece = _power(buf[h - lo_s : h - lo_s + m], k)
            out = piece if out is None else out * piece
        return out

    return term


def twist_factor(alpha, a: int, b: int) -> np.ndarray:
    """``e(-n alpha)`` for ``n`` in ``[a, b]``; exact residue arithmetic for Fractions."""
    n = np.arange(a, b + 1, dtype=np.int64)
    if isinstance(alpha, Fraction):
        frac = (n * alpha.numerator % alpha.denominator) / alpha.denominator
    else:
        frac = np.mod(n * float(alpha), 1.0)
    return np.exp(-2j * np.pi * frac)


def _needed(query: CorrelationQuery, N: int) -> int:
    return int(N) + max(query.max_shift, 0)


def correlation(values: Values, query: CorrelationQuery, N: int, mode=None) -> complex:
    """``E_{n in [N]} prod_j f^{k_j}(n + n_j)`` in the query's mode (or ``mode``)."""
    mode = as_mode(mode or query.mode)
    N = int(N)
    src = as_source(values, _needed(query, N))
    term = _weighted_term(_product_term(src, query), mode)
    return complex(sm.tree_sum(sm.blocked_range_sums(term, N))) / _denominator(mode, N)


def twisted_correlation(values: Values, alpha, query: CorrelationQuery, N: int, mode=None) -> complex:
    """``E_{n in [N]} e(-n alpha) prod_j f^{k_j}(n + n_j)``."""
    mode = as_mode(mode or query.mode)
    N = int(N)
    src = as_source(values, _needed(query, N))
    prod = _product_term(src, query)
    if alpha == 0:
        term = prod
    else:
        def term(a, b):
            return prod(a, b) * twist_factor(alpha, a, b)
    term = _weighted_term(term, mode)
    return complex(sm.tree_sum(sm.blocked_range_sums(term, N))) / _denominator(mode, N)


def _series_from_term(term, mode: Mode, windows: Sequence[int]) -> list[tuple[int, complex]]:
    """Values of the weighted mean at every window, sharing the full-block sums."""
    top = windows[-1]
    full_top = (top // sm.BLOCK) * sm.BLOCK
    full = sm.blocked_range_sums(term, full_top) if full_top else np.zeros(0, dtype=np.complex128)
    wterm = (lambda a, b: 1.0 / np.arange(a, b + 1, dtype=np.float64))
    hfull = sm.blocked_range_sums(wterm, full_top) if (mode is Mode.LOGARITHMIC and full_top) else None
    out = []
    for N in windows:
        nb, rem = divmod(N, sm.BLOCK)
        parts = full[:nb]
        if rem:
            a = nb * sm.BLOCK + 1
            parts = np.concatenate([parts, sm.block_sums(term(a, N))])
        num = complex(sm.tree_sum(parts))
        if mode is Mode.CESARO:
            den = float(N)
        else:
            hp = hfull[:nb] if hfull is not None else np.zeros(0)
            if rem:
                hp = np.concatenate([hp, sm.block_sums(wterm(nb * sm.BLOCK + 1, N))])
            den = float(sm.tree_sum(hp))
        out.append((N, num / den))
    return out


def correlation_series(values: Values, query: CorrelationQuery, schedule, mode=None) -> list[tuple[int, complex]]:
    """Correlation at every window of ``schedule`` in one pass over ``[1, max N]``."""
    mode = as_mode(mode or query.mode)
    windows = list(schedule.windows if isinstance(schedule, WindowSchedule) else schedule)
    src = as_source(values, _needed(query, windows[-1]))
    term = _weighted_term(_product_term(src, query), mode)
    return _series_from_term(term, mode, windows)


def twisted_series(values: Values, alpha, query: CorrelationQuery, schedule, mode=None) -> list[tuple[int, complex]]:
    mode = as_mode(mode or query.mode)
    windows = list(schedule.windows if isinstance(schedule, WindowSchedule) else schedule)
    src = as_source(values, _needed(query, windows[-1]))
    prod = _product_term(src, query)
    if alpha == 0:
        term = prod
    else:
        def term(a, b):
            return prod(a, b) * twist_factor(alpha, a, b)
    return _series_from_term(_weighted_term(term, mode), mode, windows)


def series_csv_rows(series: list[tuple[int, complex]]) -> list[dict]:
    return [{"N": N, "re": v.real, "im": v.imag, "abs": abs(v)} for N, v in series]
