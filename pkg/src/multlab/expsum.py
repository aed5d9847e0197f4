"""Oscillatory sums ``E e(N g(n))`` with precision-safe phases, and decay experiments.

Radian convention throughout: ``e(t) = exp(i t)``.  Two phase families are
supported:

* :class:`LogPolyPhase`: ``g(x) = c0 log x + sum_i c_i x**-i``;
* :class:`ShiftLogPhase`: ``g(x) = sum_j k_j log(x + n_j)``, the exact phase
  of a correlation of ``n -> n**(iN)``.

Phases with ``|N g(n)| > 2**30`` are formed in double-double arithmetic and
reduced modulo 2*pi before exponentiation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import ddouble as dd
from . import summation as sm
from .averaging import Mode, as_mode
from .mfunc import CapacityError

PHASE_CAP = 1e15
DD_THRESHOLD = 2.0**30


class PhaseCapError(CapacityError):
    """``|N g(n)|`` exceeds the supported reduction range."""


@dataclass(frozen=True)
class LogPolyPhase:
    """``g(x) = c0 log x + sum_{i>=1} c[i-1] x**-i``."""

    c0: float = 0.0
    c: tuple[float, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "c", tuple(float(x) for x in self.c))

    @property
    def i0(self) -> int | None:
        if self.c0 != 0:
            return 0
        for i, ci in enumerate(self.c, start=1):
            if ci != 0:
                return i
        return None

    def approx(self, n: np.ndarray) -> np.ndarray:
        x = np.asarray(n, dtype=np.float64)
        out = self.c0 * np.log(x) if self.c0 else np.zeros_like(x)
        inv = 1.0 / x
        p = np.ones_like(x)
        for ci in self.c:
            p = p * inv
            if ci:
                out = out + ci * p
        return out

    def scaled_dd(self, N: float, n: np.ndarray):
        x = np.asarray(n, dtype=np.float64)
        acc = (np.zeros_like(x), np.zeros_like(x))
        if self.c0:
            acc = dd.dd_mul_d(dd.dd_log_int(x), self.c0)
        if any(self.c):
            r = dd.dd_recip_int(x)
            p = (np.ones_like(x), np.zeros_like(x))
            for ci in self.c:
                p = dd.dd_mul(p, r)
                if ci:
                    acc = dd.dd_add(acc, dd.dd_mul_d(p, ci))
        return dd.dd_mul_d(acc, float(N))

    def to_dict(self) -> dict:
        return {"type": "logpoly", "c0": self.c0, "c": list(self.c)}


@dataclass(frozen=True)
class ShiftLogPhase:
    """``g(x) = sum_j k_j log(x + n_j)``; terms with ``x + n_j <= 0`` zero the summand."""

    exponents: tuple[int, ...]
    shifts: tuple[int, ...]

    def __post_init__(self):
        merged: dict[int, int] = {}
        for k, h in zip(self.exponents, self.shifts):
            merged[int(h)] = merged.get(int(h), 0) + int(k)
        items = sorted((h, k) for h, k in merged.items() if k)
        object.__setattr__(self, "shifts", tuple(h for h, _ in items))
        object.__setattr__(self, "exponents", tuple(k for _, k in items))

    @property
    def min_shift(self) -> int:
        return min(self.shifts) if self.shifts else 0

    def approx(self, n: np.ndarray) -> np.ndarray:
        x = np.asarray(n, dtype=np.float64)
        out = np.zeros_like(x)
        for k, h in zip(self.exponents, self.shifts):
            out = out + k * np.log(np.maximum(x + h, 1.0))
        return out

    def scaled_dd(self, N: float, n: np.ndarray):
        x = np.asarray(n, dtype=np.int64)
        acc = (np.zeros(x.shape), np.zeros(x.shape))
        for k, h in zip(self.exponents, self.shifts):
            acc = dd.dd_add(acc, dd.dd_mul_d(dd.dd_log_int(np.maximum(x + h, 1)), float(k)))
        return dd.dd_mul_d(acc, float(N))

    def valid(self, n: np.ndarray) -> np.ndarray:
        return np.asarray(n) + self.min_shift >= 1

    def to_dict(self) -> dict:
        return {"type": "shiftlog", "exponents": list(self.exponents), "shifts": list(self.shifts)}


Phase = LogPolyPhase | ShiftLogPhase


def _shift_cancelling_dd(g: ShiftLogPhase) -> bool:
    return sum(g.exponents) == 0


def reduced_phase(N: float, g: Phase, n: np.ndarray) -> np.ndarray:
    """``N g(n)`` reduced to ``[-pi, pi]``; exact negation under ``N -> -N``."""
    n = np.asarray(n, dtype=np.int64)
    if N == 0:
        return np.zeros(n.shape)
    rough = float(N) * g.approx(n)
    if np.any(np.abs(rough) > PHASE_CAP):
        raise PhaseCapError(f"|N g(n)| up to {np.abs(rough).max():.3g} exceeds {PHASE_CAP:.0e}")
    big = np.abs(rough) > DD_THRESHOLD
    if isinstance(g, ShiftLogPhase) and _shift_cancelling_dd(g):
        # cancellation between the log terms: always go through double-double
        big[:] = True
    out = np.empty(n.shape)
    small = ~big
    if np.any(small):
        out[small] = np.remainder(rough[small] + np.pi, 2 * np.pi) - np.pi
        # keep sign symmetry: remainder is not odd, so fold via the magnitude
        neg = small & (rough < 0)
        out[neg] = -(np.remainder(-rough[neg] + np.pi, 2 * np.pi) - np.pi)
    if np.any(big):
        out[big] = dd.reduce_2pi(g.scaled_dd(float(N), n[big]))
    return out


def phase_eval(N: float, g: Phase, n: int | np.ndarray):
    """``N g(n)`` reduced into ``[0, 2 pi)`` with absolute error below 1e-5 rad."""
    r = reduced_phase(N, g, np.atleast_1d(np.asarray(n, dtype=np.int64)))
    r = np.where(r < 0, r + 2 * np.pi, r)
    r = np.where(r >= 2 * np.pi, 0.0, r)
    return float(r[0]) if np.ndim(n) == 0 else r


def _exp_term(N: float, g: Phase, mode: Mode):
    def term(a, b):
        n = np.arange(a, b + 1, dtype=np.int64)
        v = np.exp(1j * reduced_phase(N, g, n))
        if isinstance(g, ShiftLogPhase):
            v[~g.valid(n)] = 0
        if mode is Mode.LOGARITHMIC:
            v = v / n.astype(np.float64)
        return v

    return term


def exp_sum(N: float, g: Phase, lo: int, hi: int, mode=Mode.CESARO) -> complex:
    """Mode-weighted mean of ``exp(i N g(n))`` over integers ``n`` in ``[lo, hi]``."""
    mode = as_mode(mode)
    lo, hi = int(math.ceil(lo)), int(math.floor(hi))
    if hi < lo or lo < 1:
        raise ValueError(f"bad summation range [{lo}, {hi}]")
    if N == 0 and not isinstance(g, ShiftLogPhase):
        return 1 + 0j
    term = _exp_term(N, g, mode)
    # align to the global block grid: sum over [1, hi] minus nothing below lo
    base = ((lo - 1) // sm.BLOCK) * sm.BLOCK + 1

    def masked(a, b):
        v = np.zeros(b - a + 1, dtype=np.complex128)
        s = max(a, lo)
        if s <= b:
            v[s - a :] = term(s, b)
        return v

    num = complex(sm.tree_sum(sm.blocked_range_sums(masked, hi, lo=base)))
    if mode is Mode.CESARO:
        den = float(hi - lo + 1)
    else:
        def inv(a, b):
            n = np.arange(a, b + 1, dtype=np.float64)
            return np.where(n >= lo, 1.0 / n, 0.0)
        den = float(sm.tree_sum(sm.blocked_range_sums(inv, hi, lo=base)))
    return num / den


def vdc_Q(q: int) -> int:
    return 4 * 2 ** (q - 2) - 2


def vdc_bound(q: int, c: float, L: float, M: float, C3: float) -> float:
    """``C3 ((M / L**q)**(1/Q) + 1/M)`` with ``Q = 4 * 2**(q-2) - 2``.

    ``c`` only enters through the constant ``C3``; it is accepted for symmetry
    with the decay experiment.
    """
    if q < 2:
        raise ValueError("q must be at least 2")
    if not 0 < c < 1:
        raise ValueError("c must lie in (0, 1)")
    return C3 * ((M / L**q) ** (1.0 / vdc_Q(q)) + 1.0 / M)


def vdc_shape(N: float, L: float, i0: int, q: int) -> float:
    """Bound shape ``(N / L**(q+i0))**(1/Q) + L**i0 / N`` for the log-polynomial phases."""
    return (N / L ** (q + i0)) ** (1.0 / vdc_Q(q)) + L**i0 / N


@dataclass
class DecayRow:
    N: float
    L: int
    window_lo: int
    window_hi: int
    abs_empirical: float
    bound: float
    ratio: float
    in_growth_window: bool

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class DecayReport:
    """Decay rows paired with the fitted bound shape."""

    rows: list[DecayRow]
    C3: float
    q: int
    mode: str
    max_ratio: float
    params: dict = field(default_factory=dict)


DELTA_GRID = (0.1, 0.2, 0.3)


def _growth_ok(N: float, L: float, i0: int | None) -> bool:
    if i0 is None:
        return False
    if i0 == 0:
        return L > 1
    return L < N ** (1.0 / i0)


def decay_experiment(g: LogPolyPhase, schedule: Sequence[tuple[float, int]], c: float = 0.5,
                     mode=Mode.CESARO, q: int = 2, deltas: Sequence[float] = DELTA_GRID,
                     grid: int = 8) -> DecayReport:
    """Empirical decay of ``E e(N g(n))`` against the van der Corput bound shape.

    Cesàro mode averages over ``[cL, L]``.  Logarithmic mode takes, for every
    delta, the sup over a geometric grid of ``n in [L**delta, L**(1-delta)]``
    of ``|E_{k in [cn, n]}|`` and reports the largest.  ``C3`` is fitted at the
    first schedule entry; rows outside the growth window are flagged.
    """
    mode = as_mode(mode)
    i0 = g.i0
    if i0 is None:
        raise ValueError("phase has no nonzero coefficient")
    rows: list[DecayRow] = []
    C3 = None
    for N, L in schedule:
        L = int(L)
        if mode is Mode.CESARO:
            lo, hi = max(1, int(math.ceil(c * L))), L
            emp = abs(exp_sum(N, g, lo, hi, mode))
            shape = vdc_shape(N, L, i0, q)
        else:
            emp, lo, hi = 0.0, 1, 1
            for delta in deltas:
                a, b = L**delta, L ** (1 - delta)
                for n in np.unique(np.geomspace(a, b, grid).astype(np.int64)):
                    lo_n = max(1, int(math.ceil(c * n)))
                    val = abs(exp_sum(N, g, lo_n, int(n), Mode.CESARO))
                    if val > emp:
                        emp, lo, hi = val, lo_n, int(n)
            shape = vdc_shape(N, hi, i0, q)
        if C3 is None:
            C3 = emp / shape if shape > 0 else 0.0
        bound = C3 * shape
        rows.append(DecayRow(float(N), L, lo, hi, emp, bound, emp / bound if bound else math.inf,
                             _growth_ok(N, L, i0)))
    return DecayReport(rows, float(C3), q, mode.value, max(r.ratio for r in rows),
                            {"phase": g.to_dict(), "c": c})
