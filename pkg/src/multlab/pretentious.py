"""Pretentious distance, polar prime data, the phase sum ``A(N)``, the
concentration defect and the ``f = f1 * f2`` splitting.

Angles here are in revolutions: ``f(p) = r_p e(theta_p)`` with
``e(t) = exp(2 pi i t)`` and ``theta_p`` in ``[-1/2, 1/2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .averaging import Mode, as_mode, as_source, window_average
from .mfunc import Kind, MultiplicativeSpec, primes_up_to, value_at

UNIT_CHECK_TOL = 1e-9
SLOW_GRID = 64


def _fsum(x: np.ndarray) -> float:
    return math.fsum(np.asarray(x, dtype=np.float64).tolist())


def revolutions(z: np.ndarray) -> np.ndarray:
    """Argument of ``z`` in revolutions, in ``[-1/2, 1/2)``; 0 where ``z = 0``."""
    z = np.asarray(z, dtype=np.complex128)
    th = np.angle(z) / (2 * np.pi)
    th = np.where(th >= 0.5, th - 1.0, th)
    return np.where(z == 0, 0.0, th)


def distance_sq_partial(f: MultiplicativeSpec, g: MultiplicativeSpec, P: int) -> float:
    """``sum_{p <= P} (1 - Re f(p) conj(g(p))) / p``."""
    if P < 2:
        raise ValueError("P must be at least 2")
    p = primes_up_to(int(P))
    terms = (1.0 - np.real(f.prime_values(p) * np.conj(g.prime_values(p)))) / p
    return _fsum(terms)


def distance_sq_series(f: MultiplicativeSpec, g: MultiplicativeSpec, Ps: Sequence[int]) -> list[tuple[int, float]]:
    """Partial distances at several cutoffs from one pass over the primes."""
    Ps = sorted(int(P) for P in Ps)
    p = primes_up_to(Ps[-1])
    terms = (1.0 - np.real(f.prime_values(p) * np.conj(g.prime_values(p)))) / p
    out, start, acc = [], 0, 0.0
    for P in Ps:
        stop = int(np.searchsorted(p, P, side="right"))
        acc = math.fsum([acc] + terms[start:stop].tolist())
        out.append((P, acc))
        start = stop
    return out


@dataclass(frozen=True, eq=False)
class PolarPrimeData:
    primes: np.ndarray
    r: np.ndarray
    theta: np.ndarray
    sum_one_minus_r: float
    sum_theta_sq: float

    def records(self):
        return zip(self.primes.tolist(), self.r.tolist(), self.theta.tolist())


def polar_data(f: MultiplicativeSpec, P: int) -> PolarPrimeData:
    p = primes_up_to(int(P))
    v = f.prime_values(p)
    r = np.minimum(np.abs(v), 1.0)
    th = revolutions(v)
    return PolarPrimeData(p, r, th, _fsum((1 - r) / p), _fsum(th * th / p))


def A_of_N(f: MultiplicativeSpec, P_eps: int, N: int) -> float:
    """``A(N) = sum_{P_eps <= p <= N} theta_p / p`` in revolutions."""
    if not N >= P_eps >= 1:
        raise ValueError("need N >= P_eps >= 1")
    p = primes_up_to(int(N))
    p = p[p >= P_eps]
    return _fsum(revolutions(f.prime_values(p)) / p)


def slowly_varying_defect(f: MultiplicativeSpec, N: int, c: float = 0.5, P_eps: int = 1,
                          grid: int = SLOW_GRID) -> float:
    """``max |A(n) - A(N)|`` over a geometric grid of ``n`` in ``[N**c, N]``."""
    p = primes_up_to(int(N))
    p = p[p >= P_eps]
    cum = np.cumsum(revolutions(f.prime_values(p)) / p)
    full = A_of_N(f, P_eps, N)
    pts = np.unique(np.floor(np.geomspace(N**c, N, grid)).astype(np.int64))
    idx = np.searchsorted(p, pts, side="right")
    vals = np.where(idx > 0, cum[np.maximum(idx - 1, 0)], 0.0)
    return float(np.max(np.abs(vals - full)))


# --------------------------------------------------------------------------- concentration


def _unit_check(vals: np.ndarray, label: str) -> None:
    bad = np.abs(np.abs(vals) - 1.0) > UNIT_CHECK_TOL
    if np.any(bad):
        n = int(np.argmax(bad)) + 1
        raise ValueError(f"{label}: not unit-modulus (|f({n})| = {abs(vals[n - 1]):.6g})")


def concentration_defect(f: MultiplicativeSpec, N: int, phase: float, mode=Mode.CESARO) -> float:
    """Window mean of ``|f(n) - e(phase)|**2`` over ``[N]`` (phase in revolutions)."""
    N = int(N)
    src = as_source(f, N)
    vals = src.window(1, N)
    _unit_check(vals, f.label)
    target = np.exp(2j * np.pi * float(phase))
    sq = np.abs(vals - target) ** 2
    return float(window_average(np.concatenate([[0], sq]), as_mode(mode), N).real)


def concentration_defect_direct(f: MultiplicativeSpec, N: int, phase: float, mode=Mode.CESARO) -> float:
    """Same quantity by trial factorisation at every ``n`` and an exact-rounded sum."""
    mode = as_mode(mode)
    target = complex(math.cos(2 * math.pi * phase), math.sin(2 * math.pi * phase))
    num, den = [], []
    for n in range(1, int(N) + 1):
        w = 1.0 if mode is Mode.CESARO else 1.0 / n
        num.append(w * abs(value_at(f, n) - target) ** 2)
        den.append(w)
    return math.fsum(num) / math.fsum(den)


def concentration_shape(f: MultiplicativeSpec, N: int) -> float:
    """``sum_{p <= N} theta_p**2 / p + log log N / log N``."""
    pd = polar_data(f, N)
    L = math.log(N)
    return pd.sum_theta_sq + math.log(L) / L


@dataclass
class ConcentrationRow:
    N: int
    defect: float
    shape: float
    bound: float

    @property
    def ok(self) -> bool:
        return self.defect <= self.bound


def concentration_bound_check(f: MultiplicativeSpec, Ns: Sequence[int], calibrate_at: int = 1000,
                              mode=Mode.CESARO, P_eps: int = 1) -> tuple[float, list[ConcentrationRow]]:
    """Fit ``C`` at ``calibrate_at`` and compare ``defect(N)`` with ``C * shape(N)``."""
    def defect(N):
        return concentration_defect(f, N, A_of_N(f, P_eps, N), mode)

    C = defect(calibrate_at) / concentration_shape(f, calibrate_at)
    rows = []
    for N in Ns:
        sh = concentration_shape(f, N)
        rows.append(ConcentrationRow(int(N), defect(N), sh, C * sh))
    return C, rows


# --------------------------------------------------------------------------- decomposition


@dataclass(frozen=True, eq=False)
class DecompositionResult:
    f1: MultiplicativeSpec
    f2: MultiplicativeSpec
    P_eps: int
    tail_bound: float
    eps: float = 0.0

    def manifest(self) -> dict:
        return {"eps": self.eps, "P_eps": self.P_eps, "tail_bound": self.tail_bound}


def decompose(f: MultiplicativeSpec, eps: float, P_max: int) -> DecompositionResult:
    """Split ``f = f1 * f2`` with ``f2(p**s) = e(theta_p)`` beyond the threshold.

    The threshold is the smallest prime ``P`` with
    ``sum_{P < p <= P_max} theta_p**2 / p <= eps``.  A threshold that only
    works because the remaining range is empty is reported as unreachable.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    p = primes_up_to(int(P_max))
    if p.size == 0:
        raise ValueError("P_max must be at least 2")
    th = revolutions(f.prime_values(p))
    w = th * th / p
    # tails[i] = sum over primes after p[i]
    tails = np.concatenate([np.cumsum(w[::-1])[::-1][1:], [0.0]])
    i = int(np.argmax(tails <= eps))
    if i == p.size - 1 and p.size > 1 and tails[i - 1] > eps:
        raise ValueError(f"eps={eps:g} unreachable below P_max={P_max}; "
                         f"tail after {int(p[-2])} is {tails[-2]:.3g}")
    P_eps = int(p[i])
    tail = _fsum(w[i + 1:])

    def theta_of(pp):
        return revolutions(f.rule(pp, np.ones_like(pp)))

    def rule1(pp, s):
        pp = np.asarray(pp, dtype=np.int64)
        base = np.asarray(f.rule(pp, s), dtype=np.complex128)
        return np.where(pp > P_eps, base * np.exp(-2j * np.pi * theta_of(pp)), base)

    def rule2(pp, s):
        pp = np.asarray(pp, dtype=np.int64)
        twist = np.exp(2j * np.pi * theta_of(pp)) * np.ones(np.shape(s))
        return np.where(pp > P_eps, twist, 1.0 + 0j)

    base_doc = None
    if f.source is not None:
        base_doc = dict(f.source)

    def src(part):
        if base_doc is None:
            return None
        return {"builtin": "decomposed", "params": {"base": base_doc, "eps": eps, "P_max": int(P_max), "part": part}}

    f1 = MultiplicativeSpec(Kind.MULTIPLICATIVE, rule1, f"{f.label} / f1", source=src(1))
    f2 = MultiplicativeSpec(Kind.MULTIPLICATIVE, rule2, f"{f.label} / f2", source=src(2))
    return DecompositionResult(f1, f2, P_eps, tail, float(eps))


def besicovitch_defect(f: MultiplicativeSpec, approx: Sequence[complex], alpha: float, N: int,
                       mode=Mode.CESARO) -> float:
    """Window mean of ``|f(n) - e(alpha) approx[n mod q]|**2``."""
    q = len(approx)
    if q < 1:
        raise ValueError("approximant needs period at least 1")
    N = int(N)
    vals = as_source(f, N).window(1, N)
    pattern = np.asarray(approx, dtype=np.complex128)
    n = np.arange(1, N + 1)
    diff = np.abs(vals - np.exp(2j * np.pi * float(alpha)) * pattern[n % q]) ** 2
    return float(window_average(np.concatenate([[0], diff]), as_mode(mode), N).real)
