"""Multiplicative functions: prime-power specifications and exact evaluation.

A :class:`MultiplicativeSpec` is the single source of truth for a function
``f``.  Its rule is vectorised: ``rule(p, s)`` takes integer arrays of primes and
exponents and returns the complex values ``f(p**s)``.  Values on a range are
produced by peeling prime powers off ``n`` with a smallest-prime-factor table
(:func:`evaluate_range`) or, past the in-memory cap, by a segmented sieve
(:func:`evaluate_segment`).  :func:`value_at` is the independent trial-division
oracle.

Phases: values are whatever the rule returns; no ``e(.)`` convention is assumed
here.  Arguments ``n <= 0`` evaluate to 0.
"""

from __future__ import annotations

import logging
import math
import os
import struct
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Callable

import numpy as np

log = logging.getLogger(__name__)

UNIT_TOL = 1e-12
RENORM_TOL = 1e-9
DEFAULT_SPF_CAP = 200_000_000
SPF_MAGIC = b"MFSPF1"
# ranges evaluated per pass in evaluate_range / evaluate_segment
SEGMENT = 1 << 20

Rule = Callable[[np.ndarray, np.ndarray], np.ndarray]


class CapacityError(RuntimeError):
    """Requested size exceeds a configured memory or precision cap."""


class Kind(str, Enum):
    COMPLETELY = "completely-multiplicative"
    MULTIPLICATIVE = "multiplicative"


@dataclass(frozen=True, eq=False)
class MultiplicativeSpec:
    """Prime-power data of a multiplicative function.

    Attributes:
        kind: completely multiplicative or merely multiplicative.
        rule: vectorised ``(p, s) -> f(p**s)``.
        label: human readable name.
        closed_form: optional vectorised ``n -> f(n)`` that is exactly the
            product of the rule values; used as a fast value source.
        source: JSON descriptor used by the families exporter.
    """

    kind: Kind
    rule: Rule
    label: str = ""
    closed_form: Callable[[np.ndarray], np.ndarray] | None = None
    source: dict[str, Any] | None = field(default=None)

    def prime_power(self, p: int, s: int) -> complex:
        v = self.rule(np.array([p], dtype=np.int64), np.array([s], dtype=np.int64))
        return complex(np.asarray(v, dtype=np.complex128)[0])

    def prime_values(self, primes: np.ndarray) -> np.ndarray:
        primes = np.asarray(primes, dtype=np.int64)
        return np.asarray(self.rule(primes, np.ones_like(primes)), dtype=np.complex128)

    def check_complete(self, primes=(2, 3, 5, 7), max_s: int = 6, tol: float = 1e-12) -> float:
        """Max deviation of ``rule(p, s)`` from ``rule(p, 1)**s``."""
        worst = 0.0
        for p in primes:
            base = self.prime_power(p, 1)
            for s in range(1, max_s + 1):
                worst = max(worst, abs(self.prime_power(p, s) - base**s))
        if self.kind is Kind.COMPLETELY and worst > tol:
            raise ValueError(f"{self.label}: rule is not completely multiplicative ({worst:.3g})")
        return worst

    def __call__(self, n: int) -> complex:
        return value_at(self, n)


def completely_multiplicative(
    prime_rule: Callable[[np.ndarray], np.ndarray], label: str = "", **kw
) -> MultiplicativeSpec:
    """Spec with ``f(p**s) = prime_rule(p)**s``."""

    def rule(p, s):
        base = np.asarray(prime_rule(np.asarray(p, dtype=np.int64)), dtype=np.complex128)
        return int_power(base, np.asarray(s, dtype=np.int64))

    return MultiplicativeSpec(Kind.COMPLETELY, rule, label, **kw)


def int_power(z: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Elementwise ``z**s`` for small nonnegative integer ``s`` by repeated squaring."""
    z = np.asarray(z, dtype=np.complex128)
    s = np.broadcast_to(np.asarray(s, dtype=np.int64), z.shape).copy()
    out = np.ones(z.shape, dtype=np.complex128)
    base = z.copy()
    while np.any(s > 0):
        odd = (s & 1) == 1
        out[odd] *= base[odd]
        s >>= 1
        live = s > 0
        base[live] *= base[live]
    return out


# --------------------------------------------------------------------------- sieves


@dataclass(frozen=True, eq=False)
class SPFTable:
    """Smallest prime factor for every ``2 <= n <= limit`` (``spf[0] = spf[1] = 0``)."""

    limit: int
    spf: np.ndarray

    def __post_init__(self):
        self.spf.setflags(write=False)

    def primes(self) -> np.ndarray:
        idx = np.arange(self.limit + 1)
        return idx[(self.spf == idx) & (idx >= 2)].astype(np.int64)


def build_spf(N: int, cap: int = DEFAULT_SPF_CAP) -> SPFTable:
    """Smallest-prime-factor table for ``[2, N]``."""
    if N < 2:
        raise ValueError("SPF table needs N >= 2")
    if N > cap:
        raise CapacityError(f"SPF limit {N} exceeds cap {cap}")
    spf = np.zeros(N + 1, dtype=np.uint32)
    for p in range(2, math.isqrt(N) + 1):
        if spf[p] == 0:
            seg = spf[p * p :: p]
            seg[seg == 0] = p
    idx = np.arange(N + 1, dtype=np.uint32)
    unset = spf == 0
    spf[unset] = idx[unset]
    spf[:2] = 0
    return SPFTable(N, spf)


def primes_up_to(N: int) -> np.ndarray:
    """All primes ``<= N`` as int64."""
    if N < 2:
        return np.zeros(0, dtype=np.int64)
    sieve = np.ones(N + 1, dtype=bool)
    sieve[:2] = False
    for p in range(2, math.isqrt(N) + 1):
        if sieve[p]:
            sieve[p * p :: p] = False
    return np.nonzero(sieve)[0].astype(np.int64)


def save_spf(table: SPFTable, path: str | os.PathLike) -> None:
    """Write the cache format: magic, LE uint64 limit, LE uint32 spf[2..limit]."""
    if table.limit >= 2**32:
        raise CapacityError("SPF cache format supports limits below 2**32")
    path = Path(path)
    tmp = path.with_name(path.name + f".tmp{os.getpid()}")
    with open(tmp, "wb") as fh:
        fh.write(SPF_MAGIC)
        fh.write(struct.pack("<Q", table.limit))
        fh.write(table.spf[2:].astype("<u4").tobytes())
    os.replace(tmp, path)


def load_spf(path: str | os.PathLike, limit: int | None = None) -> SPFTable:
    """Read a cache file; raises ``ValueError`` on a bad magic, limit or length."""
    data = Path(path).read_bytes()
    if data[:6] != SPF_MAGIC:
        raise ValueError("SPF cache: magic mismatch")
    if len(data) < 14:
        raise ValueError("SPF cache: truncated header")
    (stored,) = struct.unpack("<Q", data[6:14])
    if limit is not None and stored != limit:
        raise ValueError(f"SPF cache: limit {stored} != requested {limit}")
    body = data[14:]
    if len(body) != 4 * (stored - 1):
        raise ValueError("SPF cache: truncated body")
    spf = np.zeros(stored + 1, dtype=np.uint32)
    spf[2:] = np.frombuffer(body, dtype="<u4")
    return SPFTable(int(stored), spf)


# --------------------------------------------------------------------------- values


@dataclass(frozen=True, eq=False)
class ValueTable:
    """``values[n] = f(n)`` for ``0 <= n <= limit`` (``values[0] = 0``)."""

    limit: int
    values: np.ndarray
    kind: Kind = Kind.MULTIPLICATIVE
    label: str = ""

    def __post_init__(self):
        self.values.setflags(write=False)

    def __getitem__(self, n):
        return self.values[n]

    def window(self, lo: int, hi: int) -> np.ndarray:
        """Values for ``n`` in ``[lo, hi]`` with the zero extension below 1."""
        if hi > self.limit:
            raise CapacityError(f"table limit {self.limit} < requested index {hi}")
        out = np.zeros(hi - lo + 1, dtype=np.complex128)
        a = max(lo, 1)
        if a <= hi:
            out[a - lo :] = self.values[a : hi + 1]
        return out


def _renormalize(vals: np.ndarray, label: str) -> np.ndarray:
    mag = np.abs(vals)
    over = mag > 1 + RENORM_TOL
    if np.any(over):
        log.warning("%s: renormalising %d values drifting off the unit disc (max %.3g)",
                    label, int(over.sum()), float(mag.max()))
        vals[over] /= mag[over]
    return vals


def _peel(spec: MultiplicativeSpec, n: np.ndarray, spf: np.ndarray) -> np.ndarray:
    """f(n) for an int64 array ``n >= 1`` by repeatedly removing the smallest prime power."""
    vals = np.ones(n.shape, dtype=np.complex128)
    cur = n.copy()
    idx = np.nonzero(cur > 1)[0]
    while idx.size:
        c = cur[idx]
        p = spf[c].astype(np.int64)
        c = c // p
        s = np.ones_like(c)
        more = np.nonzero(c % p == 0)[0]
        while more.size:
            c[more] //= p[more]
            s[more] += 1
            more = more[c[more] % p[more] == 0]
        vals[idx] *= spec.rule(p, s)
        cur[idx] = c
        idx = idx[c > 1]
    return vals


def evaluate_range(spec: MultiplicativeSpec, N: int, spf: SPFTable | None = None) -> ValueTable:
    """Exact values of ``f`` on ``[0, N]`` from a smallest-prime-factor table.

    Above the SPF cap (or when no table is given and ``N`` is large) the
    segmented path is used instead.
    """
    if spf is None:
        if N > DEFAULT_SPF_CAP:
            return _evaluate_segmented(spec, N)
        spf = build_spf(max(N, 2))
    if spf.limit < N:
        raise CapacityError(f"SPF limit {spf.limit} < {N}")
    values = np.zeros(N + 1, dtype=np.complex128)
    if N >= 1:
        values[1] = 1.0
    for a in range(2, N + 1, SEGMENT):
        b = min(N, a + SEGMENT - 1)
        values[a : b + 1] = _peel(spec, np.arange(a, b + 1, dtype=np.int64), spf.spf)
    _renormalize(values, spec.label)
    return ValueTable(N, values, spec.kind, spec.label)


def evaluate_segment(spec: MultiplicativeSpec, lo: int, hi: int,
                     small_primes: np.ndarray | None = None) -> np.ndarray:
    """Values of ``f`` for ``n`` in ``[lo, hi]`` without a global SPF table.

    Trial division by the primes up to ``sqrt(hi)``; whatever cofactor is left
    is 1 or a single large prime.  Indices ``n <= 0`` give 0.
    """
    out = np.zeros(hi - lo + 1, dtype=np.complex128)
    a = max(lo, 1)
    if a > hi:
        return out
    if small_primes is None:
        small_primes = primes_up_to(math.isqrt(hi))
    n = np.arange(a, hi + 1, dtype=np.int64)
    rem = n.copy()
    vals = np.ones(n.shape, dtype=np.complex128)
    for p in small_primes:
        p = int(p)
        if p * p > hi:
            break
        first = (-a) % p
        if first > hi - a:
            continue
        sl = slice(first, None, p)
        r = rem[sl]
        r //= p
        s = np.ones(r.shape, dtype=np.int64)
        more = np.nonzero(r % p == 0)[0]
        while more.size:
            r[more] //= p
            s[more] += 1
            more = more[r[more] % p == 0]
        rem[sl] = r
        vals[sl] *= spec.rule(np.full(r.shape, p, dtype=np.int64), s)
    big = np.nonzero(rem > 1)[0]
    if big.size:
        vals[big] *= spec.rule(rem[big], np.ones(big.size, dtype=np.int64))
    out[a - lo :] = vals
    return out


def _evaluate_segmented(spec: MultiplicativeSpec, N: int) -> ValueTable:
    small = primes_up_to(math.isqrt(N))
    values = np.zeros(N + 1, dtype=np.complex128)
    for a in range(1, N + 1, SEGMENT):
        b = min(N, a + SEGMENT - 1)
        values[a : b + 1] = evaluate_segment(spec, a, b, small)
    _renormalize(values, spec.label)
    return ValueTable(N, values, spec.kind, spec.label)


def factorize(n: int) -> list[tuple[int, int]]:
    """Prime factorisation of ``n >= 1`` by trial division."""
    out = []
    p = 2
    while p * p <= n:
        if n % p == 0:
            s = 0
            while n % p == 0:
                n //= p
                s += 1
            out.append((p, s))
        p += 1 if p == 2 else 2
    if n > 1:
        out.append((n, 1))
    return out


def value_at(spec: MultiplicativeSpec, n: int) -> complex:
    """``f(n)`` by trial factorisation; independent of every sieve path."""
    n = int(n)
    if n <= 0:
        return 0j
    v = 1 + 0j
    for p, s in factorize(n):
        v *= spec.prime_power(p, s)
    return v


@dataclass
class MultiplicativityReport:
    trials: int
    max_defect: float
    worst_pair: tuple[int, int] | None


def verify_multiplicativity(table: ValueTable, trials: int, seed: int) -> MultiplicativityReport:
    """Sample pairs with ``m*n <= limit`` and report max ``|f(mn) - f(m) f(n)|``.

    Pairs are forced coprime unless the table is completely multiplicative.
    """
    rng = np.random.default_rng(seed)
    L = table.limit
    worst, pair, done = 0.0, None, 0
    complete = table.kind is Kind.COMPLETELY
    while done < trials:
        m = int(rng.integers(1, math.isqrt(L) + 1)) if rng.random() < 0.5 else int(rng.integers(1, L + 1))
        k = int(rng.integers(1, L // m + 1))
        if rng.random() < 0.5:
            m, k = k, m
        if not complete and math.gcd(m, k) != 1:
            continue
        d = abs(table.values[m * k] - table.values[m] * table.values[k])
        if d > worst or pair is None:
            worst, pair = float(d), (m, k)
        done += 1
    return MultiplicativityReport(trials, worst, pair)
