"""Closed-form limits for correlations of MRT-type functions and the unipotent
models, with an oscillatory-integral engine and a Riemann-sum oracle.

Radian convention: ``e(t) = exp(i t)``.  All moment tests run on Python
integers after merging equal shifts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

from . import summation as sm

INF = math.inf
DEFAULT_MIXTURE_LEVELS = 64


# --------------------------------------------------------------------------- moments


def merge_shifts(k: Sequence[int], n: Sequence[int]) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Sum exponents over equal shifts and drop the zero ones; returns ``(k, n)``."""
    if len(k) != len(n) or not k:
        raise ValueError("k and n must be nonempty and of equal length")
    merged: dict[int, int] = {}
    for kj, nj in zip(k, n):
        merged[int(nj)] = merged.get(int(nj), 0) + int(kj)
    items = sorted((h, c) for h, c in merged.items() if c)
    return tuple(c for _, c in items), tuple(h for h, _ in items)


def moment(k: Sequence[int], n: Sequence[int], i: int) -> int:
    """``sum_j k_j n_j**i`` with ``0**0 = 1``."""
    return sum(int(kj) * (1 if i == 0 else int(nj) ** i) for kj, nj in zip(k, n))


def min_index_i0(k: Sequence[int], n: Sequence[int]) -> int | float:
    """Least ``i >= 0`` with a nonzero moment, or ``math.inf`` if none exists.

    After merging, the shifts are distinct, so a nonzero coefficient vector has
    a nonzero moment of degree below its length (Vandermonde).
    """
    km, nm = merge_shifts(k, n)
    for i in range(len(km)):
        if moment(km, nm, i):
            return i
    return INF


def binomial_int(x: int, i: int) -> int:
    """Generalised binomial ``x (x-1) ... (x-i+1) / i!`` for any integer ``x``."""
    if i < 0:
        return 0
    num = 1
    for j in range(i):
        num *= x - j
    return num // math.factorial(i)


# --------------------------------------------------------------------------- predictions


def mrt_log_limit(c: float, k: Sequence[int], n: Sequence[int]) -> float:
    """Logarithmic limit with window exponent ``c``: ``0``, ``1 - c/i0`` or ``1``."""
    if not c > 0:
        raise ValueError("c must be positive")
    i0 = min_index_i0(k, n)
    if i0 == INF:
        return 1.0
    if i0 <= c:
        return 0.0
    return 1.0 - c / i0


def mrt_cesaro_band_limit(d: int, k: Sequence[int], n: Sequence[int]) -> int:
    """Cesàro limit on windows of fractional degree strictly between ``1/(d+1)`` and ``1/d``."""
    if d < 0:
        raise ValueError("d must be nonnegative")
    return 0 if min_index_i0(k, n) <= d else 1


def unipotent_integral(d: int, k: Sequence[int], n: Sequence[int]) -> int:
    """Model-side integral of ``prod_j (T^{n_j} F)^{k_j}`` on the level-``d`` torus.

    The last coordinate of ``T^m x`` is ``sum_i binom(m, i) x_{d-i}``, so the
    integral is 1 exactly when every binomial moment of degree ``<= d`` vanishes.
    """
    if d < 0:
        raise ValueError("d must be nonnegative")
    km, nm = merge_shifts(k, n)
    return int(all(sum(kj * binomial_int(nj, i) for kj, nj in zip(km, nm)) == 0 for i in range(d + 1)))


@dataclass(frozen=True)
class LimitPrediction:
    """Exact scalar limit, or ``integral_0^1 exp(i beta x**-d) dx``.

    For oscillatory predictions ``variants`` maps a variant name to its
    ``beta``; ``beta`` itself is variant ``A``.
    """

    kind: str
    scalar: complex = 0j
    beta: float = 0.0
    d: int = 0
    exponent_A: int = 0
    exponent_B: int = 0
    variants: dict = field(default_factory=dict)

    def value(self, variant: str = "A", tol: float = 1e-10) -> complex:
        if self.kind == "exact-scalar":
            return self.scalar
        beta = self.beta if variant == "A" else self.variants[variant]
        return oscillatory_integral(beta, self.d, tol)

    @property
    def discrepancy(self) -> bool:
        """Whether the exponent variants disagree."""
        return self.kind == "oscillatory-integral" and len({round(v, 12) for v in self.variants.values()}) > 1

    def to_dict(self) -> dict:
        if self.kind == "exact-scalar":
            return {"kind": self.kind, "scalar_re": self.scalar.real, "scalar_im": self.scalar.imag}
        return {"kind": self.kind, "beta": self.beta, "d": self.d, "exponent_variantA": self.exponent_A,
                "exponent_variantB": self.exponent_B, "variants": dict(self.variants)}

    @classmethod
    def from_dict(cls, doc: dict) -> "LimitPrediction":
        if doc["kind"] == "exact-scalar":
            return cls("exact-scalar", complex(doc["scalar_re"], doc["scalar_im"]))
        return cls("oscillatory-integral", beta=float(doc["beta"]), d=int(doc["d"]),
                   exponent_A=int(doc["exponent_variantA"]), exponent_B=int(doc["exponent_variantB"]),
                   variants={k: float(v) for k, v in doc.get("variants", {}).items()})


def exact(value: complex) -> LimitPrediction:
    return LimitPrediction("exact-scalar", complex(value))


def mrt_cesaro_alpha_limit(alpha: float, d: int, k: Sequence[int], n: Sequence[int]) -> LimitPrediction:
    """Cesàro limit on windows ``[alpha s**(1/d)]`` for ``n -> n**(is)``.

    Returns exact 0 when ``i0 < d``.  Otherwise the limit is an oscillatory
    integral whose exponent is reported in several variants:

    ``A``        ``K = sum k_j n_j**d``
    ``B``        ``sum k_j binom(n_j, d)``
    ``A_signed`` ``(-1)**(d-1) K``
    ``B_signed`` ``(-1)**(d-1) sum k_j binom(n_j, d)``
    ``taylor``   ``(-1)**(d-1) K / d``, the leading term of ``sum k_j log(n + n_j)``

    each divided by ``alpha**d``.
    """
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    if d < 1:
        raise ValueError("d must be at least 1")
    km, nm = merge_shifts(k, n) if any(k) else ((), ())
    i0 = min_index_i0(k, n) if km else INF
    if i0 < d:
        return exact(0)
    K = moment(km, nm, d)
    B = sum(kj * binomial_int(nj, d) for kj, nj in zip(km, nm))
    sign = -1 if d % 2 == 0 else 1
    scale = float(alpha) ** d
    variants = {"A": K / scale, "B": B / scale, "A_signed": sign * K / scale,
                "B_signed": sign * B / scale, "taylor": sign * K / (d * scale)}
    return LimitPrediction("oscillatory-integral", beta=variants["A"], d=d, exponent_A=K, exponent_B=B,
                           variants=variants)


# --------------------------------------------------------------------------- oscillatory integral


@lru_cache(maxsize=None)
def _gauss_legendre(m: int = 16):
    return np.polynomial.legendre.leggauss(m)


def _panel_sum(edges: np.ndarray, a: float, freq: float = 1.0) -> complex:
    """``sum over panels of integral e^{i freq t} t^{-a} dt`` with 16-point Gauss-Legendre."""
    if edges.size < 2:
        return 0j
    x, w = _gauss_legendre()
    lo, hi = edges[:-1, None], edges[1:, None]
    half, mid = (hi - lo) / 2, (hi + lo) / 2
    t = mid + half * x[None, :]
    vals = np.exp(1j * freq * t) * t ** (-a)
    per_panel = (vals * w[None, :]).sum(axis=1) * half[:, 0]
    return complex(sm.tree_sum(per_panel))


def _pochhammer(a: float, m: int) -> float:
    out = 1.0
    for j in range(m):
        out *= a + j
    return out


IBP_TERMS = 8


def _tail_series(T: float, a: float, K: int = IBP_TERMS) -> complex:
    """Asymptotic part of ``integral_T^inf e^{it} t^{-a} dt``:
    ``sum_{k<K} i^{k+1} g^{(k)}(T) e^{iT}`` with ``g = t^{-a}``."""
    total = 0j
    for m in range(K):
        gk = (-1) ** m * _pochhammer(a, m) * T ** (-a - m)
        total += (1j) ** (m + 1) * gk
    return total * np.exp(1j * T)


def _tail_remainder_bound(T: float, a: float, K: int = IBP_TERMS) -> float:
    return _pochhammer(a, K) * T ** (1 - a - K) / (a + K - 1)


def oscillatory_integral(beta: float, d: int, tol: float = 1e-10) -> complex:
    """``integral_0^1 exp(i beta x**-d) dx`` to absolute accuracy ``tol``.

    With ``t = |beta| x**-d`` this is ``(|beta|**(1/d) / d) integral_{|beta|}^inf
    e^{it} t^{-1-1/d} dt``.  The range up to a cutoff ``T`` is integrated panel
    by panel (one panel per ``2 pi`` of phase, halving panels below ``2 pi``);
    the tail beyond ``T`` uses an integration-by-parts expansion whose
    remainder is bounded below ``tol / 2``.
    """
    if not 1e-12 <= tol <= 1e-3:
        raise ValueError("tol must lie in [1e-12, 1e-3]")
    if d < 1:
        raise ValueError("d must be a positive integer")
    if beta == 0:
        return 1 + 0j
    b = abs(float(beta))
    if b < 1e-200:
        # |value - 1| is of order b log(1/b), far below any admissible tol
        return 1 + 0j
    a = 1.0 + 1.0 / d
    pref = b ** (1.0 / d) / d
    val = 0j
    start = b
    if b < 2 * math.pi:
        # below one period work in u = t / b, where the prefactor cancels
        edges = [1.0]
        while edges[-1] * 2 * b < 2 * math.pi:
            edges.append(edges[-1] * 2)
        edges.append(2 * math.pi / b)
        val += _panel_sum(np.array(edges), a, b) / d
        start = 2 * math.pi
    T = start
    while pref * _tail_remainder_bound(T, a) > tol / 2:
        T += 2 * math.pi
    panels = int(round((T - start) / (2 * math.pi)))
    edges = start + 2 * math.pi * np.arange(0, panels + 1)
    val += pref * (_panel_sum(edges, a) + _tail_series(float(edges[-1]), a))
    return val if beta > 0 else val.conjugate()


def riemann_oracle(beta: float, d: int, M: int) -> complex:
    """``(1/M) sum_{n=1..M} exp(i beta (n/M)**-d)``."""
    M = int(M)
    if M < 1000:
        raise ValueError("M must be at least 1000")
    if beta == 0:
        return 1 + 0j

    def term(lo, hi):
        x = np.arange(lo, hi + 1, dtype=np.float64) / M
        return np.exp(1j * (float(beta) * x ** (-float(d))))

    return complex(sm.tree_sum(sm.blocked_range_sums(term, M))) / M


# --------------------------------------------------------------------------- mixtures


@dataclass(frozen=True)
class MixtureWeights:
    """Weights of the logarithmic mixture over the levels ``d``."""

    c: float
    weights: tuple[tuple[int, float], ...]
    tail: float

    @classmethod
    def build(cls, c: float, levels: int | None = None) -> "MixtureWeights":
        if not c > 0:
            raise ValueError("c must be positive")
        lo, hi = math.floor(c), math.ceil(c)
        top = hi + (DEFAULT_MIXTURE_LEVELS if levels is None else levels)
        w = [(lo, 1.0 - c / hi)]
        w += [(d, c * (1.0 / d - 1.0 / (d + 1))) for d in range(hi, top + 1)]
        return cls(float(c), tuple(w), c / (top + 1))

    @property
    def total(self) -> float:
        return math.fsum(x for _, x in self.weights) + self.tail


def mixture_limit(c: float, k: Sequence[int], n: Sequence[int], truncation: int | None = None) -> float:
    """``sum_d w_d * unipotent_integral(d, k, n)`` over the mixture weights.

    With ``i0`` finite only levels below ``i0`` contribute, so the sum is
    finite; with ``i0`` infinite every level contributes 1 and the tail mass
    is added in.
    """
    i0 = min_index_i0(k, n)
    if i0 == INF:
        mw = MixtureWeights.build(c, truncation)
        return math.fsum([x for _, x in mw.weights] + [mw.tail])
    mw = MixtureWeights.build(c, max(0, int(i0) - math.ceil(c)) if truncation is None else truncation)
    return math.fsum(x * unipotent_integral(d, k, n) for d, x in mw.weights)


# --------------------------------------------------------------------------- arbitration


def mrt_direct_cesaro(s: float, alpha: float, d: int, k: Sequence[int], n: Sequence[int]) -> complex:
    """Cesàro correlation of ``n -> n**(is)`` over ``[alpha s**(1/d)]``, summed directly."""
    from .expsum import ShiftLogPhase, exp_sum

    L = int(math.floor(alpha * float(s) ** (1.0 / d)))
    return exp_sum(float(s), ShiftLogPhase(tuple(k), tuple(n)), 1, L)


def arbitrate_variants(s: float, alpha: float, d: int, k: Sequence[int], n: Sequence[int],
                       tol: float = 1e-8) -> dict:
    """Defect of every exponent variant against a direct MRT-phase correlation."""
    pred = mrt_cesaro_alpha_limit(alpha, d, k, n)
    emp = mrt_direct_cesaro(s, alpha, d, k, n)
    if pred.kind == "exact-scalar":
        return {"empirical": emp, "defects": {"exact": float(abs(emp - pred.scalar))}, "best": "exact"}
    defects = {name: float(abs(emp - oscillatory_integral(b, d, tol))) for name, b in pred.variants.items()}
    return {"empirical": emp, "defects": defects, "best": min(defects, key=defects.get)}
