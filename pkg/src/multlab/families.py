"""Ready-made multiplicative functions: Dirichlet characters, the standard
pretentious examples, Archimedean characters and MRT-type phase functions.

Characters and the ``e(1/p)``-type examples use ``e(t) = exp(2 pi i t)``;
Archimedean and MRT phases are radian, ``n**(it) = exp(i t log n)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Sequence

import numpy as np

from . import ddouble as dd
from .mfunc import Kind, MultiplicativeSpec, completely_multiplicative, factorize, primes_up_to

TAU = 2 * math.pi


def root_of_unity(num: int, den: int) -> complex:
    """``e(num/den)``, exact on the quarter turns."""
    r = Fraction(num, den) % 1
    exact = {Fraction(0): 1 + 0j, Fraction(1, 2): -1 + 0j, Fraction(1, 4): 1j, Fraction(3, 4): -1j}
    if r in exact:
        return exact[r]
    return complex(np.exp(2j * np.pi * float(r)))


def radian_phase(t: float, n: np.ndarray) -> np.ndarray:
    """``exp(i t log n)`` with the phase reduced in double-double when large."""
    n = np.asarray(n, dtype=np.int64)
    x = n.astype(np.float64)
    rough = t * np.log(x)
    out = np.exp(1j * rough)
    big = np.abs(rough) > 2.0**30
    if np.any(big):
        r = dd.reduce_2pi(dd.dd_mul_d(dd.dd_log_int(x[big]), float(t)))
        out[big] = np.exp(1j * r)
    return out


# --------------------------------------------------------------------------- characters


def _primitive_root(pe: int, p: int) -> int:
    phi = pe // p * (p - 1)
    fac = [q for q, _ in factorize(phi)]
    for g in range(2, pe):
        if math.gcd(g, p) == 1 and all(pow(g, phi // q, pe) != 1 for q in fac):
            return g
    raise ValueError(f"no primitive root mod {pe}")


def unit_group_generators(m: int) -> list[tuple[int, int, int]]:
    """Cyclic decomposition of ``(Z/mZ)*`` as ``(prime_power, generator, order)``.

    Canonical order: the 2-part first (``-1`` then ``5`` when ``8 | m``), then
    odd prime powers in increasing order, each with its smallest primitive root.
    """
    gens = []
    for p, e in factorize(m) if m > 1 else []:
        pe = p**e
        if p == 2:
            if e == 2:
                gens.append((4, pe - 1, 2))
            elif e >= 3:
                gens.append((pe, pe - 1, 2))
                gens.append((pe, 5, pe // 4))
        else:
            gens.append((pe, _primitive_root(pe, p), pe // p * (p - 1)))
    return gens


def _discrete_logs(m: int, gens) -> dict[int, tuple[int, ...]]:
    """Exponent vector of every unit mod ``m`` w.r.t. the canonical generators."""
    comps: list[tuple[int, list[tuple[int, int, int]]]] = []
    for pe, g, order in gens:
        if comps and comps[-1][0] == pe:
            comps[-1][1].append((pe, g, order))
        else:
            comps.append((pe, [(pe, g, order)]))
    local: list[tuple[int, dict[int, tuple[int, ...]]]] = []
    for pe, glist in comps:
        table: dict[int, tuple[int, ...]] = {}
        if len(glist) == 1:
            _, g, order = glist[0]
            x = 1
            for j in range(order):
                table[x] = (j,)
                x = x * g % pe
        else:
            (_, g1, o1), (_, g2, o2) = glist
            for a in range(o1):
                x = pow(g1, a, pe)
                for b in range(o2):
                    table[x] = (a, b)
                    x = x * g2 % pe
        local.append((pe, table))
    out = {}
    for r in range(m):
        if math.gcd(r, m) != 1:
            continue
        vec: tuple[int, ...] = ()
        for pe, table in local:
            vec += table[r % pe]
        out[r] = vec
    if m == 1:
        out[0] = ()
    return out


def euler_phi(m: int) -> int:
    out = m
    for p, _ in factorize(m) if m > 1 else []:
        out = out // p * (p - 1)
    return out


@dataclass(frozen=True, eq=False)
class DirichletCharacterSpec:
    modulus: int
    index: int
    conductor: int
    primitive: bool
    residue_values: tuple[complex, ...]
    exponents: tuple[int, ...] = ()
    orders: tuple[int, ...] = ()

    def __call__(self, n: int) -> complex:
        return self.residue_values[int(n) % self.modulus]

    @property
    def spec(self) -> MultiplicativeSpec:
        table = np.array(self.residue_values, dtype=np.complex128)
        m = self.modulus

        def prime_rule(p):
            return table[np.asarray(p) % m]

        def closed(n):
            return table[np.asarray(n) % m]

        return completely_multiplicative(
            prime_rule, f"chi_{m},{self.index}", closed_form=closed,
            source={"builtin": "character", "params": {"modulus": m, "index": self.index}})


def character(modulus: int, index: int) -> DirichletCharacterSpec:
    """The ``index``-th Dirichlet character mod ``modulus``.

    Indices enumerate exponent tuples ``(j_1, ..)`` lexicographically over the
    canonical generators of :func:`unit_group_generators`;
    ``chi(g_i) = e(j_i / ord(g_i))``.  Index 0 is the principal character.
    """
    m = int(modulus)
    if m < 1:
        raise ValueError("modulus must be positive")
    gens = unit_group_generators(m)
    orders = tuple(o for _, _, o in gens)
    total = math.prod(orders) if orders else 1
    if not 0 <= index < total:
        raise ValueError(f"index {index} out of range [0, {total}) for modulus {m}")
    exps = []
    rest = index
    for o in reversed(orders):
        rest, j = divmod(rest, o)
        exps.append(j)
    exps = tuple(reversed(exps))
    logs = _discrete_logs(m, gens)
    vals = [0j] * m
    for r, vec in logs.items():
        num = sum(Fraction(j * v, o) for j, v, o in zip(exps, vec, orders))
        vals[r] = root_of_unity(num.numerator, num.denominator)
    q = _conductor(m, vals)
    return DirichletCharacterSpec(m, index, q, q == m, tuple(vals), exps, orders)


def _conductor(m: int, vals: Sequence[complex]) -> int:
    for d in sorted(d for d in range(1, m + 1) if m % d == 0):
        if all(abs(vals[r] - 1) < 1e-12 for r in range(m) if math.gcd(r, m) == 1 and r % d == 1 % d):
            return d
    return m


def characters(modulus: int) -> list[DirichletCharacterSpec]:
    return [character(modulus, i) for i in range(euler_phi(modulus))]


# --------------------------------------------------------------------------- example families


def _const(v: complex):
    return lambda p: np.full(np.shape(p), v, dtype=np.complex128)


def constant_one() -> MultiplicativeSpec:
    return completely_multiplicative(_const(1.0), "one", closed_form=lambda n: np.ones(np.shape(n), complex),
                                     source={"builtin": "one", "params": {}})


def liouville() -> MultiplicativeSpec:
    return completely_multiplicative(_const(-1.0), "liouville", source={"builtin": "liouville", "params": {}})


def mobius() -> MultiplicativeSpec:
    def rule(p, s):
        s = np.asarray(s)
        return np.where(s == 1, -1.0, 0.0).astype(np.complex128) * np.ones(np.shape(p))

    return MultiplicativeSpec(Kind.MULTIPLICATIVE, rule, "mobius", source={"builtin": "mobius", "params": {}})


def archimedean(t: float) -> MultiplicativeSpec:
    """``n -> n**(it)``."""
    t = float(t)
    return completely_multiplicative(
        lambda p: radian_phase(t, p), f"n^(i{t:g})", closed_form=lambda n: radian_phase(t, n),
        source={"builtin": "archimedean", "params": {"t": t}})


def mrt_phase_spec(s: float) -> MultiplicativeSpec:
    """``f(p) = exp(i s log p)``, so ``f(n) = exp(i s log n)`` exactly."""
    spec = archimedean(s)
    return MultiplicativeSpec(spec.kind, spec.rule, f"mrt-phase s={s:g}", spec.closed_form,
                              {"builtin": "mrt-phase", "params": {"s": s}})


def _finite_set_rule(primes: frozenset[int]):
    arr = np.array(sorted(primes), dtype=np.int64)

    def prime_rule(p):
        return np.where(np.isin(np.asarray(p), arr), -1.0, 1.0).astype(np.complex128)

    return prime_rule


def example_family(id: str, **params) -> MultiplicativeSpec:
    """Named examples (i)-(vii) of functions pretending to be a character.

    (i) ``f(2) = -1``, else 1 (completely multiplicative); (ii) ``-1`` on the
    primes in ``params['primes']``; (iii) ``1 off 3Z, -1 on 3Z``; (iv) ``mu**2``;
    (v) ``n**(it)``; (vi) ``f(p) = e(1/p)`` or, with ``variant='1-1/p'``,
    ``f(p) = 1 - 1/p``; (vii) ``f(p) = e(1/log log p)`` for ``p >= 3``, ``f(2) = 1``.
    """
    key = str(id).lower().strip("()")
    src = {"builtin": "example", "params": {"id": key, **params}}
    if key == "i":
        return completely_multiplicative(lambda p: np.where(np.asarray(p) == 2, -1.0, 1.0).astype(complex),
                                         "example (i)", source=src)
    if key == "ii":
        if "primes" not in params:
            raise ValueError("example (ii) needs params['primes']")
        return completely_multiplicative(_finite_set_rule(frozenset(int(p) for p in params["primes"])),
                                         f"example (ii) {sorted(params['primes'])}", source=src)
    if key == "iii":
        def rule(p, s):
            return np.where(np.asarray(p) == 3, -1.0, 1.0).astype(np.complex128) * np.ones(np.shape(s))

        def closed(n):
            return np.where(np.asarray(n) % 3 == 0, -1.0, 1.0).astype(np.complex128)

        return MultiplicativeSpec(Kind.MULTIPLICATIVE, rule, "example (iii)", closed, src)
    if key == "iv":
        def rule(p, s):
            return np.where(np.asarray(s) == 1, 1.0, 0.0).astype(np.complex128) * np.ones(np.shape(p))

        return MultiplicativeSpec(Kind.MULTIPLICATIVE, rule, "example (iv) mu^2", source=src)
    if key == "v":
        if "t" not in params:
            raise ValueError("example (v) needs params['t']")
        spec = archimedean(params["t"])
        return MultiplicativeSpec(spec.kind, spec.rule, "example (v)", spec.closed_form, src)
    if key == "vi":
        if params.get("variant", "e(1/p)") == "1-1/p":
            return completely_multiplicative(lambda p: (1.0 - 1.0 / np.asarray(p, dtype=np.float64)).astype(complex),
                                             "example (vi) 1-1/p", source=src)
        return completely_multiplicative(lambda p: np.exp(2j * np.pi / np.asarray(p, dtype=np.float64)),
                                         "example (vi) e(1/p)", source=src)
    if key == "vii":
        def prime_rule(p):
            p = np.asarray(p, dtype=np.float64)
            safe = np.maximum(p, 3.0)
            return np.where(p >= 3, np.exp(2j * np.pi / np.log(np.log(safe))), 1.0 + 0j)

        return completely_multiplicative(prime_rule, "example (vii)", source=src)
    raise ValueError(f"unknown example id {id!r}")


# --------------------------------------------------------------------------- MRT


@dataclass(frozen=True)
class MRTScaleData:
    """Scales ``t_1 = 1 < t_2 < ...`` and exponents ``s_1, s_2, ...``.

    ``s[m]`` (1-based ``s_{m+1}``) drives the primes in ``(t_m, t_{m+1}]``;
    ``s_1`` is carried only to keep the indexing of the definition.
    """

    t: tuple[int, ...]
    s: tuple[int, ...]
    delta: float = 0.05

    def __post_init__(self):
        t, s = tuple(int(x) for x in self.t), tuple(int(x) for x in self.s)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "s", s)
        if not t or t[0] != 1:
            raise ValueError("MRT scales must start with t_1 = 1")
        if len(s) != len(t):
            raise ValueError("need one exponent per scale")
        for m in range(len(t) - 1):
            lo, nxt, top = t[m], s[m + 1], t[m + 1]
            if not (lo < nxt < nxt * nxt <= top):
                raise ValueError(f"scale axiom violated at m={m + 1}: need t_m < s_(m+1) < s_(m+1)^2 <= t_(m+1), "
                                 f"got {lo}, {nxt}, {top}")


def mrt_exponent_search(prior: Sequence[tuple[int, complex]], delta: float, lo: int, hi: int,
                        chunk: int = 1 << 20) -> int | None:
    """Smallest integer ``s`` in ``[lo, hi]`` with ``|v_p - exp(i s log p)| <= delta`` for all pairs."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    ps = [int(p) for p, _ in prior]
    if len(set(ps)) != len(ps):
        raise ValueError("primes must be distinct")
    if not prior:
        return int(lo) if lo <= hi else None
    logs = np.log(np.array(ps, dtype=np.float64))
    vals = np.array([complex(v) for _, v in prior])
    for a in range(int(lo), int(hi) + 1, chunk):
        b = min(int(hi), a + chunk - 1)
        s = np.arange(a, b + 1, dtype=np.float64)
        ok = np.ones(s.shape, dtype=bool)
        for lp, v in zip(logs, vals):
            live = np.nonzero(ok)[0]
            if not live.size:
                break
            ok[live] = np.abs(v - np.exp(1j * s[live] * lp)) <= delta
        hit = np.nonzero(ok)[0]
        if hit.size:
            return int(a + hit[0])
    return None


@dataclass
class MRTVerification:
    level: int
    t_m: int
    s_next: int
    defect: float
    delta: float

    @property
    def ok(self) -> bool:
        return self.defect <= self.delta


@dataclass(eq=False)
class MRTFunction:
    scales: MRTScaleData
    spec: MultiplicativeSpec
    checks: list[MRTVerification] = field(default_factory=list)


def mrt_assemble(scales: MRTScaleData) -> MRTFunction:
    """``f(p) = exp(i s_{m+1} log p)`` on ``(t_m, t_{m+1}]``; primes past the last
    scale keep the last exponent.  The verifier records, per level, the max over
    ``p <= t_m`` of ``|f(p) - exp(i s_{m+1} log p)|``."""
    t = np.array(scales.t, dtype=np.int64)
    s = np.array(scales.s, dtype=np.float64)

    def prime_rule(p):
        p = np.asarray(p, dtype=np.int64)
        level = np.searchsorted(t, p, side="left")  # p in (t[level-1], t[level]]
        level = np.clip(level, 1, len(t) - 1) if len(t) > 1 else np.zeros_like(level)
        return radian_phase_vec(s[level], p)

    spec = completely_multiplicative(prime_rule, "mrt", source={
        "builtin": "mrt", "params": {"t": list(scales.t), "s": list(scales.s), "delta": scales.delta}})
    checks = []
    for m in range(1, len(scales.t)):
        ps = primes_up_to(scales.t[m - 1])
        if ps.size:
            got = spec.prime_values(ps)
            want = radian_phase(float(scales.s[m]), ps)
            defect = float(np.max(np.abs(got - want)))
        else:
            defect = 0.0
        checks.append(MRTVerification(m, scales.t[m - 1], scales.s[m], defect, scales.delta))
    return MRTFunction(scales, spec, checks)


def radian_phase_vec(t: np.ndarray, n: np.ndarray) -> np.ndarray:
    """``exp(i t_k log n_k)`` elementwise (exponents may differ per element)."""
    t = np.asarray(t, dtype=np.float64)
    n = np.asarray(n, dtype=np.int64)
    h, l = dd.dd_log_int(n.astype(np.float64))
    return np.exp(1j * dd.reduce_2pi(dd.dd_mul_d((h, l), t)))


def mrt_build(levels: int = 2, delta: float = 0.05, max_primes: int = 8, s2: int = 2,
              search_span: int = 10**8) -> MRTFunction:
    """Desk-scale MRT construction by repeated exponent search.

    Level 1 uses ``s_2 = s2`` and ``t_2 = s2**2 + 1``; each later exponent is
    the smallest integer above ``t_m`` matching the already fixed values on (at
    most ``max_primes``) primes ``<= t_m`` within ``delta``, and
    ``t_{m+1} = s_{m+1}**2``.
    """
    t = [1, s2 * s2 + 1]
    s = [1, s2]
    for _ in range(levels - 1):
        tm = t[-1]
        ps = primes_up_to(tm)[:max_primes]
        current = mrt_assemble(MRTScaleData(tuple(t), tuple(s), delta)).spec
        prior = [(int(p), current.prime_power(int(p), 1)) for p in ps]
        nxt = mrt_exponent_search(prior, delta, tm + 1, tm + search_span)
        if nxt is None:
            raise RuntimeError(f"no exponent within delta={delta} in ({tm}, {tm + search_span}]")
        s.append(nxt)
        t.append(nxt * nxt)
    return mrt_assemble(MRTScaleData(tuple(t), tuple(s), delta))


# --------------------------------------------------------------------------- JSON


class TableSpecRule:
    """Rule backed by an explicit ``{(p, s): value}`` table; unlisted powers give 1
    (or ``rule(p, 1)**s`` for completely multiplicative specs)."""

    def __init__(self, table: dict[tuple[int, int], complex], complete: bool):
        self.table = table
        self.complete = complete

    def __call__(self, p, s):
        p = np.atleast_1d(np.asarray(p, dtype=np.int64))
        s = np.broadcast_to(np.asarray(s, dtype=np.int64), p.shape)
        out = np.ones(p.shape, dtype=np.complex128)
        for i, (pp, ss) in enumerate(zip(p.tolist(), s.tolist())):
            if self.complete:
                out[i] = self.table.get((pp, 1), 1.0) ** ss
            else:
                out[i] = self.table.get((pp, ss), 1.0)
        return out


def builtin(name: str, params: dict | None = None) -> MultiplicativeSpec:
    """Construct a builtin family from its JSON name and parameters."""
    params = dict(params or {})
    if name == "one":
        return constant_one()
    if name == "liouville":
        return liouville()
    if name == "mobius":
        return mobius()
    if name == "character":
        return character(int(params["modulus"]), int(params.get("index", 0))).spec
    if name == "archimedean":
        return archimedean(float(params["t"]))
    if name == "mrt-phase":
        return mrt_phase_spec(float(params["s"]))
    if name == "mrt":
        return mrt_assemble(MRTScaleData(tuple(params["t"]), tuple(params["s"]), float(params.get("delta", 0.05)))).spec
    if name == "example":
        p = dict(params)
        return example_family(p.pop("id"), **p)
    if name in ("i", "ii", "iii", "iv", "v", "vi", "vii"):
        return example_family(name, **params)
    if name == "decomposed":
        from .pretentious import decompose

        base = from_json(params["base"])
        res = decompose(base, float(params["eps"]), int(params["P_max"]))
        return res.f1 if int(params["part"]) == 1 else res.f2
    raise ValueError(f"unknown builtin family {name!r}")


def to_json(spec: MultiplicativeSpec, rules_upto: int | None = None, max_s: int = 1) -> dict[str, Any]:
    """JSON descriptor; builtins export by name unless an explicit rule table is requested."""
    if spec.source is not None and rules_upto is None:
        return {"kind": spec.kind.value, "label": spec.label, **spec.source}
    if rules_upto is None:
        raise ValueError("spec has no builtin descriptor; pass rules_upto to export a table")
    rules = []
    for p in primes_up_to(rules_upto).tolist():
        for s in range(1, max_s + 1):
            v = spec.prime_power(p, s)
            rules.append({"p": p, "s": s, "re": v.real, "im": v.imag})
    return {"kind": spec.kind.value, "label": spec.label, "rules": rules}


def from_json(doc: dict[str, Any] | str) -> MultiplicativeSpec:
    if isinstance(doc, str):
        doc = json.loads(doc)
    if "builtin" in doc:
        return builtin(doc["builtin"], doc.get("params"))
    if "rules" not in doc:
        raise ValueError("family document needs 'builtin' or 'rules'")
    kind = Kind(doc.get("kind", Kind.MULTIPLICATIVE.value))
    table = {(int(r["p"]), int(r.get("s", 1))): complex(float(r["re"]), float(r.get("im", 0.0))) for r in doc["rules"]}
    for v in table.values():
        if abs(v) > 1 + 1e-12:
            raise ValueError("rule values must lie in the closed unit disc")
    return MultiplicativeSpec(kind, TableSpecRule(table, kind is Kind.COMPLETELY), doc.get("label", ""),
                              source=None)
