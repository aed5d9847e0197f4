import cmath
import itertools
import math

import numpy as np
import pytest

from multlab import families as F
from multlab.mfunc import evaluate_range, value_at, verify_multiplicativity


def brute_characters(m):
    """Every homomorphism from the units mod m to the phi(m)-th roots of unity, by exhaustion."""
    units = [r for r in range(m) if math.gcd(r, m) == 1]
    phi = len(units)
    roots = [cmath.exp(2j * math.pi * j / phi) for j in range(phi)]
    found = []
    for choice in itertools.product(roots, repeat=phi):
        vals = dict(zip(units, choice))
        if all(abs(vals[a * b % m] - vals[a] * vals[b]) < 1e-9 for a in units for b in units):
            found.append(vals)
    return found


def conductor_brute(vals, m):
    for d in range(1, m + 1):
        if m % d == 0 and all(abs(v - 1) < 1e-9 for r, v in vals.items() if r % d == 1 % d):
            return d


def test_character_mod3():
    c = F.character(3, 1)
    assert c.residue_values == (0, 1, -1)
    assert c.conductor == 3 and c.primitive


def test_character_mod1():
    c = F.character(1, 0)
    assert c.residue_values == (1,) and c.conductor == 1
    assert value_at(c.spec, 12) == 1


def test_characters_mod8_against_brute_force():
    brute = sorted(conductor_brute(v, 8) for v in brute_characters(8))
    ours = sorted(c.conductor for c in F.characters(8))
    assert ours == brute == [1, 4, 8, 8]


def test_orthogonality_and_multiplicativity():
    for m in range(1, 25):
        chars = F.characters(m)
        assert len(chars) == F.euler_phi(m)
        for a in chars:
            for r in range(m):
                assert (a.residue_values[r] == 0) == (math.gcd(r, m) > 1)
                for s in range(m):
                    assert abs(a.residue_values[r * s % m] - a.residue_values[r] * a.residue_values[s]) < 1e-12
            for b in chars:
                ip = sum(x * y.conjugate() for x, y in zip(a.residue_values, b.residue_values)) / m
                target = F.euler_phi(m) / m if a.index == b.index else 0
                assert abs(ip - target) < 1e-12


def test_conductor_induces_back():
    for m in (8, 12, 15, 16, 20, 24):
        for c in F.characters(m):
            q = c.conductor
            prim = next(p for p in F.characters(q)
                        if all(abs(p(r) - c(r)) < 1e-12 for r in range(m) if math.gcd(r, m) == 1))
            induced = [prim(r) if math.gcd(r, m) == 1 else 0 for r in range(m)]
            assert induced == list(c.residue_values)


def test_bad_index():
    with pytest.raises(ValueError):
        F.character(5, 4)


def test_example_families():
    iv = F.example_family("iv")
    assert value_at(iv, 4) == 0 and value_at(iv, 6) == 1
    tab = evaluate_range(iv, 5000)
    sqfree = [all(n % (p * p) for p in range(2, int(n**0.5) + 1)) for n in range(1, 5001)]
    assert np.array_equal(tab.values[1:] != 0, np.array(sqfree))
    assert value_at(F.example_family("i"), 8) == -1
    v = value_at(F.example_family("vi"), 15)
    assert abs(v - cmath.exp(2j * math.pi * 8 / 15)) < 1e-14
    assert value_at(F.example_family("vi", variant="1-1/p"), 3) == pytest.approx(2 / 3)
    assert value_at(F.example_family("vii"), 2) == 1
    assert value_at(F.example_family("ii", primes=[3, 7]), 21) == 1
    with pytest.raises(ValueError):
        F.example_family("ii")


def test_mrt_phase_spec():
    assert value_at(F.mrt_phase_spec(0), 30) == 1
    f = F.mrt_phase_spec(1000)
    assert value_at(f, 2) == pytest.approx(cmath.exp(1000j * math.log(2)), abs=1e-13)
    assert abs(value_at(f, 6) - cmath.exp(1000j * math.log(6))) < 1e-10
    tab = evaluate_range(f, 10**5)
    assert np.all(np.abs(np.abs(tab.values[1:]) - 1) < 1e-12)
    assert verify_multiplicativity(tab, 1000, 4).max_defect < 1e-10


def test_exponent_search():
    s = F.mrt_exponent_search([(2, 1)], 0.1, 1, 100)
    brute = next(x for x in range(1, 101) if abs(cmath.exp(1j * x * math.log(2)) - 1) <= 0.1)
    assert s == brute
    assert F.mrt_exponent_search([], 0.1, 17, 40) == 17
    assert F.mrt_exponent_search([(2, 1), (3, 1)], 1e-6, 1, 1000) is None


def test_mrt_assemble():
    single = F.mrt_assemble(F.MRTScaleData((1, 10**6), (1, 1000), 0.05))
    ref = F.mrt_phase_spec(1000)
    for p in (2, 3, 101, 999983):
        assert abs(single.spec.prime_power(p, 1) - ref.prime_power(p, 1)) < 1e-12
    with pytest.raises(ValueError):
        F.MRTScaleData((1, 10), (1, 4), 0.05)
    built = F.mrt_build(levels=2, delta=0.05)
    assert all(c.defect <= 0.05 for c in built.checks)


def test_json_round_trip():
    for spec in (F.example_family("ii", primes=[2, 5]), F.character(7, 2).spec, F.archimedean(0.5)):
        back = F.from_json(F.to_json(spec))
        assert all(abs(value_at(back, n) - value_at(spec, n)) < 1e-14 for n in range(1, 200))
    tabled = F.from_json(F.to_json(F.example_family("vi"), rules_upto=50))
    assert abs(value_at(tabled, 15) - cmath.exp(2j * math.pi * 8 / 15)) < 1e-14
    doc = {"kind": "multiplicative", "label": "t", "rules": [{"p": 3, "s": 1, "re": -1, "im": 0}]}
    assert value_at(F.from_json(doc), 9) == 1 and value_at(F.from_json(doc), 6) == -1
