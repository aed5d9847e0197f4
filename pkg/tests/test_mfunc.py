import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from multlab import families as F
from multlab.mfunc import (
    CapacityError,
    Kind,
    MultiplicativeSpec,
    build_spf,
    completely_multiplicative,
    evaluate_range,
    evaluate_segment,
    factorize,
    load_spf,
    primes_up_to,
    save_spf,
    value_at,
    verify_multiplicativity,
)


def spf_by_trial(n):
    return next(p for p in range(2, n + 1) if n % p == 0)


def test_spf_small():
    t = build_spf(10)
    assert {n: int(t.spf[n]) for n in range(2, 11)} == {2: 2, 3: 3, 4: 2, 5: 5, 6: 2, 7: 7, 8: 2, 9: 3, 10: 2}
    assert int(build_spf(2).spf[2]) == 2


def test_spf_large_prime_and_samples():
    t = build_spf(10**7)
    assert int(t.spf[9999991]) == 9999991
    rng = np.random.default_rng(0)
    for n in rng.integers(2, 10**7, 300).tolist():
        assert int(t.spf[n]) == spf_by_trial(n)


def test_spf_cap():
    with pytest.raises(CapacityError):
        build_spf(1000, cap=100)


def test_spf_cache_round_trip(tmp_path):
    t = build_spf(5000)
    path = tmp_path / "spf.bin"
    save_spf(t, path)
    assert path.stat().st_size == 6 + 8 + 4 * (5000 - 1)
    back = load_spf(path, 5000)
    assert np.array_equal(back.spf[2:], t.spf[2:])
    path.write_bytes(b"XXXXXX" + path.read_bytes()[6:])
    with pytest.raises(ValueError):
        load_spf(path)


def test_evaluate_examples():
    liou = F.liouville()
    assert evaluate_range(liou, 20)[12] == -1
    ex3 = F.example_family("iii")
    vals = evaluate_range(ex3, 20)
    assert vals[9] == -1 and vals[7] == 1
    arch = F.archimedean(1.0)
    assert abs(value_at(arch, 2) - cmath.exp(1j * math.log(2))) < 1e-15


def test_value_at_examples():
    chi4 = F.character(4, 1)
    assert chi4(3) == -1 and value_at(chi4.spec, 9) == 1
    vi = F.example_family("vi")
    assert abs(value_at(vi, 6) - cmath.exp(2j * math.pi / 2) * cmath.exp(2j * math.pi / 3)) < 1e-15
    for spec in (vi, F.mobius(), chi4.spec):
        assert value_at(spec, 1) == 1


def random_unit_spec(seed):
    rng = np.random.default_rng(seed)
    table = {int(p): complex(np.exp(2j * np.pi * rng.random())) for p in primes_up_to(10**5)}

    def prime_rule(p):
        return np.array([table[int(x)] for x in np.atleast_1d(p)], dtype=np.complex128)

    return completely_multiplicative(prime_rule, "random unit")


def test_sieve_and_factorisation_agree():
    spec = random_unit_spec(3)
    N = 10**5
    tab = evaluate_range(spec, N)
    rng = np.random.default_rng(5)
    for n in rng.integers(1, N + 1, 1000).tolist():
        assert abs(tab[n] - value_at(spec, n)) <= 1e-12
    assert np.all(np.abs(tab.values[1:]) <= 1 + 1e-12)


def test_segment_matches_table():
    spec = F.mobius()
    tab = evaluate_range(spec, 300_000)
    seg = evaluate_segment(spec, 200_001, 300_000, primes_up_to(600))
    assert np.array_equal(seg, tab.values[200_001:300_001])


def test_verify_multiplicativity():
    assert verify_multiplicativity(evaluate_range(F.liouville(), 10**4), 500, 1).max_defect == 0
    alt = MultiplicativeSpec(Kind.MULTIPLICATIVE,
                             lambda p, s: np.where(np.asarray(p) == 2, -1.0, 1.0).astype(complex), "alt")
    tab = evaluate_range(alt, 10**4)
    assert tab[7] == 1 and tab[8] == -1
    assert verify_multiplicativity(tab, 500, 2).max_defect == 0
    assert verify_multiplicativity(evaluate_range(random_unit_spec(9), 10**5), 1000, 3).max_defect <= 1e-12


@given(st.integers(2, 10**9))
@settings(max_examples=100, deadline=None)
def test_factorize_round_trip(n):
    assert math.prod(p**e for p, e in factorize(n)) == n
