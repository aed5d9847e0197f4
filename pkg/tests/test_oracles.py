import json
import math
import random

import pytest
from hypothesis import given, settings, strategies as st

from multlab import oracles as O

# integral_0^1 exp(i beta x^-d) dx, computed once with mpmath (30 digits, quadosc on the
# substituted integral) and frozen here
REFERENCE = {
    (1.0, 1): complex(-0.084410950559573887, 0.50406706190692837),
    (2.0, 1): complex(-0.34691353653154593, 0.063335769275951704),
    (1.0, 2): complex(-0.09247522800059833, 0.28573664632285259),
    (0.5, 2): complex(0.15506968381331529, 0.39036477585661647),
    (3.0, 3): complex(-0.045130413032562496, -0.085912426349658903),
}


@pytest.mark.parametrize("key", sorted(REFERENCE))
def test_oscillatory_integral_matches_frozen_reference(key):
    beta, d = key
    assert abs(O.oscillatory_integral(beta, d, 1e-10) - REFERENCE[key]) < 1e-10


def test_oscillatory_integral_edge_cases():
    assert O.oscillatory_integral(0, 1) == 1
    assert O.oscillatory_integral(-1.0, 2) == O.oscillatory_integral(1.0, 2).conjugate()
    assert abs(O.oscillatory_integral(1e-9, 1) - 1) < 1e-6
    big = O.oscillatory_integral(1e4, 1)
    # leading integration-by-parts term: i e^{i beta} / beta
    assert abs(big - 1j * complex(math.cos(1e4), math.sin(1e4)) / 1e4) < 3e-8
    with pytest.raises(ValueError):
        O.oscillatory_integral(1, 1, tol=1e-2)


@given(st.floats(-50, 50, allow_nan=False), st.integers(1, 4))
@settings(max_examples=40, deadline=None)
def test_oscillatory_integral_bounded_and_conjugate(beta, d):
    v = O.oscillatory_integral(beta, d)
    assert abs(v) <= 1 + 1e-12
    assert v == O.oscillatory_integral(-beta, d).conjugate() or beta == 0


def test_riemann_oracle_cauchy_and_agreement():
    vals = [O.riemann_oracle(1, 1, M) for M in (100_000, 200_000, 400_000, 800_000, 1_600_000,
                                                  3_200_000, 6_400_000, 10_000_000)]
    assert all(abs(b - a) <= 1e-3 for a, b in zip(vals, vals[1:]))
    assert abs(vals[-1] - O.oscillatory_integral(1, 1, 1e-8)) <= 1e-4
    assert O.riemann_oracle(0, 2, 1000) == 1


def test_min_index_examples():
    assert O.min_index_i0((-1, 1), (0, 1)) == 1
    assert O.min_index_i0((1, -2, 1), (0, 1, 2)) == 2
    assert O.min_index_i0((1, -1), (3, 3)) == math.inf
    assert O.min_index_i0((1,), (7,)) == 0


def test_log_limit_examples():
    assert O.mrt_log_limit(0.5, (-1, 1), (0, 5)) == 0.5
    assert O.mrt_log_limit(3, (-1, 1), (0, 1)) == 0
    assert O.mrt_log_limit(1.5, (1, -2, 1), (0, 1, 2)) == 0.25
    assert O.mrt_log_limit(0.7, (2, -2), (4, 4)) == 1


def test_band_and_unipotent_examples():
    assert O.mrt_cesaro_band_limit(1, (-1, 1), (0, 1)) == 0
    assert O.mrt_cesaro_band_limit(1, (1, -2, 1), (0, 1, 2)) == 1
    assert O.mrt_cesaro_band_limit(0, (1,), (7,)) == 0
    assert O.unipotent_integral(1, (1, -2, 1), (0, 1, 2)) == 1
    assert O.unipotent_integral(1, (-1, 1), (0, 1)) == 0


def test_alpha_limit_cases():
    assert O.mrt_cesaro_alpha_limit(1, 2, (-1, 1), (0, 1)).to_dict()["kind"] == "exact-scalar"
    p = O.mrt_cesaro_alpha_limit(1, 1, (-1, 1), (0, 1))
    assert p.beta == 1 and set(p.variants.values()) == {1.0}
    q = O.mrt_cesaro_alpha_limit(1, 2, (1, -2, 1), (0, 1, 2))
    assert (q.exponent_A, q.exponent_B) == (2, 1)
    assert q.discrepancy
    assert q.variants["taylor"] == -1.0


def test_exponent_variant_arbitration():
    # a direct sum of n^{is} correlations decides between the exponent variants
    r = O.arbitrate_variants(1e12, 1.0, 2, (1, -2, 1), (0, 1, 2))
    assert r["best"] in ("taylor", "B_signed")
    assert r["defects"]["taylor"] < 1e-3
    assert r["defects"]["A"] > 0.1 and r["defects"]["B"] > 0.1
    r3 = O.arbitrate_variants(1e15, 1.0, 3, (-1, 3, -3, 1), (0, 1, 2, 3))
    assert r3["best"] == "taylor" and r3["defects"]["taylor"] < 2e-3


def test_mixture_examples_and_weights():
    assert O.mixture_limit(1.3, (1, -1), (2, 2)) == pytest.approx(1, abs=1e-12)
    assert O.mixture_limit(0.5, (-1, 1), (0, 1)) == pytest.approx(0.5, abs=1e-12)
    assert O.mixture_limit(2.5, (1, -2, 1), (0, 1, 2)) == 0
    for c in (0.3, 1, 2.7):
        assert O.MixtureWeights.build(c).total == pytest.approx(1, abs=1e-12)


def random_pattern(rng):
    ell = rng.randint(1, 4)
    return [rng.randint(-3, 3) for _ in range(ell)], [rng.randint(-5, 5) for _ in range(ell)]


def test_mixture_identity_grid():
    rng = random.Random(11)
    pats = [random_pattern(rng) for _ in range(1000)]
    for c in (0.3, 0.5, 1, 1.5, 2, 2.7, 4):
        for k, n in pats:
            assert abs(O.mixture_limit(c, k, n) - O.mrt_log_limit(c, k, n)) <= 1e-12


def test_unipotent_equals_band_limit():
    rng = random.Random(12)
    for _ in range(1000):
        k, n = random_pattern(rng)
        d = rng.randint(0, 5)
        assert O.unipotent_integral(d, k, n) == O.mrt_cesaro_band_limit(d, k, n)


def test_dilation_invariance():
    rng = random.Random(13)
    for _ in range(1000):
        k, n = random_pattern(rng)
        r = rng.randint(1, 6)
        c = rng.choice([0.3, 0.5, 1, 1.5, 2.7])
        assert O.min_index_i0(k, [r * x for x in n]) == O.min_index_i0(k, n)
        assert O.mrt_log_limit(c, k, [r * x for x in n]) == O.mrt_log_limit(c, k, n)


def test_prediction_json_round_trip():
    for p in (O.exact(0.25), O.mrt_cesaro_alpha_limit(0.7, 2, (1, -2, 1), (0, 1, 2))):
        doc = json.loads(json.dumps(p.to_dict()))
        assert O.LimitPrediction.from_dict(doc) == p
    doc = O.mrt_cesaro_alpha_limit(1, 2, (1, -2, 1), (0, 1, 2)).to_dict()
    assert {"beta", "d", "exponent_variantA", "exponent_variantB"} <= set(doc)
