import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from treedyn.errors import ConfigError, InvalidDistribution, ShapeMismatch
from treedyn.measures import (EQUIVALENT, ORTHOGONAL, LevelDistribution, OmegaWord, OverridesMeasure,
                              PeriodicOverride, bernoulli, binomial_mass, entropy, haar, hellinger,
                              hellinger_affinity, kakutani_classify, measure_from_json, nonatomicity_certificate,
                              parse_rational, sample, sample_many, sm_typical_mass, sm_typical_set,
                              tail_equivalent, wlln_counts, wlln_set)
from treedyn.tree import BINARY, TreeShape, enumerate_level

probs = st.integers(1, 99).map(lambda k: (Fraction(100 - k, 100), Fraction(k, 100)))


def test_parse_rational_forms():
    assert parse_rational("2/3") == Fraction(2, 3)
    assert parse_rational(" 1 / 4 ") == Fraction(1, 4)
    assert parse_rational("0.25") == Fraction(1, 4)
    assert parse_rational(3) == 3


@pytest.mark.parametrize("bad", ["1/0", "x", True, None])
def test_parse_rational_rejects(bad):
    with pytest.raises(ConfigError):
        parse_rational(bad, "/p/0")


def test_distribution_invariants():
    with pytest.raises(InvalidDistribution):
        LevelDistribution.of("1/2", "1/3")
    with pytest.raises(InvalidDistribution):
        LevelDistribution.of("1", "0")
    assert LevelDistribution.uniform(3).is_uniform


@given(probs, st.integers(0, 8))
def test_cylinder_masses_sum_to_one(p, n):
    mu = bernoulli(*p)
    assert sum(mu.cylinder_measure(y) for y in enumerate_level(BINARY, n)) == 1


def test_affinity_closed_form():
    a = hellinger_affinity(LevelDistribution.of("1/2", "1/2"), LevelDistribution.of("1/4", "3/4"))
    assert a == pytest.approx(math.sqrt(1 / 8) + math.sqrt(3 / 8), abs=1e-15)
    assert a == pytest.approx(0.965926, abs=1e-6)


@given(probs, probs)
def test_hellinger_identity(p, q):
    a, b = LevelDistribution(p), LevelDistribution(q)
    assert hellinger(a, b) ** 2 == pytest.approx(1 - hellinger_affinity(a, b), abs=1e-12)
    assert hellinger_affinity(a, b) <= 1 + 1e-15


def test_kakutani_identical_and_orthogonal():
    assert kakutani_classify(haar(), haar()).verdict == EQUIVALENT
    r = kakutani_classify(haar(), bernoulli("1/4", "3/4"))
    assert r.verdict == ORTHOGONAL and r.evidence == "ClosedForm"
    assert r.period_factor == pytest.approx(0.9659258262890683, abs=1e-12)


def test_kakutani_finite_difference_set():
    base = haar()
    mu = OverridesMeasure(base, {3: LevelDistribution.of("1/3", "2/3"), 7: LevelDistribution.of("1/5", "4/5")})
    r = kakutani_classify(base, mu)
    assert r.verdict == EQUIVALENT
    assert r.difference_levels == (3, 7)


def test_kakutani_periodic_override_is_orthogonal():
    mu = OverridesMeasure(haar(), {}, PeriodicOverride(2, 5, LevelDistribution.of("1/3", "2/3")))
    assert kakutani_classify(haar(), mu).verdict == ORTHOGONAL


def test_kakutani_shape_mismatch():
    with pytest.raises(ShapeMismatch):
        kakutani_classify(haar(), haar(TreeShape.constant(3)))


def test_measure_json_pointer():
    with pytest.raises(ConfigError) as e:
        measure_from_json({"kind": "bernoulli", "p": ["1/2", "1/0"]}, BINARY, "/measures/mu")
    assert e.value.pointer == "/measures/mu/p/1"
    with pytest.raises(ConfigError) as e:
        measure_from_json({"kind": "nope"}, BINARY, "/m")
    assert e.value.pointer == "/m/kind"


def test_nonatomic():
    assert nonatomicity_certificate(bernoulli("2/3", "1/3")).certified


def test_sampling_is_seeded():
    mu = bernoulli("2/3", "1/3")
    assert sample(mu, 20, seed=5) == sample(mu, 20, seed=5)
    X = sample_many(mu, 10, 4000, seed=1)
    assert abs(X.mean() - 1 / 3) < 0.02


def test_typical_set_mass_matches_enumeration():
    mu = bernoulli("2/3", "1/3")
    for n in (6, 9):
        ys = sm_typical_set(mu, n, 0.1)
        assert mu.set_measure(ys) == sm_typical_mass(mu, n, 0.1)


def test_wlln_counts_match_enumeration():
    mu = haar()
    ys = wlln_set(mu, "1/3", 9, "1/10")
    counts = wlln_counts("1/3", 9, "1/10")
    assert sorted({sum(y) for y in ys}) == list(counts)
    assert mu.set_measure(ys) == binomial_mass(Fraction(1, 2), 9, counts)


def test_entropy():
    assert entropy(LevelDistribution.of("2/3", "1/3")) == pytest.approx(0.636514168, abs=1e-9)


def test_tail_equivalence():
    assert tail_equivalent(OmegaWord((1, 0, 1), 0), OmegaWord((), 0))
    assert not tail_equivalent(OmegaWord((), 0), OmegaWord((), 1))
