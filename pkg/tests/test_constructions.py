import math
from fractions import Fraction

import pytest

from treedyn.cocycle import finitarity_report
from treedyn.constructions import (bifurcation_probe, orthogonal_pair_element, premise_report, separating_element,
                                   sm_elements, typical_count_set, verify_compatibility)
from treedyn.errors import ConditionFailed, SeparationNotFound
from treedyn.measures import (EQUIVALENT, ORTHOGONAL, OmegaWord, bernoulli, binomial_mass, haar,
                              kakutani_classify)
from treedyn.tree import BINARY, enumerate_level


def test_typical_count_set_size_matches_enumeration():
    p1 = Fraction(1, 3)
    for m in (8, 10):
        cs = typical_count_set(p1, m)
        members = [y for y in enumerate_level(BINARY, m) if cs.contains(y)]
        assert len(members) == cs.size()


def test_bifurcation_probe(B):
    c = sm_elements(B, (8, 16))
    h = c.data["entropy"]
    assert abs(h - 0.6365) < 1e-3
    pr = bifurcation_probe(c)
    plus = pr["plus"]["partial_sums"]
    minus = pr["minus"]["terms"]
    assert all(b > a for a, b in zip(plus, plus[1:]))
    assert all(b < a for a, b in zip(minus, minus[1:]))
    assert pr["plus"]["delta"] == pytest.approx(math.exp(-h) + 0.05)


def test_orthogonal_pair_stages():
    mu, nu = haar(), bernoulli("3/4", "1/4")
    c = orthogonal_pair_element(mu, nu)
    for s in c.data["stages"]:
        assert s["mu_mass"] > 1 - Fraction(1, 2 ** s["k"])
        assert s["nu_mass"] < Fraction(1, 2 ** s["k"])
        assert s["mu_mass"] == binomial_mass(Fraction(1, 2), s["n_k"], s["counts"])
    g = c.elements["g"]
    assert finitarity_report(g, nu, horizon=6, bullet=False).verdict("mu_finitary").holds is True
    assert finitarity_report(g, mu, horizon=6, bullet=False).verdict("mu_finitary").holds is False


def test_orthogonal_pair_needs_orthogonal_measures():
    with pytest.raises(SeparationNotFound):
        orthogonal_pair_element(haar(), haar())


def test_separating_element_verdicts():
    c = separating_element("1/3")
    g = c.elements["g"]
    assert [s["n_k"] for s in c.data["stages"]] == [19, 969]
    theta = finitarity_report(g, bernoulli("2/3", "1/3"), horizon=6, bullet=False).verdict("mu_finitary")
    other = finitarity_report(g, bernoulli("1/3", "2/3"), horizon=6, bullet=False).verdict("mu_finitary")
    assert theta.holds is True and other.holds is False
    for s in c.data["stages"]:
        assert s["theta_mass"] > 1 - Fraction(1, s["k"] ** 2)


def test_family_index_set(family):
    assert family.index_set == [2, 11, 23]
    assert family.step == 12
    for st in family.stages:
        assert st.worst_relative_mass > st.bound
    assert [float(st.bound) for st in family.stages] == pytest.approx([0.9, 0.99, 0.999])


def test_family_measure_levels(family):
    lw = family.measure(OmegaWord((), 0))
    nonuniform = [n for n in range(1, 60) if not lw.level(n).is_uniform]
    assert nonuniform == [2, 11, 23, 35, 47, 59]


@pytest.mark.parametrize("omega", [OmegaWord((), 0), OmegaWord((), 1), OmegaWord((1,), 0), OmegaWord((0, 1), 0)])
def test_verify_compatibility(G, family, omega):
    assert verify_compatibility(G, family.measure(omega), family).ok


def test_verify_compatibility_rejects_missing_dirty_words(G, family, lam0):
    st = family.stages[1]
    y, y2 = st.worst_pair
    assert family.view(2).dirty(y, y2)
    with pytest.raises(ConditionFailed):
        verify_compatibility(G, lam0, family, stages=[2], overrides={(2, y, y2): []})


def test_verify_compatibility_rejects_wrong_measure(G, family):
    with pytest.raises(ConditionFailed):
        verify_compatibility(G, bernoulli("2/3", "1/3"), family)


def test_lambda_omega_kakutani(family, H):
    lw = lambda w, t: family.measure(OmegaWord(w, t))
    assert kakutani_classify(lw((), 0), lw((1,), 0)).verdict == EQUIVALENT
    assert kakutani_classify(lw((), 0), lw((0, 1), 0)).verdict == EQUIVALENT
    assert kakutani_classify(lw((), 0), lw((), 1)).verdict == ORTHOGONAL
    assert kakutani_classify(lw((), 0), H).verdict == ORTHOGONAL


def test_premises(G):
    rep = premise_report(G, (("1/3", "2/3"), ("2/3", "1/3")))
    assert rep["separated"] and all(rep["nonatomic"].values())
