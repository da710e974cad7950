import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from treedyn.automorphism import Identity, compose, level_table
from treedyn.constructions import grigorchuk_rigid_candidates
from treedyn.errors import NotDepthCompatible
from treedyn.koopman import (commutator_defect, cylinder_masses, depth_compatibility_witness, fixed_space,
                             function_coefficients, homomorphism_defect, koopman_coefficient, koopman_matrix,
                             level_filtration_check, level_projectors, rigid_fixed_space, rigidity_trace,
                             section_affinity, unitarity_defect, weak_containment_experiment)
from treedyn.tree import BINARY

words = st.text("abcd", min_size=1, max_size=6)


def brute_coefficient(g, mu, f, r, d, D):
    """sum over depth-D cylinders z of f(z|d) r(gz|d) sqrt(mu[z] mu[gz])."""
    t = level_table(g, D)
    m = np.array([float(x) for x in cylinder_masses(mu, D)])
    idx = np.arange(2 ** D)
    fz = np.asarray(f)[idx >> (D - d)]
    rz = np.asarray(r)[t >> (D - d)]
    return float(np.sum(fz * rz * np.sqrt(m * m[t])))


def test_generator_a_is_a_permutation(G, B):
    M = koopman_matrix(G.generators["a"], B, 1)
    assert np.array_equal(M.matrix, [[0, 1], [1, 0]])
    assert M.indicator_matrix() == pytest.approx(np.array([[0, math.sqrt(1 / 2)], [math.sqrt(2), 0]]))
    assert M.entry_squared(1, 0) == 2


def test_non_level_preserving_element_is_rejected(G, B):
    with pytest.raises(NotDepthCompatible) as e:
        koopman_matrix(G.generators["b"], B, 3)
    w = e.value.witness
    assert depth_compatibility_witness(G.generators["b"], B, 3) == w


@settings(max_examples=40, deadline=None)
@given(words, words)
def test_unitary_and_multiplicative_under_haar(G, H, u, v):
    g, h = G.evaluate(u), G.evaluate(v)
    Mg, Mh, Mgh = (koopman_matrix(x, H, 5) for x in (g, h, compose(g, h)))
    assert unitarity_defect(Mg) <= 1e-12
    assert homomorphism_defect(Mg, Mh, Mgh) <= 1e-12


def test_corrupted_entry_is_detected(G, H):
    Mg = koopman_matrix(G.evaluate("ab"), H, 4)
    Mh = koopman_matrix(G.evaluate("ca"), H, 4)
    Mgh = koopman_matrix(G.evaluate("abca"), H, 4)
    bad = Mg.matrix.copy()
    j = int(np.argmax(bad[:, 0]))
    bad[j, 0] = 0.9
    assert unitarity_defect(bad) > 1e-3
    assert homomorphism_defect(bad, Mh.matrix, Mgh.matrix) > 1e-3


def test_level_filtration(G):
    rep = level_filtration_check(G, 5)
    assert rep.ok()


def test_filtration_rejects_non_tree_permutation():
    P = level_projectors(2, 4)
    perm = np.eye(16)[[1, 2, 3, 0] + list(range(4, 16))]
    assert max(commutator_defect(perm, p) for p in P) > 0.1


def test_rigid_fixed_space(G, H):
    rep = rigid_fixed_space(G, (1,), H, 5)
    assert rep.outside_fixed
    assert rep.dimension >= rep.outside_count == 16


def test_fixed_space_of_identity():
    fs = fixed_space([np.eye(4)])
    assert fs.dimension == 4


@pytest.mark.parametrize("w", ["b", "ad", "cab"])
def test_coefficient_matches_deep_brute_force(G, B, w):
    g = G.evaluate(w)
    rng = np.random.default_rng(len(w))
    f, r = rng.random(8), rng.random(8)
    val, err = koopman_coefficient(g, B, f, r, 3)
    assert err < 1e-12
    assert val == pytest.approx(brute_coefficient(g, B, f, r, 3, 18), abs=1e-7)


def test_coefficient_agrees_with_matrix(G, lam0):
    g = G.evaluate("b")
    rng = np.random.default_rng(0)
    f, r = rng.random(64), rng.random(64)
    M = koopman_matrix(g, lam0, 6)
    want = (M.matrix @ function_coefficients(f, lam0, 6)) @ function_coefficients(r, lam0, 6)
    assert koopman_coefficient(g, lam0, f, r, 6)[0] == pytest.approx(want, abs=1e-14)


def test_affinity_bounds(G, B):
    assert section_affinity(Identity(BINARY), B, 0) == (1.0, 1.0)
    lo, hi = section_affinity(G.generators["a"], B, 0)
    assert 0 < lo <= hi <= 1
    assert lo == pytest.approx(2 * math.sqrt(2 / 9), abs=1e-15)


@pytest.mark.parametrize("which", ["H", "lam0"])
def test_rigidity_trace(G, which, request):
    mu = request.getfixturevalue(which)
    d = 6
    ones = np.ones(2 ** d)
    tr = rigidity_trace(G, mu, ones, ones, [(1,) * m for m in range(1, d + 1)], d,
                        candidates=grigorchuk_rigid_candidates(d))
    assert tr.ok
    for s in tr.steps:
        assert s.value <= 2 * math.sqrt(s.mass) + 1e-12


def test_weak_containment(G, H, B, lam0):
    rep = weak_containment_experiment(G, ["a", "b"], H, lam0, [0, 1], 1)
    assert rep.ok and rep.agreement <= 1e-12
    assert max(rep.differences.values()) < 2 * rep.C ** 2 * rep.eps
    neg = weak_containment_experiment(G, ["a", "b"], H, B, [0, 1], 1, use_phi=False)
    assert not neg.ok
