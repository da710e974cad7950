import numpy as np
import pytest

from conftest import gri_word
from treedyn.automorphism import apply_prefix
from treedyn.constructions import grigorchuk_rigid_candidates, parity_group
from treedyn.groups import (GeneratedGroup, ball, find_transporter, invariant_distribution_dimension,
                            level_orbit_partition, minimality_check, rigid_stabilizer_elements, supported_in)
from treedyn.tree import BINARY, enumerate_level, level_size


@pytest.mark.parametrize("n", range(1, 7))
def test_grigorchuk_transitive_with_checked_witnesses(G, n):
    res = minimality_check(G, n)
    assert res.transitive
    root = (0,) * n
    for y, w in res.witnesses.items():
        # witness maps 0^n to y; check with the independent oracle
        letters = "".join(name for name, _ in w.letters)
        assert gri_word(letters, root) == y


@pytest.mark.parametrize("n", range(1, 6))
def test_parity_transitive(n):
    P = parity_group(6)
    res = minimality_check(P, n)
    assert res.transitive
    for y, w in res.witnesses.items():
        assert apply_prefix(P.evaluate(w), (0,) * n) == y


def test_parity_not_transitive_past_span():
    # even-sum flips on 6 coordinates only: two orbits at level 7 and beyond
    P = parity_group(6)
    assert not minimality_check(P, 7).transitive


def test_single_generator_is_not_transitive(G):
    Gb = GeneratedGroup({"b": G.generators["b"]}, BINARY)
    res = minimality_check(Gb, 1)
    assert not res.transitive
    assert len(level_orbit_partition(Gb, 1)) == 2


@pytest.mark.parametrize("n", range(1, 6))
def test_unique_uniform_invariant_distribution(G, n):
    dim, basis = invariant_distribution_dimension(G, n)
    assert dim == 1
    v = basis[:, 0] / basis[:, 0].sum()
    assert np.allclose(v, 1 / level_size(BINARY, n), atol=1e-10)


def test_ball_sizes(G):
    # reduced words in a, b, c, d with a not adjacent to itself etc.
    assert [len(ball(G, r)) for r in range(4)] == [1, 5, 11, 23]


def test_find_transporter(G):
    y, y2 = (0, 1, 1), (1, 0, 1)
    w = find_transporter(G, y, y2)
    assert apply_prefix(G.evaluate(w), y) == y2


def test_rigid_candidates_supported(G):
    cand = grigorchuk_rigid_candidates(5)
    for m, w in cand.items():
        assert supported_in(G.evaluate(w), (1,) * m)


def test_rigid_stabilizer_search(G):
    ws = rigid_stabilizer_elements(G, (1,), 4)
    assert ws
    for w in ws:
        g = G.evaluate(w)
        assert supported_in(g, (1,))
        assert all(apply_prefix(g, y)[0] == y[0] for y in enumerate_level(BINARY, 4))
