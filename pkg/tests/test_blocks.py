import itertools
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from treedyn.automorphism import flip_portrait
from treedyn.constructions import (conservative_nonergodic_group, dissipative_group, invariance_check,
                                   rn_flip_bound, saturation_disjoint, wandering_check,
                                   weakly_branch_nonergodic_group)
from treedyn.constructions.blocks import (BlockConstraint, ProductSet, branch_flips, flipped_coords,
                                          least_block_length, minority_mass, product_check, rigid_witnesses)
from treedyn.groups import GeneratedGroup
from treedyn.measures import bernoulli
from treedyn.tree import BINARY


def word_mass(w, p1):
    ones = sum(w)
    return p1 ** ones * (1 - p1) ** (len(w) - ones)


@st.composite
def product_sets(draw, depth=None):
    depth = depth or draw(st.integers(2, 8))
    cuts = sorted(draw(st.sets(st.integers(1, depth - 1), max_size=3)))
    edges = [0] + cuts + [depth]
    blocks = []
    for lo, hi in zip(edges, edges[1:]):
        coords = tuple(range(lo + 1, hi + 1))
        counted = tuple(c for c in coords if draw(st.booleans()))
        rest = [c for c in coords if c not in counted]
        fixed = tuple((c, draw(st.integers(0, 1))) for c in rest if draw(st.booleans()))
        blocks.append(BlockConstraint(coords, counted, fixed))
    return ProductSet(depth, blocks)


def relayout(S, T):
    """T's counted and fixed coordinates redistributed onto S's blocks."""
    counted = {c for t in T.blocks for c in t.counted}
    fixed = dict(f for t in T.blocks for f in t.fixed)
    return ProductSet(S.depth, [BlockConstraint(b.coords, tuple(c for c in b.coords if c in counted),
                                                tuple((c, fixed[c]) for c in b.coords if c in fixed))
                                for b in S.blocks])


p1s = st.sampled_from([Fraction(1, 3), Fraction(1, 2), Fraction(2, 5)])


@settings(max_examples=80, deadline=None)
@given(product_sets(), p1s)
def test_mass_matches_enumeration(S, p1):
    brute = sum(word_mass(w, p1) for w in itertools.product((0, 1), repeat=S.depth) if S.contains(w))
    assert S.mass(p1) == brute


@settings(max_examples=80, deadline=None)
@given(st.data(), p1s)
def test_flipped_meet_matches_enumeration(data, p1):
    S = data.draw(product_sets())
    T = data.draw(product_sets(S.depth))
    if [b.coords for b in S.blocks] != [b.coords for b in T.blocks]:
        T = relayout(S, T)
    flips = data.draw(st.sets(st.integers(1, S.depth)))
    brute = Fraction(0)
    for w in itertools.product((0, 1), repeat=S.depth):
        fw = tuple(1 - v if i + 1 in flips else v for i, v in enumerate(w))
        if S.contains(w) and T.contains(fw):
            brute += word_mass(w, p1)
    assert S.meet_flipped_mass(T, flips, p1) == brute


def test_minority_mass_small():
    assert minority_mass(Fraction(1, 3), 1) == Fraction(2, 3)
    assert minority_mass(Fraction(1, 3), 2) == Fraction(4, 9)
    assert minority_mass(Fraction(1, 3), 3) == Fraction(20, 27)


def test_least_block_length_is_least():
    p1, eps = Fraction(1, 3), Fraction(1, 16)
    n = least_block_length(p1, eps)
    assert 1 - minority_mass(p1, n) < eps
    assert all(1 - minority_mass(p1, m) >= eps for m in range(1, n))


def test_wandering_negative_control():
    Y = ProductSet(4, [BlockConstraint((1, 2, 3), (1, 2, 3))])
    free_flip = GeneratedGroup({"g": flip_portrait(BINARY, {4: True})}, BINARY)
    assert not wandering_check(free_flip, Y, radius=1).ok
    block_flip = GeneratedGroup({"g": flip_portrait(BINARY, {1: True, 2: True, 3: True})}, BINARY)
    assert wandering_check(block_flip, Y, radius=1).ok


def test_flipped_coords():
    assert flipped_coords(flip_portrait(BINARY, {2: True, 5: True}), 8) == frozenset({2, 5})


@pytest.fixture(scope="module")
def ex45(B):
    return conservative_nonergodic_group(B)


def test_dissipative_schedule_and_bound(B):
    c = dissipative_group(B)
    d = c.data["blocks"]
    assert d.schedule == [1, 6, 17, 38, 67]
    assert 0 < d.mass_lower_bound <= d.Y.mass(d.p1)
    assert float(d.mass_lower_bound) == pytest.approx(0.6148, abs=1e-4)
    assert wandering_check(c.group, d.Y, radius=3).ok


def test_conservative_checks(ex45, B):
    d = ex45.data["blocks"]
    A, Bset = d.extra["A"], d.extra["B"]
    assert invariance_check(ex45.data["H"].generators, d.Y).ok
    assert not invariance_check(ex45.data["G"].generators, d.Y).ok
    assert saturation_disjoint(ex45.data["G"], A, Bset).ok
    assert d.extra["A_mass"] > 0 and d.extra["B_mass"] > 0
    assert d.extra["A_mass"] + d.extra["B_mass"] == d.Y.mass(d.p1)


def test_corrupted_A_set_is_caught(ex45):
    d = ex45.data["blocks"]
    Bset = d.extra["B"]
    # A replaced by the whole of Ytilde overlaps B
    assert not saturation_disjoint(ex45.data["G"], d.Y, Bset, radius=1).ok


def test_rn_flip_bound(ex45, B):
    r = rn_flip_bound(ex45.data["H"].generators, B)
    assert r.ok and r.minimum == r.bound == Fraction(1, 2)
    two = {"g": flip_portrait(BINARY, {1: True, 2: True})}
    assert not rn_flip_bound(two, B).ok


def test_weakly_branch_flips(B):
    c = weakly_branch_nonergodic_group(B)
    flips = branch_flips(c, 1)
    assert len(flips) == 2 ** c.data["blocks"].schedule[1]
    assert all(ok for _, ok in rigid_witnesses(c, 1))
    assert product_check(c, 1)
    assert rn_flip_bound(flips, B).ok
