import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import gri_word
from treedyn.automorphism import (Identity, apply_prefix, changed_levels, compose, equal_exact, equal_to_depth,
                                  flip_portrait, invert, level_table, machine_from_json, portrait,
                                  portrait_from_json, portrait_to_json, translation_vector)
from treedyn.constructions import grigorchuk_relations
from treedyn.errors import ConfigError
from treedyn.tree import BINARY, enumerate_level, prefix_index

words = st.text("abcd", min_size=0, max_size=7)


def test_relations_exact(G):
    rel = grigorchuk_relations(G)
    assert all(rel.values()), rel


def test_nontrivial_elements_are_not_identity(G):
    e = Identity(BINARY)
    for w in ("a", "b", "ab", "ad", "adad"):
        assert not equal_exact(G.evaluate(w), e)
    # with b = (e, d) the element ab has order 4 and ad has order 16
    assert equal_exact(G.evaluate("ab" * 4), e)
    assert not equal_exact(G.evaluate("ad" * 8), e)
    assert equal_exact(G.evaluate("ad" * 16), e)


@settings(max_examples=60, deadline=None)
@given(words)
def test_level_tables_match_recursive_oracle(G, w):
    g = G.evaluate(w) if w else Identity(BINARY)
    n = 7
    t = level_table(g, n)
    for y in enumerate_level(BINARY, n):
        assert t[prefix_index(BINARY, y)] == prefix_index(BINARY, gri_word(w, y))


@settings(max_examples=40, deadline=None)
@given(words, words)
def test_composition_order(G, u, v):
    g, h = G.evaluate(u or "1"), G.evaluate(v or "1")
    y = (0, 1, 1, 0, 1, 1, 1, 0)
    assert apply_prefix(compose(g, h), y) == apply_prefix(g, apply_prefix(h, y))


@settings(max_examples=40, deadline=None)
@given(words)
def test_inverse_is_exact(G, w):
    g = G.evaluate(w or "1")
    assert equal_exact(compose(g, invert(g)), Identity(BINARY))


@given(st.dictionaries(st.integers(1, 10), st.just(True), max_size=4))
def test_flip_translation_vector(levels):
    g = flip_portrait(BINARY, levels)
    assert sorted(changed_levels(g, 12)) == sorted(levels)
    v = translation_vector(g, 12)
    assert [i + 1 for i, p in enumerate(v) if p != (0, 1)] == sorted(levels)


def test_portrait_json_roundtrip():
    g = portrait(BINARY, [1, 0], {1: portrait(BINARY, [1, 0], {}, 1)})
    obj = portrait_to_json(g)
    assert obj == {"perm": [2, 1], "children": {"2": {"perm": [2, 1], "children": {}}}}
    h = portrait_from_json(BINARY, obj)
    assert equal_to_depth(g, h, 6)


def test_portrait_json_bad_perm():
    with pytest.raises(ConfigError) as e:
        portrait_from_json(BINARY, {"perm": [1, 1]})
    assert e.value.pointer == "/perm"


def test_machine_json():
    m, s = machine_from_json({"states": [{"perm": [1, 2], "next": [0, 0]}, {"perm": [2, 1], "next": [0, 0]}],
                              "start": 1})
    a = m.state(s, BINARY)
    assert apply_prefix(a, (0, 0)) == (1, 0)
    with pytest.raises(ConfigError) as e:
        machine_from_json({"states": [{"perm": [1, 2], "next": [0, 5]}]})
    assert e.value.pointer == "/states/0/next"


def test_level_tables_are_permutations(G):
    for w in ("abcd", "dcab", "acab"):
        t = level_table(G.evaluate(w), 9)
        assert np.array_equal(np.sort(t), np.arange(512))
