import itertools

import pytest
from hypothesis import given, strategies as st

from treedyn.errors import CapExceeded, ConfigError
from treedyn.tree import (BINARY, BoundaryPoint, TreeShape, enumerate_level, from_external, index_prefix,
                          is_prefix_of, is_valid_prefix, level_size, prefix_index, to_external)

shapes = st.builds(lambda h, t: TreeShape(tuple(h), tuple(t)),
                   st.lists(st.integers(2, 4), max_size=3), st.lists(st.integers(2, 4), min_size=1, max_size=3))


def test_level_size_mixed_shape():
    s = TreeShape((3,), (2, 5))
    assert [level_size(s, n) for n in range(5)] == [1, 3, 6, 30, 60]


def test_level_size_is_exact_for_deep_levels():
    assert level_size(BINARY, 200) == 2 ** 200


def test_arity_rejects_small():
    with pytest.raises(Exception):
        TreeShape((), (1,))


@given(shapes, st.integers(0, 6))
def test_enumeration_matches_product(shape, n):
    ys = enumerate_level(shape, n)
    assert len(ys) == level_size(shape, n)
    assert ys == sorted(ys)
    assert ys == list(itertools.product(*(range(shape.arity(i)) for i in range(1, n + 1))))


@given(shapes, st.integers(0, 7), st.data())
def test_prefix_index_roundtrip(shape, n, data):
    i = data.draw(st.integers(0, level_size(shape, n) - 1))
    y = index_prefix(shape, i, n)
    assert is_valid_prefix(shape, y)
    assert prefix_index(shape, y) == i


def test_cap_is_enforced():
    with pytest.raises(CapExceeded):
        enumerate_level(BINARY, 12, cap=1000)


def test_external_labels():
    assert to_external((0, 1, 1)) == (1, 2, 2)
    assert from_external(to_external((1, 0))) == (1, 0)


def test_prefix_relation():
    assert is_prefix_of((), (1, 0))
    assert is_prefix_of((1,), (1, 0))
    assert not is_prefix_of((0,), (1, 0))


def test_boundary_point_letters():
    x = BoundaryPoint(BINARY, (0, 1), (1, 0))
    assert [x.letter(n) for n in range(1, 8)] == [0, 1, 1, 0, 1, 0, 1]


def test_shape_json_errors_carry_pointer():
    with pytest.raises(ConfigError) as e:
        TreeShape.from_json({"arities": {"tail_period": [1]}}, "/shape")
    assert e.value.pointer == "/shape/arities/tail_period/0"
