"""Index arithmetic for spherically homogeneous rooted trees.

Letters are stored 0-based: level ``n`` (1-based) carries letters
``0..q_n-1``.  Anything written to files or printed by the CLI goes through
:func:`to_external`, which shifts to the 1-based alphabet ``1..q_n``.  For the
binary corpus the internal alphabet coincides with the usual ``{0, 1}``.

A prefix is a plain tuple of ints.  The empty tuple is the root.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

from .errors import CapExceeded, ConfigError

DEFAULT_CAP = 2 ** 22

Prefix = tuple


@dataclass(frozen=True)
class TreeShape:
    """Arity sequence ``q_1, q_2, ...``: a finite head, then a periodic tail."""

    head: tuple = ()
    tail_period: tuple = (2,)

    def __post_init__(self):
        object.__setattr__(self, "head", tuple(int(q) for q in self.head))
        object.__setattr__(self, "tail_period", tuple(int(q) for q in self.tail_period))
        if not self.tail_period:
            raise ValueError("tail period must be nonempty")
        if any(q < 2 for q in self.head + self.tail_period):
            raise ValueError("every arity must be at least 2")

    @classmethod
    def constant(cls, q: int = 2) -> "TreeShape":
        return cls((), (q,))

    @classmethod
    def binary(cls) -> "TreeShape":
        return cls((), (2,))

    def arity(self, n: int) -> int:
        """Arity of level ``n`` (1-based)."""
        if n < 1:
            raise ValueError("levels start at 1")
        h = len(self.head)
        if n <= h:
            return self.head[n - 1]
        return self.tail_period[(n - h - 1) % len(self.tail_period)]

    def arities(self, n: int) -> tuple:
        return tuple(self.arity(i) for i in range(1, n + 1))

    @property
    def is_constant(self) -> bool:
        return len(set(self.head + self.tail_period)) == 1

    @property
    def period(self) -> int:
        return len(self.tail_period)

    def level_class(self, n: int) -> int:
        """Canonical representative of level ``n`` under the periodic tail."""
        h = len(self.head)
        if n <= h:
            return n
        return h + 1 + (n - h - 1) % len(self.tail_period)

    def to_json(self) -> dict:
        return {"arities": {"head": list(self.head), "tail_period": list(self.tail_period)}}

    @classmethod
    def from_json(cls, obj, pointer="") -> "TreeShape":
        try:
            ar = obj["arities"]
            head = ar.get("head", [])
            tail = ar["tail_period"]
        except (KeyError, TypeError, AttributeError):
            raise ConfigError(pointer + "/arities", "expected {head: [...], tail_period: [...]}")
        for key, seq in (("head", head), ("tail_period", tail)):
            if not isinstance(seq, list) or not all(isinstance(q, int) for q in seq):
                raise ConfigError(f"{pointer}/arities/{key}", "expected a list of integers")
            for i, q in enumerate(seq):
                if q < 2:
                    raise ConfigError(f"{pointer}/arities/{key}/{i}", "arity must be >= 2")
        if not tail:
            raise ConfigError(pointer + "/arities/tail_period", "tail period must be nonempty")
        return cls(tuple(head), tuple(tail))


BINARY = TreeShape.binary()


def level_size(shape: TreeShape, n: int) -> int:
    if n < 0:
        raise ValueError("depth must be nonnegative")
    return math.prod(shape.arity(i) for i in range(1, n + 1))


def check_cap(count: int, cap: int | None) -> None:
    cap = DEFAULT_CAP if cap is None else cap
    if count > cap:
        raise CapExceeded(count, cap)


def enumerate_level(shape: TreeShape, n: int, cap: int | None = None) -> list:
    """All depth-``n`` prefixes in lexicographic order."""
    check_cap(level_size(shape, n), cap)
    return list(itertools.product(*(range(q) for q in shape.arities(n))))


def prefix_index(shape: TreeShape, y) -> int:
    """Position of ``y`` in :func:`enumerate_level` order (mixed radix)."""
    idx = 0
    for i, letter in enumerate(y, start=1):
        idx = idx * shape.arity(i) + letter
    return idx


def index_prefix(shape: TreeShape, idx: int, n: int) -> tuple:
    out = []
    for i in range(n, 0, -1):
        q = shape.arity(i)
        idx, r = divmod(idx, q)
        out.append(r)
    return tuple(reversed(out))


def is_valid_prefix(shape: TreeShape, y) -> bool:
    return all(0 <= a < shape.arity(i) for i, a in enumerate(y, start=1))


def to_external(y) -> tuple:
    return tuple(a + 1 for a in y)


def from_external(y) -> tuple:
    return tuple(a - 1 for a in y)


def is_prefix_of(c, y) -> bool:
    return len(c) <= len(y) and tuple(y[: len(c)]) == tuple(c)


@dataclass(frozen=True)
class BoundaryPoint:
    """A point of the boundary given by a finite prefix and a periodic tail.

    ``tail`` lists letters that repeat forever after ``prefix``; a constant
    point such as ``1, 1, 1, ...`` has ``tail=(1,)``.  Tail letters must be
    valid at every level they land on.
    """

    shape: TreeShape
    prefix: tuple = ()
    tail: tuple = (0,)

    def __post_init__(self):
        object.__setattr__(self, "prefix", tuple(self.prefix))
        object.__setattr__(self, "tail", tuple(self.tail))
        if not self.tail:
            raise ValueError("tail must be nonempty")
        if not is_valid_prefix(self.shape, self.prefix):
            raise ValueError(f"prefix {self.prefix} has an out-of-range letter")
        # tail letters only need checking over one joint period of shape and tail
        start = len(self.prefix) + 1
        span = len(self.shape.head) + math.lcm(self.shape.period, len(self.tail)) + 1
        for n in range(start, start + span):
            if self.letter(n) >= self.shape.arity(n):
                raise ValueError(f"tail letter out of range at level {n}")

    def letter(self, n: int) -> int:
        """Letter at level ``n`` (1-based)."""
        p = len(self.prefix)
        if n <= p:
            return self.prefix[n - 1]
        return self.tail[(n - p - 1) % len(self.tail)]

    def project(self, n: int) -> tuple:
        return tuple(self.letter(i) for i in range(1, n + 1))

    def phase(self, n: int) -> int:
        """Position of level ``n + 1`` inside the tail, or -1 inside the prefix."""
        p = len(self.prefix)
        if n < p:
            return -1
        return (n - p) % len(self.tail)

    @classmethod
    def constant(cls, shape: TreeShape, letter: int) -> "BoundaryPoint":
        return cls(shape, (), (letter,))

    def canonical(self) -> "BoundaryPoint":
        """Same point with the shortest tail period and shortest prefix."""
        t = self.tail
        for p in range(1, len(t) + 1):
            if len(t) % p == 0 and t == t[:p] * (len(t) // p):
                t = t[:p]
                break
        pre = list(self.prefix)
        while pre and pre[-1] == t[-1]:
            pre.pop()
            t = (t[-1],) + t[:-1]
        return BoundaryPoint(self.shape, tuple(pre), t)

    def same_point(self, other: "BoundaryPoint") -> bool:
        return self.canonical() == other.canonical()


def project(x: BoundaryPoint, n: int) -> tuple:
    return x.project(n)


def cylinder_contains(c, x: BoundaryPoint) -> bool:
    return x.project(len(c)) == tuple(c)
