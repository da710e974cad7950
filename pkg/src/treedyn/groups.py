"""Finitely generated groups of tree automorphisms.

When every generator is finite-state the group keeps an
:class:`~treedyn.automorphism.ElementSpace`, so products are interned
integers and equality is exact.  Otherwise elements stay lazy and
deduplication falls back to level tables (flagged in the results).
"""
from __future__ import annotations

import re
from collections import deque
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import null_space

from .automorphism import (Automorphism, ElementSpace, Identity, MachineState, compose, invert,
                           is_trivial, level_table, section)
from .errors import CapExceeded, NotDecidable, NotFound, ShapeMismatch
from .tree import DEFAULT_CAP, TreeShape, check_cap, enumerate_level, index_prefix, level_size, prefix_index

NULL_SPACE_RCOND = 1e-10


@dataclass(frozen=True)
class Word:
    """Product ``s_1 s_2 ... s_k`` of generator letters ``(name, +-1)``;
    ``s_k`` acts first.  Freely reduced on construction."""

    letters: tuple = ()

    def __post_init__(self):
        out = []
        for name, e in self.letters:
            if e not in (1, -1):
                raise ValueError("exponents must be +1 or -1")
            if out and out[-1][0] == name and out[-1][1] == -e:
                out.pop()
            else:
                out.append((name, e))
        object.__setattr__(self, "letters", tuple(out))

    @classmethod
    def parse(cls, text: str) -> "Word":
        """``"a b^-1 c"``, ``"ab"`` (single-letter names) or ``"1"``/``""``."""
        text = text.strip()
        if text in ("", "1", "e"):
            return cls()
        toks = text.split() if " " in text else re.findall(r"[A-Za-z_][0-9]*(?:\^-1)?", text)
        letters = []
        for t in toks:
            if t.endswith("^-1"):
                letters.append((t[:-3], -1))
            else:
                letters.append((t, 1))
        return cls(tuple(letters))

    def inverse(self) -> "Word":
        return Word(tuple((n, -e) for n, e in reversed(self.letters)))

    def __mul__(self, other: "Word") -> "Word":
        return Word(self.letters + other.letters)

    def __len__(self):
        return len(self.letters)

    def __str__(self):
        if not self.letters:
            return "1"
        parts = [n if e == 1 else f"{n}^-1" for n, e in self.letters]
        sep = "" if all(len(n) == 1 for n, _ in self.letters) else " "
        return sep.join(parts)

    def to_json(self):
        return str(self)


class GeneratedGroup:
    """Named generators sharing one tree shape."""

    def __init__(self, generators: dict, shape: TreeShape | None = None, name: str = ""):
        if not generators:
            raise ValueError("a group needs at least one generator")
        self.generators = dict(generators)
        shapes = {g.shape for g in self.generators.values()}
        if len(shapes) != 1:
            raise ShapeMismatch("generators live on different trees")
        self.shape = shape or shapes.pop()
        self.name = name
        self.names = sorted(self.generators)
        self.space = None
        self.ids = {}
        if self.shape.is_constant and all(g.key() is not None for g in self.generators.values()):
            self.space = ElementSpace(self.shape.arity(1))
            for n in self.names:
                self.ids[n] = self.space.intern(self.generators[n])
        self._tables = {}

    @property
    def exact(self) -> bool:
        return self.space is not None

    def letters(self):
        """Generator letters in shortlex order: names sorted, ``+1`` before ``-1``;
        an inverse letter is dropped when it equals the generator."""
        out = []
        for n in self.names:
            out.append((n, 1))
            if not self._is_involution(n):
                out.append((n, -1))
        return out

    def _is_involution(self, n):
        if self.space is not None:
            i = self.ids[n]
            return self.space.inverse_id(i) == i
        g = self.generators[n]
        try:
            return is_trivial(compose(g, g))
        except NotDecidable:
            return False

    def letter_element(self, name, e):
        g = self.generators[name]
        return g if e == 1 else invert(g)

    def letter_id(self, name, e):
        i = self.ids[name]
        return i if e == 1 else self.space.inverse_id(i)

    def word_id(self, w: Word) -> int:
        acc = self.space.e
        for n, e in w.letters:
            acc = self.space.compose_ids(acc, self.letter_id(n, e))
        return acc

    def evaluate(self, w: Word | str) -> Automorphism:
        if isinstance(w, str):
            w = Word.parse(w)
        for n, _ in w.letters:
            if n not in self.generators:
                raise KeyError(f"unknown generator {n!r}")
        if self.space is not None:
            return self.space.element(self.word_id(w), self.shape)
        acc = Identity(self.shape)
        for n, e in w.letters:
            acc = compose(acc, self.letter_element(n, e))
        return acc

    def letter_table(self, name, e, n):
        key = (name, e, n)
        t = self._tables.get(key)
        if t is None:
            if self.space is not None:
                t = self.space.level_table(self.letter_id(name, e), n)
            else:
                t = level_table(self.letter_element(name, e), n)
            self._tables[key] = t
        return t

    def level_group_tables(self, n, letters=None):
        return [self.letter_table(nm, e, n) for nm, e in (letters or self.letters())]

    def __repr__(self):
        return f"GeneratedGroup({self.name or self.names})"


# --------------------------------------------------------------------------
# balls


@dataclass
class BallElement:
    word: Word
    element: Automorphism
    key: object


@dataclass
class Ball:
    elements: list
    exact_dedup: bool

    def __len__(self):
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    def words(self):
        return [b.word for b in self.elements]


def ball(G: GeneratedGroup, radius: int, dedup_depth: int = 12, cap: int | None = None) -> Ball:
    """All products of at most ``radius`` letters, deduplicated, in BFS
    shortlex order.  Dedup is exact for interned groups and by depth
    ``dedup_depth`` level tables otherwise."""
    cap = DEFAULT_CAP if cap is None else cap
    letters = G.letters()
    if G.space is not None:
        sp = G.space
        lids = [G.letter_id(n, e) for n, e in letters]
        seen = {sp.e}
        layer = [(Word(), sp.e)]
        out = [BallElement(Word(), sp.element(sp.e, G.shape), sp.e)]
        for _ in range(radius):
            nxt = []
            for w, i in layer:
                for (n, e), li in zip(letters, lids):
                    j = sp.compose_ids(i, li)
                    if j in seen:
                        continue
                    seen.add(j)
                    check_cap(len(seen), cap)
                    w2 = Word(w.letters + ((n, e),))
                    nxt.append((w2, j))
                    out.append(BallElement(w2, sp.element(j, G.shape), j))
            layer = nxt
        return Ball(out, True)
    ident = Identity(G.shape)
    k0 = level_table(ident, dedup_depth).tobytes()
    seen = {k0}
    layer = [(Word(), ident)]
    out = [BallElement(Word(), ident, k0)]
    for _ in range(radius):
        nxt = []
        for w, g in layer:
            for n, e in letters:
                h = compose(g, G.letter_element(n, e))
                k = level_table(h, dedup_depth).tobytes()
                if k in seen:
                    continue
                seen.add(k)
                check_cap(len(seen), cap)
                w2 = Word(w.letters + ((n, e),))
                nxt.append((w2, h))
                out.append(BallElement(w2, h, k))
        layer = nxt
    return Ball(out, False)


# --------------------------------------------------------------------------
# level transitivity


@dataclass
class MinimalityResult:
    verdict: str  # "Transitive" | "NotTransitive"
    depth: int
    witnesses: dict = field(default_factory=dict)
    orbits: list = field(default_factory=list)

    @property
    def transitive(self):
        return self.verdict == "Transitive"

    def to_json(self):
        from .tree import to_external
        out = {"verdict": self.verdict, "depth": self.depth}
        if self.transitive:
            out["witnesses"] = {",".join(map(str, to_external(y))): str(w) for y, w in sorted(self.witnesses.items())}
        else:
            out["orbits"] = [[list(to_external(y)) for y in b] for b in self.orbits]
        return out


def _bfs_words(tables, letters, start, size):
    """BFS over indices; returns parent pointers (letter index, previous)."""
    parent = {start: None}
    dq = deque([start])
    while dq:
        i = dq.popleft()
        for li, t in enumerate(tables):
            j = int(t[i])
            if j not in parent:
                parent[j] = (li, i)
                dq.append(j)
    return parent


def _word_from(parent, letters, j):
    out = []
    while parent[j] is not None:
        li, i = parent[j]
        out.append(letters[li])
        j = i
    # the last letter applied is the first one in the product
    return Word(tuple(out))


def minimality_check(G: GeneratedGroup, n: int, cap: int | None = None) -> MinimalityResult:
    """Exact transitivity test of the level-``n`` action by BFS on level tables."""
    check_cap(level_size(G.shape, n), cap)
    letters = G.letters()
    tables = G.level_group_tables(n, letters)
    size = level_size(G.shape, n)
    parent = _bfs_words(tables, letters, 0, size)
    if len(parent) == size:
        wit = {index_prefix(G.shape, j, n): _word_from(parent, letters, j) for j in range(size)}
        return MinimalityResult("Transitive", n, wit)
    return MinimalityResult("NotTransitive", n, orbits=_orbits(G.shape, n, tables))


def find_transporter(G: GeneratedGroup, y, y2, cap: int | None = None) -> Word:
    """Shortest (BFS, shortlex letters) word mapping ``y`` to ``y2`` on its level."""
    y, y2 = tuple(y), tuple(y2)
    if len(y) != len(y2):
        raise ValueError("prefixes of different lengths")
    if y == y2:
        return Word()
    n = len(y)
    check_cap(level_size(G.shape, n), cap)
    letters = G.letters()
    tables = G.level_group_tables(n, letters)
    parent = _bfs_words(tables, letters, prefix_index(G.shape, y), level_size(G.shape, n))
    j = prefix_index(G.shape, y2)
    if j not in parent:
        raise NotFound(f"no element maps {y} to {y2}")
    return _word_from(parent, letters, j)


def transporters_from(G: GeneratedGroup, y, cap: int | None = None) -> dict:
    """BFS words from ``y`` to every reachable prefix of the same length."""
    n = len(y)
    check_cap(level_size(G.shape, n), cap)
    letters = G.letters()
    tables = G.level_group_tables(n, letters)
    parent = _bfs_words(tables, letters, prefix_index(G.shape, tuple(y)), level_size(G.shape, n))
    return {index_prefix(G.shape, j, n): _word_from(parent, letters, j) for j in sorted(parent)}


def _orbits(shape, n, tables):
    size = level_size(shape, n)
    parent = list(range(size))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for t in tables:
        for i in range(size):
            a, b = find(i), find(int(t[i]))
            if a != b:
                parent[max(a, b)] = min(a, b)
    blocks = {}
    for i in range(size):
        blocks.setdefault(find(i), []).append(index_prefix(shape, i, n))
    return [blocks[k] for k in sorted(blocks)]


def level_orbit_partition(G: GeneratedGroup, n: int, generator_filter=None, cap: int | None = None) -> list:
    """Orbits on depth-``n`` prefixes of the subgroup generated by the
    generators selected by ``generator_filter`` (a collection of names or a
    predicate on names; None selects all)."""
    check_cap(level_size(G.shape, n), cap)
    if generator_filter is None:
        names = G.names
    elif callable(generator_filter):
        names = [m for m in G.names if generator_filter(m)]
    else:
        names = [m for m in G.names if m in set(generator_filter)]
    tables = [G.letter_table(m, 1, n) for m in names]
    return _orbits(G.shape, n, tables)


def invariant_distribution_dimension(G: GeneratedGroup, n: int, cap: int | None = None):
    """Dimension of the space of vectors fixed by all level-``n`` generator
    permutations, and an orthonormal basis (null space with cutoff 1e-10)."""
    size = level_size(G.shape, n)
    check_cap(size * size, cap)
    blocks = []
    eye = np.eye(size)
    for t in G.level_group_tables(n, [(m, 1) for m in G.names]):
        P = np.zeros((size, size))
        P[t, np.arange(size)] = 1.0
        blocks.append(P - eye)
    basis = null_space(np.vstack(blocks), rcond=NULL_SPACE_RCOND)
    return basis.shape[1], basis


# --------------------------------------------------------------------------
# rigid stabilizers


def supported_in(g: Automorphism, O) -> bool:
    """Exact test that ``g`` fixes every point outside the cylinder ``[O]``."""
    O = tuple(O)
    h = g
    for k, a in enumerate(O):
        p = h.perm()
        if p[a] != a:
            return False
        for b in range(h.arity):
            if b != a and not is_trivial(h.child(b)):
                return False
        h = h.child(a)
    return True


def rigid_stabilizer_elements(G: GeneratedGroup, O, radius: int, verify_depth: int | None = None,
                              candidates=(), cap: int | None = None) -> list:
    """Nontrivial words (from the ball of ``radius`` and from ``candidates``)
    whose element is supported inside ``[O]``.  Support is certified exactly
    for finite-state and exact-activity kernels; ``verify_depth`` adds a
    level-table cross-check."""
    O = tuple(O)
    out = []
    seen = set()

    def consider(w, g, key):
        if key in seen:
            return
        seen.add(key)
        try:
            if is_trivial(g) or not supported_in(g, O):
                return
        except NotDecidable:
            return
        if verify_depth is not None and verify_depth >= len(O):
            from .automorphism import support_level
            sup = support_level(g, verify_depth, cap)
            if any(y[: len(O)] != O for y in sup):
                return
        out.append(w)

    for w in candidates:
        w = Word.parse(w) if isinstance(w, str) else w
        key = G.word_id(w) if G.space is not None else str(w)
        consider(w, G.evaluate(w), key)
    for be in ball(G, radius, cap=cap):
        consider(be.word, be.element, be.key)
    return out
