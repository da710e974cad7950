"""Level-preserving tree automorphisms as lazy section machines.

An :class:`Automorphism` sits at some depth ``d`` of the tree.  It exposes a
root permutation of the letters of level ``d + 1`` and, for each letter, the
section acting on the subtree below that letter.  Applying ``g`` to a point
walks down the point, permuting one letter per level::

    g(x_1, x_2, ...) = (perm[x_1], g|x_1 (x_2, x_3, ...))

Kernels: :class:`Identity`, :class:`Portrait` (finitely many nontrivial
nodes), :class:`MachineState` (finite-state machine), :class:`RuleElement`
(programmatic oracle with an activity bound) and the lazy wrappers
:class:`Compose` and :class:`Inverse`.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NotDecidable, NoActivityBound
from .tree import DEFAULT_CAP, TreeShape, BoundaryPoint, check_cap, enumerate_level, level_size

DEFAULT_EQUAL_DEPTH = 12


def _identity_perm(q):
    return tuple(range(q))


def _invert_perm(p):
    inv = [0] * len(p)
    for i, j in enumerate(p):
        inv[j] = i
    return tuple(inv)


def _check_perm(p, q):
    if len(p) != q or sorted(p) != list(range(q)):
        raise ValueError(f"{p} is not a permutation of {q} letters")


class Automorphism:
    """Base class.  Subclasses implement ``perm``, ``child`` and ``key``."""

    shape: TreeShape
    depth: int

    @property
    def arity(self) -> int:
        return self.shape.arity(self.depth + 1)

    def perm(self) -> tuple:
        raise NotImplementedError

    def child(self, letter: int) -> "Automorphism":
        raise NotImplementedError

    def key(self):
        """Hashable finite-state key, or None when no finite key exists."""
        return None

    def is_identity_fast(self) -> bool:
        """Cheap sufficient test for triviality (never a false positive)."""
        return False

    @property
    def activity_exact(self) -> bool:
        return self.key() is not None

    def may_be_active(self, lo: int = 0, hi: int | None = None) -> bool:
        """Whether some section at relative depth in ``[lo, hi]`` has a
        nontrivial root permutation.  ``hi=None`` means unbounded."""
        return _explore_activity(self, lo, hi)

    def __mul__(self, other):
        return compose(self, other)

    def __repr__(self):
        return f"{type(self).__name__}(depth={self.depth})"


class Identity(Automorphism):
    def __init__(self, shape: TreeShape, depth: int = 0):
        self.shape = shape
        self.depth = depth

    def perm(self):
        return _identity_perm(self.arity)

    def child(self, letter):
        return Identity(self.shape, self.depth + 1)

    def key(self):
        return ("e",)

    def is_identity_fast(self):
        return True

    def may_be_active(self, lo=0, hi=None):
        return False


class Portrait(Automorphism):
    """Root permutation plus a finite map letter -> child; missing children
    are the identity.  Use :func:`portrait` to build normalized instances."""

    def __init__(self, shape, perm, children=None, depth=0):
        self.shape = shape
        self.depth = depth
        self._perm = tuple(perm)
        _check_perm(self._perm, self.arity)
        self.children = dict(children or {})
        for a, c in self.children.items():
            if not 0 <= a < self.arity:
                raise ValueError(f"child letter {a} out of range")
            if c.depth != depth + 1:
                raise ValueError("child depth mismatch")

    def perm(self):
        return self._perm

    def child(self, letter):
        c = self.children.get(letter)
        return c if c is not None else Identity(self.shape, self.depth + 1)

    def key(self):
        return ("p", id(self))

    def is_identity_fast(self):
        return False


def portrait(shape, perm=None, children=None, depth=0) -> Automorphism:
    """Build a portrait node, collapsing trivial nodes to :class:`Identity`."""
    q = shape.arity(depth + 1)
    perm = tuple(perm) if perm is not None else _identity_perm(q)
    kids = {a: c for a, c in (children or {}).items() if not c.is_identity_fast()}
    if perm == _identity_perm(q) and not kids:
        return Identity(shape, depth)
    return Portrait(shape, perm, kids, depth)


def flip_portrait(shape, levels, depth=0):
    """Portrait acting by the letter permutation ``levels[n]`` at every node
    of level ``n`` (1-based levels; binary shapes get the transposition when
    the value is ``True``).  Coordinates not listed are left alone."""
    levels = dict(levels)
    if not levels:
        return Identity(shape, depth)
    top = max(levels)
    node = Identity(shape, top)
    for n in range(top, depth, -1):
        p = levels.get(n)
        q = shape.arity(n)
        if p is True:
            p = tuple((i + 1) % q for i in range(q))
        elif not p:
            p = None
        kids = {a: node for a in range(q)} if not node.is_identity_fast() else {}
        node = portrait(shape, p, kids, n - 1)
    return node


class Machine:
    """Finite-state machine: state ``s`` has a root permutation ``perms[s]``
    and successor states ``nexts[s][letter]``.  Requires constant arity."""

    def __init__(self, perms, nexts, names=None, q=None):
        self.perms = [tuple(p) for p in perms]
        self.nexts = [tuple(n) for n in nexts]
        if q is None:
            q = len(self.perms[0])
        self.q = q
        for p, nx in zip(self.perms, self.nexts):
            _check_perm(p, q)
            if len(nx) != q or not all(0 <= t < len(self.perms) for t in nx):
                raise ValueError("bad successor list")
        self.names = list(names) if names else [str(i) for i in range(len(self.perms))]
        self._ident = None
        self._tables = {}

    def __len__(self):
        return len(self.perms)

    def identity_states(self) -> frozenset:
        if self._ident is None or len(self._ident_src) != len(self.perms):
            idp = _identity_perm(self.q)
            cand = {s for s in range(len(self.perms)) if self.perms[s] == idp}
            changed = True
            while changed:
                changed = False
                for s in list(cand):
                    if any(t not in cand for t in self.nexts[s]):
                        cand.discard(s)
                        changed = True
            self._ident = frozenset(cand)
            self._ident_src = tuple(self.perms)
        return self._ident

    def state(self, s, shape=None, depth=0) -> "MachineState":
        if isinstance(s, str):
            s = self.names.index(s)
        shape = shape or TreeShape.constant(self.q)
        return MachineState(self, s, shape, depth)

    def level_table(self, s: int, n: int) -> np.ndarray:
        """Images of all depth-``n`` prefixes (mixed-radix indices)."""
        key = (s, n)
        t = self._tables.get(key)
        if t is not None:
            return t
        if n == 0:
            t = np.zeros(1, dtype=np.int64)
        else:
            Q = self.q ** (n - 1)
            parts = []
            for x in range(self.q):
                sub = self.level_table(self.nexts[s][x], n - 1)
                parts.append(self.perms[s][x] * Q + sub)
            t = np.concatenate(parts)
        if n <= 14:
            self._tables[key] = t
        return t

    def to_json(self) -> dict:
        return {"states": [{"perm": list(p), "next": list(n)} for p, n in zip(self.perms, self.nexts)]}


class MachineState(Automorphism):
    def __init__(self, machine: Machine, state: int, shape: TreeShape, depth: int = 0):
        self.machine = machine
        self.state = state
        self.shape = shape
        self.depth = depth
        if shape.arity(depth + 1) != machine.q:
            raise ValueError("machine arity does not match the tree")

    def perm(self):
        return self.machine.perms[self.state]

    def child(self, letter):
        return MachineState(self.machine, self.machine.nexts[self.state][letter], self.shape, self.depth + 1)

    def key(self):
        if self.state in self.machine.identity_states():
            return ("e",)
        return ("m", id(self.machine), self.state)

    def is_identity_fast(self):
        return self.state in self.machine.identity_states()

    @property
    def name(self):
        return self.machine.names[self.state]

    def __repr__(self):
        return f"MachineState({self.machine.names[self.state]!r}, depth={self.depth})"


class Rule:
    """Section oracle for rule elements.

    ``perm(prefix)`` returns the permutation of the letters below ``prefix``
    (``None`` for the identity).  ``may_be_active(prefix, lo, hi)`` must
    return True whenever some extension ``z`` of ``prefix`` with
    ``max(lo, len(prefix)) <= len(z) <= hi`` has a nontrivial permutation
    (``hi=None`` is unbounded).  Set ``exact_activity`` when the answer is
    also never a false positive.
    """

    exact_activity = True
    has_activity_bound = True

    def perm(self, prefix):
        raise NotImplementedError

    def may_be_active(self, prefix, lo, hi):
        raise NotImplementedError

    def fset_closed_form(self, n, variant, measure):
        """Optional exact (size, mass) of a finitary set; None if unknown."""
        return None


class RuleElement(Automorphism):
    def __init__(self, shape: TreeShape, rule: Rule, prefix=()):
        self.shape = shape
        self.rule = rule
        self.prefix = tuple(prefix)
        self.depth = len(self.prefix)
        self._kids = {}

    def perm(self):
        p = self.rule.perm(self.prefix)
        return _identity_perm(self.arity) if p is None else tuple(p)

    def child(self, letter):
        c = self._kids.get(letter)
        if c is None:
            c = RuleElement(self.shape, self.rule, self.prefix + (letter,))
            self._kids[letter] = c
        return c

    @property
    def activity_exact(self):
        return self.rule.has_activity_bound and self.rule.exact_activity

    def may_be_active(self, lo=0, hi=None):
        if not self.rule.has_activity_bound:
            raise NoActivityBound(type(self.rule).__name__)
        d = self.depth
        return self.rule.may_be_active(self.prefix, d + lo, None if hi is None else d + hi)

    def is_identity_fast(self):
        return self.rule.has_activity_bound and self.rule.exact_activity and not self.may_be_active()

    def __repr__(self):
        return f"RuleElement({type(self.rule).__name__}, prefix={self.prefix})"


class Compose(Automorphism):
    """``Compose(g, h)`` is ``g o h``: apply ``h`` first."""

    def __init__(self, g: Automorphism, h: Automorphism):
        if g.depth != h.depth:
            raise ValueError("depth mismatch")
        self.g, self.h = g, h
        self.shape = g.shape
        self.depth = g.depth
        self._perm = None
        self._kids = {}
        self._key = False

    def perm(self):
        if self._perm is None:
            pg, ph = self.g.perm(), self.h.perm()
            self._perm = tuple(pg[ph[x]] for x in range(len(ph)))
        return self._perm

    def child(self, letter):
        c = self._kids.get(letter)
        if c is None:
            c = compose(self.g.child(self.h.perm()[letter]), self.h.child(letter))
            self._kids[letter] = c
        return c

    def key(self):
        if self._key is False:
            kg, kh = self.g.key(), self.h.key()
            self._key = None if kg is None or kh is None else ("c", kg, kh)
        return self._key

    @property
    def activity_exact(self):
        return self.key() is not None

    def may_be_active(self, lo=0, hi=None):
        if self.key() is not None:
            return _explore_activity(self, lo, hi)
        return self.g.may_be_active(lo, hi) or self.h.may_be_active(lo, hi)


class Inverse(Automorphism):
    def __init__(self, g: Automorphism):
        self.g = g
        self.shape = g.shape
        self.depth = g.depth
        self._perm = None
        self._kids = {}

    def perm(self):
        if self._perm is None:
            self._perm = _invert_perm(self.g.perm())
        return self._perm

    def child(self, letter):
        c = self._kids.get(letter)
        if c is None:
            c = invert(self.g.child(self.perm()[letter]))
            self._kids[letter] = c
        return c

    def key(self):
        k = self.g.key()
        return None if k is None else ("i", k)

    @property
    def activity_exact(self):
        return self.g.activity_exact

    def may_be_active(self, lo=0, hi=None):
        return self.g.may_be_active(lo, hi)

    def is_identity_fast(self):
        return self.g.is_identity_fast()


# --------------------------------------------------------------------------
# interned finite-state elements


class ElementSpace(Machine):
    """A growing minimized machine in which products and inverses of its
    states are interned.  Two ids are equal as automorphisms iff they are
    the same id, so group elements can be compared and hashed by id."""

    SIG_LEAVES = 64

    def __init__(self, q=2):
        super().__init__([_identity_perm(q)], [tuple([0] * q)], names=["e"], q=q)
        self.e = 0
        self._cmemo = {}
        self._imemo = {0: 0}
        self._sigs = {}
        self._sig_index = {}
        self._sig_depth = 1
        while q ** (self._sig_depth + 1) <= self.SIG_LEAVES:
            self._sig_depth += 1
        self._keymemo = {("e",): 0}
        self._register(0)

    def identity_states(self):
        return frozenset((0,))

    # signatures are level tables of a fixed small depth
    def _sig(self, s, k, perm_of, next_of, cache):
        key = (s, k)
        v = cache.get(key)
        if v is None:
            if k == 0:
                v = ()
            else:
                v = (perm_of(s), tuple(self._sig(t, k - 1, perm_of, next_of, cache) for t in next_of(s)))
            cache[key] = v
        return v

    def _register(self, s):
        sig = self._sig(s, self._sig_depth, self.perms.__getitem__, self.nexts.__getitem__, self._sigs)
        self._sig_index.setdefault(sig, []).append(s)

    def _intern(self, root, expand, resolve):
        """Generic interning.  ``expand(desc)`` gives ``(perm, child descs)``;
        ``resolve(desc)`` maps a descriptor to an existing id or None."""
        r = resolve(root)
        if r is not None:
            return r
        N = len(self.perms)
        temp_ids = {root: N}
        order = [root]
        tperms, tnexts = [], []
        i = 0
        while i < len(order):
            desc = order[i]
            i += 1
            p, kids = expand(desc)
            nx = []
            for c in kids:
                cid = c if isinstance(c, int) else resolve(c)
                if cid is None:
                    cid = temp_ids.get(c)
                    if cid is None:
                        cid = N + len(order)
                        temp_ids[c] = cid
                        order.append(c)
                nx.append(cid)
            tperms.append(tuple(p))
            tnexts.append(tuple(nx))

        def perm_of(s):
            return self.perms[s] if s < N else tperms[s - N]

        def next_of(s):
            return self.nexts[s] if s < N else tnexts[s - N]

        mapping = {}
        cache = {}

        def final(s):
            return s if s < N else mapping.get(s, s)

        def bisim(a, b):
            seen = set()
            stack = [(a, b)]
            while stack:
                u, v = stack.pop()
                u, v = final(u), final(v)
                if u == v or (u, v) in seen:
                    continue
                seen.add((u, v))
                if perm_of(u) != perm_of(v):
                    return False
                stack.extend(zip(next_of(u), next_of(v)))
            return True

        accepted = []
        new_index = {}
        for t in range(N, N + len(order)):
            sig = self._sig(t, self._sig_depth, perm_of, next_of, cache)
            match = None
            for cand in self._sig_index.get(sig, []) + new_index.get(sig, []):
                if bisim(t, cand):
                    match = cand
                    break
            if match is None:
                accepted.append(t)
                new_index.setdefault(sig, []).append(t)
            else:
                mapping[t] = match
        # renumber accepted temp states contiguously after N
        renum = {t: N + j for j, t in enumerate(accepted)}

        def fin(s):
            if s < N:
                return s
            s = mapping.get(s, s)
            while s >= N and s in mapping:
                s = mapping[s]
            return s if s < N else renum[s]

        for t in accepted:
            self.perms.append(tperms[t - N])
            self.nexts.append(tuple(fin(c) for c in tnexts[t - N]))
            self.names.append(f"s{len(self.perms) - 1}")
        for t in accepted:
            self._register(renum[t])
        self._ident = None
        result = {}
        for desc, t in temp_ids.items():
            result[desc] = fin(t)
        return result

    def compose_ids(self, i: int, j: int) -> int:
        """Id of ``i o j`` (apply ``j`` first)."""
        if i == 0:
            return j
        if j == 0:
            return i
        r = self._cmemo.get((i, j))
        if r is not None:
            return r

        def resolve(d):
            u, v = d
            if u == 0:
                return v
            if v == 0:
                return u
            return self._cmemo.get(d)

        def expand(d):
            u, v = d
            pu, pv = self.perms[u], self.perms[v]
            return tuple(pu[pv[x]] for x in range(self.q)), [(self.nexts[u][pv[x]], self.nexts[v][x]) for x in range(self.q)]

        out = self._intern((i, j), expand, resolve)
        if isinstance(out, int):
            return out
        for d, s in out.items():
            self._cmemo[d] = s
        return out[(i, j)]

    def inverse_id(self, i: int) -> int:
        r = self._imemo.get(i)
        if r is not None:
            return r

        def resolve(d):
            return self._imemo.get(d[1])

        def expand(d):
            u = d[1]
            inv = _invert_perm(self.perms[u])
            return inv, [("i", self.nexts[u][inv[x]]) for x in range(self.q)]

        out = self._intern(("i", i), expand, resolve)
        if isinstance(out, int):
            return out
        for d, s in out.items():
            self._imemo[d[1]] = s
        return out[("i", i)]

    def intern(self, g: Automorphism) -> int:
        """Intern a finite-state automorphism (portrait, machine state,
        composition of those) and return its id."""
        if isinstance(g, MachineState) and g.machine is self:
            return g.state
        if g.key() is None:
            raise NotDecidable("only finite-state automorphisms can be interned")

        def expand(d):
            return d.perm(), [_Keyed(d.child(x)) for x in range(self.q)]

        class _Keyed:
            __slots__ = ("g", "k")

            def __init__(self, g):
                self.g = g
                self.k = g.key()

            def __hash__(self):
                return hash(self.k)

            def __eq__(self, other):
                return isinstance(other, _Keyed) and self.k == other.k

            def perm(self):
                return self.g.perm()

            def child(self, x):
                return self.g.child(x)

        def _keyed(d):
            return d.k if isinstance(d, _Keyed) else d.key()

        def resolve2(d):
            g0 = d.g if isinstance(d, _Keyed) else d
            if isinstance(g0, MachineState) and g0.machine is self:
                return g0.state
            return self._keymemo.get(_keyed(d))

        root = _Keyed(g)
        out = self._intern(root, expand, resolve2)
        if isinstance(out, int):
            return out
        for d, s in out.items():
            self._keymemo[d.k] = s
        return out[root]

    def element(self, i: int, shape=None) -> MachineState:
        return MachineState(self, i, shape or TreeShape.constant(self.q), 0)

    def section_id(self, i: int, y) -> int:
        for a in y:
            i = self.nexts[i][a]
        return i

    def apply_ids(self, i: int, y) -> tuple:
        out = []
        for a in y:
            out.append(self.perms[i][a])
            i = self.nexts[i][a]
        return tuple(out)


# --------------------------------------------------------------------------
# operations


def compose(g: Automorphism, h: Automorphism) -> Automorphism:
    """``g o h``: the automorphism applying ``h`` first, then ``g``."""
    if g.shape != h.shape:
        from .errors import ShapeMismatch
        raise ShapeMismatch("automorphisms live on different trees")
    if g.is_identity_fast():
        return h
    if h.is_identity_fast():
        return g
    if (isinstance(g, MachineState) and isinstance(h, MachineState) and g.machine is h.machine
            and isinstance(g.machine, ElementSpace) and g.depth == h.depth):
        return MachineState(g.machine, g.machine.compose_ids(g.state, h.state), g.shape, g.depth)
    return Compose(g, h)


def invert(g: Automorphism) -> Automorphism:
    if g.is_identity_fast():
        return g
    if isinstance(g, Inverse):
        return g.g
    if isinstance(g, MachineState) and isinstance(g.machine, ElementSpace):
        return MachineState(g.machine, g.machine.inverse_id(g.state), g.shape, g.depth)
    return Inverse(g)


def section(g: Automorphism, y) -> Automorphism:
    for a in y:
        g = g.child(a)
    return g


def apply_prefix(g: Automorphism, y) -> tuple:
    out = []
    for a in y:
        out.append(g.perm()[a])
        g = g.child(a)
    return tuple(out)


def apply(g: Automorphism, x, n: int) -> tuple:
    """First ``n`` letters of ``g x`` for a boundary point or long enough prefix."""
    y = x.project(n) if isinstance(x, BoundaryPoint) else tuple(x)[:n]
    if len(y) < n:
        raise ValueError("prefix shorter than requested depth")
    return apply_prefix(g, y)


def apply_point(g: Automorphism, x: BoundaryPoint, horizon: int = 4096) -> BoundaryPoint:
    """The image ``g x`` as a finitely represented boundary point.

    The walk stops once the section becomes trivial or the triple
    (section key, tail phase, level class) repeats, in which case the image
    tail is periodic."""
    from .errors import NotStabilized
    shape = x.shape
    out = []
    seen = {}
    n = 0
    while n <= horizon:
        if _trivial_for_walk(g):
            rest = _suffix_point(x, n)
            return BoundaryPoint(shape, tuple(out) + rest[0], rest[1])
        if n >= len(x.prefix):
            k = g.key()
            if k is not None:
                sig = (k, x.phase(n), shape.level_class(n + 1))
                if sig in seen:
                    m = seen[sig]
                    return BoundaryPoint(shape, tuple(out[:m]), tuple(out[m:]))
                seen[sig] = n
        a = x.letter(n + 1)
        out.append(g.perm()[a])
        g = g.child(a)
        n += 1
    raise NotStabilized(horizon, "image point did not become periodic")


def _trivial_for_walk(g):
    if g.is_identity_fast():
        return True
    if isinstance(g, RuleElement) and g.rule.has_activity_bound and g.rule.exact_activity:
        return not g.may_be_active()
    return False


def _suffix_point(x: BoundaryPoint, n: int):
    if n < len(x.prefix):
        return x.prefix[n:], x.tail
    ph = (n - len(x.prefix)) % len(x.tail)
    return (), x.tail[ph:] + x.tail[:ph]


@dataclass(frozen=True)
class LevelPermutation:
    """The bijection ``g_n`` of depth-``n`` prefixes as an index table."""

    depth: int
    table: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.table, dtype=np.int64)
        object.__setattr__(self, "table", t)

    def is_bijection(self) -> bool:
        t = self.table
        return bool(np.array_equal(np.sort(t), np.arange(len(t))))

    def compose(self, other: "LevelPermutation") -> "LevelPermutation":
        """Table of ``self o other``."""
        if self.depth != other.depth:
            raise ValueError("depth mismatch")
        return LevelPermutation(self.depth, self.table[other.table])

    def inverse(self) -> "LevelPermutation":
        inv = np.empty_like(self.table)
        inv[self.table] = np.arange(len(self.table))
        return LevelPermutation(self.depth, inv)

    def is_identity(self) -> bool:
        return bool(np.array_equal(self.table, np.arange(len(self.table))))

    def __eq__(self, other):
        return isinstance(other, LevelPermutation) and self.depth == other.depth and np.array_equal(self.table, other.table)

    def __hash__(self):
        return hash((self.depth, self.table.tobytes()))


def _sizes_below(shape, depth, n):
    """sizes[i] = number of prefixes of length n-i-1 below level depth+i+1."""
    ar = [shape.arity(depth + i + 1) for i in range(n)]
    sizes = [1] * n
    for i in range(n - 2, -1, -1):
        sizes[i] = sizes[i + 1] * ar[i + 1]
    return ar, sizes


def level_table(g: Automorphism, n: int, cap: int | None = None) -> np.ndarray:
    check_cap(level_size(g.shape, n + g.depth) // max(1, level_size(g.shape, g.depth)), cap)
    if isinstance(g, MachineState):
        return g.machine.level_table(g.state, n).copy()
    memo = {}

    def rec(h, k):
        if k == 0:
            return np.zeros(1, dtype=np.int64)
        key = h.key()
        if key is not None and key[0] == "e":
            return np.arange(level_size(h.shape, h.depth + k) // level_size(h.shape, h.depth), dtype=np.int64)
        mk = (key, k, h.depth) if key is not None else None
        if mk is not None and mk in memo:
            return memo[mk]
        q = h.arity
        p = h.perm()
        parts = []
        Q = None
        for x in range(q):
            sub = rec(h.child(x), k - 1)
            Q = len(sub)
            parts.append(p[x] * Q + sub)
        t = np.concatenate(parts)
        if mk is not None:
            memo[mk] = t
        return t

    return rec(g, n)


def level_projection(g: Automorphism, n: int, cap: int | None = None) -> LevelPermutation:
    return LevelPermutation(n, level_table(g, n, cap))


def equal_exact(g: Automorphism, h: Automorphism) -> bool:
    """Decide ``g == h`` by bisimulation of the product machine."""
    if (isinstance(g, MachineState) and isinstance(h, MachineState) and g.machine is h.machine
            and isinstance(g.machine, ElementSpace)):
        return g.state == h.state
    if g.key() is None or h.key() is None:
        raise NotDecidable("rule kernels have no decidable equality; use equal_to_depth")
    seen = set()
    stack = [(g, h)]
    while stack:
        u, v = stack.pop()
        ku, kv = u.key(), v.key()
        if ku == kv:
            continue
        pair = (ku, kv, u.shape.level_class(u.depth + 1))
        if pair in seen:
            continue
        seen.add(pair)
        if u.perm() != v.perm():
            return False
        for x in range(u.arity):
            stack.append((u.child(x), v.child(x)))
    return True


def equal_to_depth(g: Automorphism, h: Automorphism, depth: int = DEFAULT_EQUAL_DEPTH) -> bool:
    return bool(np.array_equal(level_table(g, depth), level_table(h, depth)))


def is_trivial(g: Automorphism) -> bool:
    """Exact identity test where decidable (finite-state or exact activity)."""
    if g.is_identity_fast():
        return True
    if g.key() is not None:
        return equal_exact(g, Identity(g.shape, g.depth))
    if not g.activity_exact:
        raise NotDecidable("no exact activity bound")
    return not g.may_be_active()


def _explore_activity(g: Automorphism, lo: int, hi: int | None) -> bool:
    """Reachability over finite-state keys."""
    if g.key() is None:
        raise NotDecidable("activity exploration needs a finite-state kernel")

    def nontrivial(h):
        return h.perm() != _identity_perm(h.arity)

    def children(hs):
        nxt = {}
        for h in hs:
            for x in range(h.arity):
                c = h.child(x)
                k = c.key()
                if k[0] != "e":
                    nxt.setdefault((k, c.shape.level_class(c.depth + 1)), c)
        return nxt

    level = {(g.key(), g.shape.level_class(g.depth + 1)): g}
    r = 0
    while level:
        if hi is not None and r > hi:
            return False
        if r >= lo:
            if hi is None:
                seen = set(level)
                stack = list(level.values())
                while stack:
                    h = stack.pop()
                    if nontrivial(h):
                        return True
                    for k, c in children([h]).items():
                        if k not in seen:
                            seen.add(k)
                            stack.append(c)
                return False
            if any(nontrivial(h) for h in level.values()):
                return True
        level = children(level.values())
        r += 1
    return False


def support_level(g: Automorphism, n: int, cap: int | None = None) -> set:
    """Depth-``n`` prefixes whose cylinder meets the support of ``g``: the
    prefix is moved by ``g_n`` or the section below it is nontrivial."""
    check_cap(level_size(g.shape, n), cap)
    out = set()

    def rec(h, y, img_changed):
        if len(y) == n:
            if img_changed or not is_trivial(h):
                out.add(y)
            return
        if not img_changed and is_trivial(h):
            return
        p = h.perm()
        for x in range(h.arity):
            rec(h.child(x), y + (x,), img_changed or p[x] != x)

    rec(g, (), False)
    return out


def nontrivial_sections(g: Automorphism, n: int, cap: int | None = None):
    """Depth-``n`` prefixes with a nontrivial section, by pruned search."""
    cap = DEFAULT_CAP if cap is None else cap
    out = []
    visited = 0
    stack = [(g, ())]
    while stack:
        h, y = stack.pop()
        visited += 1
        check_cap(visited, cap)
        if is_trivial(h):
            continue
        if len(y) == n:
            out.append(y)
            continue
        for x in range(h.arity - 1, -1, -1):
            stack.append((h.child(x), y + (x,)))
    return sorted(out)


def changed_levels(g: Automorphism, max_level: int) -> list:
    """Levels (1-based, up to ``max_level``) at which some node of ``g`` has
    a nontrivial permutation, for finite-state kernels."""
    out = []
    level = {g.key(): g}
    for n in range(1, max_level + 1):
        if not level:
            break
        if any(h.perm() != _identity_perm(h.arity) for h in level.values()):
            out.append(n)
        nxt = {}
        for h in level.values():
            for x in range(h.arity):
                c = h.child(x)
                k = c.key()
                if k is None:
                    raise NotDecidable("changed_levels needs finite-state kernels")
                if k[0] != "e":
                    nxt.setdefault(k, c)
        level = nxt
    return out


def translation_vector(g: Automorphism, max_level: int):
    """If every node of ``g`` on a given level carries the same permutation
    (for the first ``max_level`` levels), return those per-level
    permutations; otherwise None.  Finite-state kernels only."""
    out = []
    level = {g.key(): g}
    for n in range(1, max_level + 1):
        perms = {h.perm() for h in level.values()}
        if len(perms) > 1:
            return None
        out.append(perms.pop())
        nxt = {}
        for h in level.values():
            for x in range(h.arity):
                c = h.child(x)
                k = c.key()
                if k is None:
                    return None
                nxt.setdefault(k, c)
        level = nxt
    return out


# --------------------------------------------------------------------------
# JSON formats


def portrait_to_json(g: Automorphism, max_depth: int = 64) -> dict:
    """Nested ``{perm, children}`` with 1-based letters and permutations."""
    if max_depth < 0:
        raise ValueError("portrait deeper than max_depth")
    kids = {}
    for x in range(g.arity):
        c = g.child(x)
        if not is_trivial(c):
            kids[str(x + 1)] = portrait_to_json(c, max_depth - 1)
    return {"perm": [p + 1 for p in g.perm()], "children": kids}


def portrait_from_json(shape, obj, depth=0, pointer=""):
    from .errors import ConfigError
    if not isinstance(obj, dict) or "perm" not in obj:
        raise ConfigError(pointer, "portrait node needs a 'perm' list")
    q = shape.arity(depth + 1)
    perm = obj["perm"]
    if not isinstance(perm, list) or sorted(perm) != list(range(1, q + 1)):
        raise ConfigError(pointer + "/perm", f"expected a permutation of 1..{q}")
    kids = {}
    for k, v in (obj.get("children") or {}).items():
        try:
            a = int(k) - 1
        except ValueError:
            raise ConfigError(f"{pointer}/children/{k}", "child key must be a letter")
        if not 0 <= a < q:
            raise ConfigError(f"{pointer}/children/{k}", "letter out of range")
        kids[a] = portrait_from_json(shape, v, depth + 1, f"{pointer}/children/{k}")
    return portrait(shape, [p - 1 for p in perm], kids, depth)


def machine_from_json(obj, pointer=""):
    from .errors import ConfigError
    try:
        states = obj["states"]
        start = obj.get("start", 0)
    except (TypeError, KeyError):
        raise ConfigError(pointer, "machine needs 'states'")
    if not isinstance(states, list) or not states:
        raise ConfigError(pointer + "/states", "expected a nonempty list")
    perms, nexts = [], []
    q = None
    for i, st in enumerate(states):
        p = st.get("perm") if isinstance(st, dict) else None
        nx = st.get("next") if isinstance(st, dict) else None
        if not isinstance(p, list) or not isinstance(nx, list):
            raise ConfigError(f"{pointer}/states/{i}", "state needs 'perm' and 'next' lists")
        q = q or len(p)
        if sorted(p) != list(range(1, q + 1)):
            raise ConfigError(f"{pointer}/states/{i}/perm", f"expected a permutation of 1..{q}")
        if len(nx) != q or not all(isinstance(t, int) and 0 <= t < len(states) for t in nx):
            raise ConfigError(f"{pointer}/states/{i}/next", "bad successor indices")
        perms.append([a - 1 for a in p])
        nexts.append(nx)
    if not isinstance(start, int) or not 0 <= start < len(states):
        raise ConfigError(pointer + "/start", "start state out of range")
    return Machine(perms, nexts, q=q), start
