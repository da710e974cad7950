"""Flip groups acting on consecutive blocks of coordinates.

A Bernoulli measure tilted towards 0 makes "fewer than half ones in the
block" a likely event, so flipping a whole block moves a big set off
itself.  The sets involved are finite products of per-block count
constraints; every disjointness and mass statement below is computed
exactly from binomial coefficients, never sampled.

Coordinates are 1-based throughout this module, bits are 0/1.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

from ..automorphism import (Automorphism, changed_levels, flip_portrait, portrait,
                            translation_vector)
from ..cocycle import rn_derivative, random_point
from ..errors import ScheduleOverflow
from ..groups import GeneratedGroup, ball, supported_in
from ..measures import BernoulliMeasure, ProductMeasure, binomial_mass, rng_for
from ..tree import BINARY
from .rules import NamedConstruction, _p1


def default_eps(k: int) -> Fraction:
    return Fraction(1, 2 ** (k + 2))


def minority_mass(p1: Fraction, length: int) -> Fraction:
    """Probability that fewer than half of ``length`` letters are 1."""
    return binomial_mass(p1, length, range(0, (length + 1) // 2))


def least_block_length(p1: Fraction, eps: Fraction, min_len: int = 1, max_len: int = 4096) -> int:
    """Smallest block length whose majority-or-tie event has mass below ``eps``."""
    for n in range(min_len, max_len + 1):
        if 1 - minority_mass(p1, n) < eps:
            return n
    raise ScheduleOverflow(f"no block length up to {max_len} reaches eps={eps}")


# --------------------------------------------------------------------------
# product sets


@dataclass(frozen=True)
class BlockConstraint:
    """Words on ``coords`` with fewer than half ones on ``counted`` and
    the prescribed values on ``fixed``."""
    coords: tuple
    counted: tuple
    fixed: tuple = ()

    def contains(self, bits: dict) -> bool:
        ones = sum(bits[c] for c in self.counted)
        return 2 * ones < len(self.counted) and all(bits[c] == v for c, v in self.fixed)


@dataclass
class ProductSet:
    """Cylinder set of depth ``depth``: a product of block constraints,
    coordinates outside every block are unconstrained."""
    depth: int
    blocks: list

    def free_coords(self) -> set:
        used = set()
        for b in self.blocks:
            used.update(b.counted)
            used.update(c for c, _ in b.fixed)
        return set(range(1, self.depth + 1)) - used

    def contains(self, word) -> bool:
        bits = {i + 1: v for i, v in enumerate(word)}
        return all(b.contains(bits) for b in self.blocks)

    def with_fixed(self, block_index: int, coord: int, value: int) -> "ProductSet":
        blocks = list(self.blocks)
        b = blocks[block_index]
        blocks[block_index] = BlockConstraint(b.coords, b.counted, b.fixed + ((coord, value),))
        return ProductSet(self.depth, blocks)

    def mass(self, p1: Fraction) -> Fraction:
        out = Fraction(1)
        for b in self.blocks:
            out *= _block_meet(b, b, frozenset(), p1)
        return out

    def meet_flipped_mass(self, other: "ProductSet", flips, p1: Fraction) -> Fraction:
        """Mass of ``self`` intersected with ``other`` flipped on ``flips``."""
        if [b.coords for b in self.blocks] != [b.coords for b in other.blocks]:
            raise ValueError("product sets use different block layouts")
        flips = frozenset(flips)
        out = Fraction(1)
        for b, b2 in zip(self.blocks, other.blocks):
            out *= _block_meet(b, b2, flips, p1)
            if out == 0:
                return out
        return out


def _block_meet(s: BlockConstraint, t: BlockConstraint, flips, p1: Fraction) -> Fraction:
    """Mass, on the block's own coordinates, of ``{x in s : x^flips in t}``.

    Coordinates sharing the same role are interchangeable, so we sum over
    the number of ones in each role class."""
    sf, tf = dict(s.fixed), dict(t.fixed)
    sc, tc = set(s.counted), set(t.counted)
    roles = {}
    for c in s.coords:
        key = (c in sc, c in tc, c in flips, sf.get(c), tf.get(c))
        roles[key] = roles.get(key, 0) + 1
    roles = list(roles.items())
    q1 = 1 - p1
    choices = []
    for (in_s, in_t, fl, fs, ft), m in roles:
        opts = []
        for a in range(m + 1):
            if fs is not None and a != (m if fs else 0):
                continue
            # x = 1 on a coords; after flipping it is 1 on m - a of them
            after = m - a if fl else a
            if ft is not None and after != (m if ft else 0):
                continue
            opts.append(a)
        if not opts:
            return Fraction(0)
        choices.append(opts)
    total = Fraction(0)
    for pick in itertools.product(*choices):
        ones_s = ones_t = ones = 0
        weight = 1
        for ((in_s, in_t, fl, _, _), m), a in zip(roles, pick):
            weight *= math.comb(m, a)
            ones += a
            if in_s:
                ones_s += a
            if in_t:
                ones_t += (m - a) if fl else a
        if 2 * ones_s < len(s.counted) and 2 * ones_t < len(t.counted):
            total += weight * p1 ** ones * q1 ** (len(s.coords) - ones)
    return total


def flipped_coords(g: Automorphism, depth: int):
    """Coordinates a level-uniform flip changes, or None for other elements."""
    tv = translation_vector(g, depth)
    if tv is None:
        return None
    return frozenset(n for n, p in enumerate(tv, 1) if p is not None and tuple(p) != tuple(range(len(p))))


# --------------------------------------------------------------------------
# certificates


@dataclass
class DisjointnessResult:
    ok: bool
    checked: int
    witness: str | None = None
    detail: str = ""

    def to_json(self):
        return {"ok": self.ok, "checked": self.checked, "witness": self.witness, "detail": self.detail}


def wandering_check(G: GeneratedGroup, Y: ProductSet, radius: int = 3) -> DisjointnessResult:
    """``gY`` misses ``Y`` for every nonidentity ``g`` of the ball, exactly.

    Disjointness at the truncation depth implies it for any refinement."""
    checked = 0
    for be in ball(G, radius):
        if not be.word.letters:
            continue
        flips = flipped_coords(be.element, Y.depth)
        if flips is None:
            return DisjointnessResult(False, checked, str(be.word), "element is not a block flip")
        checked += 1
        if Y.meet_flipped_mass(Y, flips, Fraction(1, 2)) != 0:
            return DisjointnessResult(False, checked, str(be.word), "gY meets Y")
    return DisjointnessResult(True, checked, None, f"radius {radius}, depth {Y.depth}")


def saturation_disjoint(G: GeneratedGroup, A: ProductSet, B: ProductSet, radius: int = 3) -> DisjointnessResult:
    """Unions of ``gA`` and of ``gB`` over the ball do not meet."""
    elems = []
    for be in ball(G, radius):
        flips = flipped_coords(be.element, A.depth)
        if flips is None:
            return DisjointnessResult(False, 0, str(be.word), "element is not a block flip")
        elems.append((be.word, flips))
    checked = 0
    for (w1, f1), (w2, f2) in itertools.product(elems, elems):
        checked += 1
        # gA meets g'B  iff  A meets g^-1 g' B, and flips commute
        if A.meet_flipped_mass(B, f1 ^ f2, Fraction(1, 2)) != 0:
            return DisjointnessResult(False, checked, f"{w1} / {w2}", "gA meets g'B")
    return DisjointnessResult(True, checked, None, f"radius {radius}, {len(elems)} elements")


def invariance_check(elements: dict, Y: ProductSet) -> DisjointnessResult:
    """Each element only changes coordinates that ``Y`` leaves free."""
    free = Y.free_coords()
    checked = 0
    for name, h in elements.items():
        lv = changed_levels(h, Y.depth)
        checked += 1
        bad = [n for n in lv if n not in free]
        if bad:
            return DisjointnessResult(False, checked, name, f"changes constrained coordinate {bad[0]}")
    return DisjointnessResult(True, checked, None, "only free coordinates change")


@dataclass
class RNBoundResult:
    ok: bool
    bound: Fraction
    minimum: Fraction
    checked: int

    def to_json(self):
        return {"ok": self.ok, "bound": str(self.bound), "minimum": str(self.minimum), "checked": self.checked}


def rn_flip_bound(elements: dict, mu: ProductMeasure, samples: int = 64, seed: int = 0,
                  depth: int = 64) -> RNBoundResult:
    """``d(mu o h)/d mu >= mu_1(1)/mu_1(0)`` for single-coordinate flips:
    both values of the flipped letter, then sampled points."""
    p1 = _p1(mu)
    bound = p1 / (1 - p1)
    lowest = None
    checked = 0
    rng = rng_for(seed, 4)
    for h in elements.values():
        lv = changed_levels(h, depth)
        pts = []
        for v in (0, 1):
            w = [0] * (max(lv) if lv else 1)
            if lv:
                w[lv[0] - 1] = v
            pts.append(_point(w))
        pts += [random_point(mu, rng, depth=max(lv, default=12) + 4) for _ in range(samples)]
        for x in pts:
            r = rn_derivative(h, mu, x).value
            checked += 1
            lowest = r if lowest is None else min(lowest, r)
    return RNBoundResult(lowest is not None and lowest >= bound, bound, lowest, checked)


def _point(word):
    from ..tree import BoundaryPoint
    return BoundaryPoint(BINARY, tuple(word), (0,))


def cylinder_flip(y, level: int) -> Automorphism:
    """Flip of coordinate ``level`` on the cylinder ``[y]`` only."""
    y = tuple(y)
    if level <= len(y):
        raise ValueError("the flipped coordinate must lie below the cylinder")
    node = flip_portrait(BINARY, {level: True}, len(y))
    for i in range(len(y) - 1, -1, -1):
        node = portrait(BINARY, None, {y[i]: node}, i)
    return node


# --------------------------------------------------------------------------
# constructions


def _bernoulli_p1(mu):
    if not isinstance(mu, BernoulliMeasure) or len(mu.dist) != 2:
        raise ValueError("a binary Bernoulli measure is required")
    p1 = mu.dist[1]
    if not p1 < mu.dist[0]:
        raise ValueError("the measure must put more mass on 0 than on 1")
    return p1


def block_schedule(p1: Fraction, stages: int, free_first: bool, eps=default_eps):
    """Depths ``1 = n_0 < n_1 < ...`` for ``stages + 1`` blocks.  With
    ``free_first`` each block starts with an unconstrained coordinate."""
    ns = [1]
    lengths = []
    for k in range(stages + 1):
        L = least_block_length(p1, eps(k))
        lengths.append(L)
        ns.append(ns[-1] + L + (1 if free_first else 0))
    return ns, lengths


@dataclass
class BlockData:
    p1: Fraction
    schedule: list
    eps: list
    block_masses: list
    Y: ProductSet
    mass_lower_bound: Fraction
    extra: dict = field(default_factory=dict)

    def to_json(self):
        return {"p1": str(self.p1), "schedule": self.schedule, "eps": [str(e) for e in self.eps],
                "block_masses": [str(m) for m in self.block_masses],
                "mass_lower_bound": str(self.mass_lower_bound), "depth": self.Y.depth}


def dissipative_group(mu: ProductMeasure, stages: int = 3) -> NamedConstruction:
    """Commuting flips ``gamma_k`` (coordinate ``k`` plus block ``k``) and a
    positive-mass wandering set ``Y``."""
    p1 = _bernoulli_p1(mu)
    ns, _ = block_schedule(p1, stages, free_first=False)
    depth = ns[-1]
    blocks = []
    masses = []
    for k in range(stages + 1):
        coords = tuple(range(ns[k] + 1, ns[k + 1] + 1))
        blocks.append(BlockConstraint(coords, coords))
        masses.append(minority_mass(p1, len(coords)))
    Y = ProductSet(depth, blocks)
    gens = {}
    for k in range(1, stages + 1):
        levels = {c: True for c in blocks[k].coords}
        levels[k] = True
        gens[f"g{k}"] = flip_portrait(BINARY, levels)
    G = GeneratedGroup(gens, BINARY, "dissipative")
    lower = math.prod(masses, start=Fraction(1)) * (1 - default_eps(stages + 1) * 2)
    data = BlockData(p1, ns, [default_eps(k) for k in range(stages + 1)], masses, Y, lower)
    return NamedConstruction("example-4.4", gens, G, {"blocks": data},
                             ["Y is wandering", "mu(Y) > 0", "G is not conservative"])


def _split_block(Y: ProductSet):
    """First block whose counted part allows both values of its first
    counted coordinate."""
    for i, b in enumerate(Y.blocks):
        if len(b.counted) >= 3:
            return i, b.counted[0]
    raise ValueError("no block long enough to split")


def conservative_nonergodic_group(mu: ProductMeasure, stages: int = 3,
                                  weakly_branch: bool = False) -> NamedConstruction:
    """Commuting flips ``G`` with a wandering set ``Ytilde`` plus the
    free-coordinate flips ``H`` leaving it invariant; ``M = <G, H>``."""
    p1 = _bernoulli_p1(mu)
    ns, _ = block_schedule(p1, stages, free_first=True)
    depth = ns[-1]
    blocks = []
    masses = []
    for k in range(stages + 1):
        coords = tuple(range(ns[k] + 1, ns[k + 1] + 1))
        counted = coords[1:]
        blocks.append(BlockConstraint(coords, counted))
        masses.append(minority_mass(p1, len(counted)))
    Yt = ProductSet(depth, blocks)
    g_gens = {}
    for k in range(1, stages + 1):
        levels = {c: True for c in blocks[k].counted}
        levels[k] = True
        g_gens[f"g{k}"] = flip_portrait(BINARY, levels)
    h_gens = {f"d{k}": flip_portrait(BINARY, {ns[k] + 1: True}) for k in range(1, stages + 1)}
    bi, coord = _split_block(Yt)
    A = Yt.with_fixed(bi, coord, 0)
    B = Yt.with_fixed(bi, coord, 1)
    G = GeneratedGroup(g_gens, BINARY, "G")
    H = GeneratedGroup(h_gens, BINARY, "H")
    lower = math.prod(masses, start=Fraction(1)) * (1 - default_eps(stages + 1) * 2)
    data = BlockData(p1, ns, [default_eps(k) for k in range(stages + 1)], masses, Yt, lower,
                     {"A": A, "B": B, "split": coord, "A_mass": A.mass(p1), "B_mass": B.mass(p1)})
    elements = dict(g_gens)
    elements.update(h_gens)
    name = "example-4.5"
    claims = ["M is conservative", "M is not ergodic", "Ytilde is H-invariant"]
    out = NamedConstruction(name, elements, GeneratedGroup(elements, BINARY, "M"),
                            {"blocks": data, "G": G, "H": H, "free": [n + 1 for n in ns[1:-1]]}, claims)
    if weakly_branch:
        out.name = "example-4.6"
        out.claims = claims + ["M is weakly branch"]
        out.data["branch_flip"] = lambda k, y: _branch_flip(ns, k, y)
    return out


def weakly_branch_nonergodic_group(mu: ProductMeasure, stages: int = 3) -> NamedConstruction:
    """Same as the conservative group with each ``delta_k`` split into
    flips ``delta_{k,y}`` acting on one cylinder ``[y]``, ``|y| = n_k``."""
    return conservative_nonergodic_group(mu, stages, weakly_branch=True)


def _branch_flip(ns, k, y):
    if len(y) != ns[k]:
        raise ValueError(f"y must have length n_{k} = {ns[k]}")
    return cylinder_flip(y, ns[k] + 1)


def branch_flips(construction: NamedConstruction, k: int, limit: int | None = 4096) -> dict:
    """All ``delta_{k,y}`` as named elements, refusing more than ``limit``."""
    ns = construction.data["blocks"].schedule
    n = ns[k]
    if limit is not None and 2 ** n > limit:
        raise ValueError(f"2^{n} cylinder flips exceed the limit {limit}")
    f = construction.data["branch_flip"]
    return {f"d{k}_" + "".join(map(str, y)): f(k, y) for y in itertools.product((0, 1), repeat=n)}


def product_check(construction: NamedConstruction, k: int, samples: int = 16, seed: int = 0) -> bool:
    """The product of all ``delta_{k,y}`` agrees with ``delta_k`` on sampled prefixes."""
    from ..automorphism import apply_prefix
    ns = construction.data["blocks"].schedule
    f = construction.data["branch_flip"]
    dk = construction.elements[f"d{k}"]
    rng = rng_for(seed, 5)
    depth = ns[k] + 2
    for _ in range(samples):
        w = tuple(int(b) for b in rng.integers(0, 2, depth))
        # only the cylinder flip of w's own prefix can act on w
        if apply_prefix(f(k, w[:ns[k]]), w) != apply_prefix(dk, w):
            return False
    return True


def rigid_witnesses(construction: NamedConstruction, k: int = 1) -> list:
    """Each ``delta_{k,y}`` is supported in ``[y]``: nontrivial rigid stabilizers."""
    out = []
    for name, h in branch_flips(construction, k).items():
        y = tuple(int(c) for c in name.split("_")[1])
        out.append((y, supported_in(h, y)))
    return out
