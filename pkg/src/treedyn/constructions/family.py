"""Product measures modified on a sparse set of levels, built so that a
minimal group with few active sections stays compatible with each of them.

Stage ``l`` works below depth ``d`` (1 at the first stage, the previous
stage depth after that).  For every pair of depth-``d`` prefixes ``y, y'``
it picks a transporter ``g_{y,y'}`` with ``g[y] = [y']`` and a clopen set
``A_{y,y'}`` inside ``[y]``: all cylinders of length ``n_l - 1`` on which
the transporter and the first ``l`` group elements have trivial sections.
``n_l`` is the least depth for which every such set keeps more than
``1 - 10^-l`` of the mass of ``[y]``.

Transporters are factored through the base prefix ``0^d``: with ``t_y``
mapping ``0^d`` to ``y`` we use ``g_{y,y'} = t_{y'} t_y^{-1}``, whose
section at ``y`` is ``u_{y'} u_y^{-1}`` for ``u_y`` the section of ``t_y``
at ``0^d``.  A contracting group has few distinct sections, so the clean
sets only depend on a handful of section-id sets and are memoized on them.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction

from ..errors import ConditionFailed, StageNotFound
from ..groups import GeneratedGroup, ball, transporters_from
from ..measures import (LevelDistribution, OmegaWord, OverridesMeasure, PeriodicOverride,
                        ProductMeasure, BernoulliMeasure, haar, hellinger, nonatomicity_certificate)
from ..tree import enumerate_level

DEFAULT_MAX_EXTRA_DEPTH = 40


def _clean_threshold(stage: int) -> Fraction:
    return 1 - Fraction(1, 10 ** stage)


def dirty_words(space, ids, depth: int, cache: dict) -> tuple:
    """Words of length ``depth`` where some element of ``ids`` has a
    nontrivial section, found by walking only nontrivial branches."""
    ids = frozenset(i for i in ids if i != space.e)
    key = (ids, depth)
    hit = cache.get(key)
    if hit is not None:
        return hit
    if not ids:
        out = ()
    elif depth == 0:
        out = ((),)
    else:
        found = []
        for x in range(space.q):
            below = dirty_words(space, {space.nexts[i][x] for i in ids}, depth - 1, cache)
            found.extend((x,) + w for w in below)
        out = tuple(found)
    cache[key] = out
    return out


@dataclass
class Stage:
    """Data of one stage: prefixes of length ``base_depth``, sets made of
    cylinders of length ``n - 1``."""
    index: int
    base_depth: int
    n: int
    bound: Fraction
    elements: list            # words of g^(1) .. g^(l)
    transporters: dict        # y -> word mapping 0^d to y
    worst_relative_mass: Fraction = Fraction(1)
    worst_pair: tuple = ()
    pair_classes: int = 0

    @property
    def extra(self) -> int:
        return self.n - 1 - self.base_depth

    def to_json(self):
        return {"stage": self.index, "base_depth": self.base_depth, "n": self.n,
                "bound": str(self.bound), "elements": [str(w) for w in self.elements],
                "transporters": {"".join(str(a + 1) for a in y): str(w) for y, w in self.transporters.items()},
                "worst_relative_mass": str(self.worst_relative_mass),
                "worst_pair": ["".join(str(a + 1) for a in y) for y in self.worst_pair],
                "pair_classes": self.pair_classes}


class _StageView:
    """Section bookkeeping for one stage over a concrete group.

    Transporter words can be as long as the level is wide, so they are
    never evaluated as whole elements: only their image of the base prefix
    and their section there are tracked, letter by letter, with suffixes
    shared between words memoized."""

    def __init__(self, G: GeneratedGroup, stage: Stage, cache: dict):
        self.G = G
        self.stage = stage
        sp = G.space
        self.sp = sp
        d = stage.base_depth
        self.base = (0,) * d
        memo = {(): (self.base, sp.e)}
        self.image = {}
        self.u = {}
        for y, w in sorted(stage.transporters.items(), key=lambda t: len(t[1].letters)):
            img, sec = self._track(w.letters, memo)
            self.image[y] = img
            self.u[y] = sec
        self.u_inv = {y: sp.inverse_id(i) for y, i in self.u.items()}
        self.g = [G.word_id(w) for w in stage.elements]
        self.cache = cache
        self.classes = {}
        for y, i in self.u.items():
            self.classes.setdefault(i, []).append(y)

    def _track(self, letters, memo):
        k = len(letters)
        while letters[len(letters) - k:] not in memo:
            k -= 1
        cur, sec = memo[letters[len(letters) - k:]]
        # the rightmost letter acts first
        for i in range(len(letters) - k - 1, -1, -1):
            lid = self.G.letter_id(*letters[i])
            sec = self.sp.compose_ids(self.sp.section_id(lid, cur), sec)
            cur = self.sp.apply_ids(lid, cur)
            memo[letters[i:]] = (cur, sec)
        return cur, sec

    def local_transporter(self, y, y2) -> int:
        """Section at ``y`` of the transporter from ``y`` to ``y2``."""
        return self.sp.compose_ids(self.u[y2], self.u_inv[y])

    def section_ids(self, y, u2: int) -> frozenset:
        s = self.sp.compose_ids(u2, self.u_inv[y])
        return frozenset([s] + [self.sp.section_id(g, y) for g in self.g])

    def dirty(self, y, y2, extra=None) -> tuple:
        extra = self.stage.extra if extra is None else extra
        return dirty_words(self.sp, self.section_ids(y, self.u[y2]), extra, self.cache)

    def pair_keys(self):
        """Distinct section-id sets over all pairs, with one witness pair each."""
        seen = {}
        for y in sorted(self.u):
            for u2, ys in self.classes.items():
                k = self.section_ids(y, u2)
                if k not in seen:
                    seen[k] = (y, ys[0])
        return seen


@dataclass
class MeasureFamily:
    G: GeneratedGroup
    betas: tuple                      # (beta_0, beta_1) used at every level of the index set
    stages: list
    base: ProductMeasure
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def index_set(self) -> list:
        return [s.n for s in self.stages]

    @property
    def step(self) -> int:
        ns = self.index_set
        return ns[-1] - ns[-2] if len(ns) > 1 else 1

    def index_positions(self, upto: int) -> list:
        """Built index set followed by the arithmetic continuation, up to ``upto``."""
        ns = [n for n in self.index_set if n <= upto]
        if self.index_set:
            n = self.index_set[-1] + self.step
            while n <= upto:
                ns.append(n)
                n += self.step
        return ns

    def view(self, l: int) -> _StageView:
        return _StageView(self.G, self.stages[l - 1], self._cache)

    def stage_measure(self, eta) -> OverridesMeasure:
        """Base measure with the first ``len(eta)`` index levels replaced."""
        ov = {self.stages[i].n: self.betas[int(b)] for i, b in enumerate(eta)}
        return OverridesMeasure(self.base, ov)

    def measure(self, omega) -> OverridesMeasure:
        """The product measure picking ``beta_{omega(n)}`` at index levels ``n``."""
        if not isinstance(omega, OmegaWord):
            omega = OmegaWord(tuple(omega), 0)
        cutoff = max(len(omega.word), self.index_set[-1])
        ov = {n: self.betas[omega.bit(n)] for n in self.index_positions(cutoff)}
        start = self.index_set[-1] + self.step
        while start <= cutoff:
            start += self.step
        periodic = PeriodicOverride(start, self.step, self.betas[omega.tail])
        return OverridesMeasure(self.base, ov, periodic)

    def to_json(self):
        return {"index_set": self.index_set, "continuation_step": self.step,
                "betas": [b.to_json() for b in self.betas],
                "stages": [s.to_json() for s in self.stages]}


def _ordered_elements(G: GeneratedGroup, count: int) -> list:
    r = 1
    while True:
        words = [b.word for b in ball(G, r) if b.word.letters]
        if len(words) >= count:
            return words[:count]
        r += 1


def _beta_pair(betas):
    b0, b1 = betas
    return (b0 if isinstance(b0, LevelDistribution) else LevelDistribution.of(*b0),
            b1 if isinstance(b1, LevelDistribution) else LevelDistribution.of(*b1))


def premise_report(G: GeneratedGroup, betas, delta: float = 0.05) -> dict:
    """Separation and nonatomicity premises for the beta pair."""
    b0, b1 = _beta_pair(betas)
    u = LevelDistribution.uniform(len(b0))
    hs = {"beta0_beta1": hellinger(b0, b1), "beta0_uniform": hellinger(b0, u),
          "beta1_uniform": hellinger(b1, u)}
    atoms = {}
    for name, b in (("beta0", b0), ("beta1", b1)):
        atoms[name] = nonatomicity_certificate(BernoulliMeasure(G.shape, b)).certified
    return {"hellinger": hs, "separated": all(v > delta for v in hs.values()), "delta": delta,
            "nonatomic": atoms}


def build_measure_family(G: GeneratedGroup, betas=(("1/3", "2/3"), ("2/3", "1/3")), stages: int = 3,
                         max_extra_depth: int = DEFAULT_MAX_EXTRA_DEPTH, log=None) -> MeasureFamily:
    """Grow the index set one stage at a time, taking the least admissible depth."""
    if not G.exact:
        raise ValueError("the builder needs an interned (finite-state) group")
    betas = _beta_pair(betas)
    fam = MeasureFamily(G, betas, [], haar(G.shape))
    elements = _ordered_elements(G, stages)
    for l in range(1, stages + 1):
        d = 1 if l == 1 else fam.stages[-1].n
        base = (0,) * d
        trans = transporters_from(G, base)
        if len(trans) != G.shape.arity(1) ** d:
            raise StageNotFound(l, f"level {d} is not transitive")
        st = Stage(l, d, d + 1, _clean_threshold(l), elements[:l], trans)
        fam.stages.append(st)
        view = fam.view(l)
        for y, img in view.image.items():
            if img != y:
                raise StageNotFound(l, f"transporter to {y} misses its target")
        keys = view.pair_keys()
        etas = list(itertools.product((0, 1), repeat=l - 1))
        measures = [fam.stage_measure(e) for e in etas]
        found = False
        for extra in range(0, max_extra_depth + 1):
            worst, worst_pair = Fraction(1), ()
            for k, pair in keys.items():
                dirty = dirty_words(G.space, k, extra, fam._cache)
                for mu in measures:
                    rel = 1 - _relative_mass(mu, d, dirty)
                    if rel < worst:
                        worst, worst_pair = rel, pair
                if worst <= st.bound:
                    break
            if worst > st.bound:
                st.n = d + 1 + extra
                st.worst_relative_mass = worst
                st.worst_pair = worst_pair
                st.pair_classes = len(keys)
                found = True
                break
        if not found:
            raise StageNotFound(l, f"no depth up to {d + 1 + max_extra_depth} keeps {st.bound} of every cylinder")
        if log:
            log(f"stage {l}: n = {st.n}, worst relative mass {float(worst):.6f}, {len(keys)} section classes")
    return fam


def _relative_mass(mu: ProductMeasure, d: int, words) -> Fraction:
    """``mu`` of the union of the given cylinders below depth ``d``,
    relative to the cylinder they hang from (product measures only)."""
    total = Fraction(0)
    for w in words:
        p = Fraction(1)
        for i, a in enumerate(w):
            p *= mu.level(d + 1 + i)[a]
        total += p
    return total


@dataclass
class CompatibilityReport:
    stages: list
    ok: bool
    conclusion: str = ""

    def to_json(self):
        return {"ok": self.ok, "stages": self.stages, "conclusion": self.conclusion}


def verify_compatibility(G: GeneratedGroup, mu: ProductMeasure, family: MeasureFamily, stages=None,
                         enumerate_up_to: int = 2, overrides: dict | None = None) -> CompatibilityReport:
    """Re-check mass, containment and constant Radon-Nikodym derivative
    for every stage pair under ``mu``, exactly.

    ``overrides`` maps ``(stage, y, y')`` to a replacement list of dirty
    words (for negative controls).  Raises :class:`ConditionFailed`."""
    stages = stages or list(range(1, len(family.stages) + 1))
    overrides = overrides or {}
    rows = []
    for l in stages:
        st = family.stages[l - 1]
        view = family.view(l)
        sp = G.space
        d = st.base_depth
        # containment: every transporter maps the base prefix to its target
        for y, img in view.image.items():
            if img != y:
                raise ConditionFailed("containment", y, "transporter misses its target")
        # levels strictly between the prefix and the set depth must be uniform
        for n in range(d + 1, st.n):
            if not mu.level(n).is_uniform:
                raise ConditionFailed("constant derivative", n, f"level {n} is not uniform under the measure")
        worst = Fraction(1)
        keys = view.pair_keys()
        for k, (y, y2) in keys.items():
            dirty = dirty_words(sp, k, st.extra, family._cache)
            rel = 1 - _relative_mass(mu, d, dirty)
            worst = min(worst, rel)
        for (l2, y, y2), dirty in overrides.items():
            if l2 == l:
                rel = 1 - _relative_mass(mu, d, dirty)
                worst = min(worst, rel)
                if rel <= Fraction(9, 10):
                    raise ConditionFailed("mass", (y, y2), f"relative mass {rel} is not above 0.9")
                _check_members(view, mu, y, y2, set(dirty), exhaustive=True)
        if worst <= Fraction(9, 10):
            raise ConditionFailed("mass", l, f"relative mass {worst} is not above 0.9")
        checked = 0
        if l <= enumerate_up_to:
            for y in sorted(view.u):
                for y2 in sorted(view.u):
                    checked += _check_members(view, mu, y, y2, set(view.dirty(y, y2)), exhaustive=True)
        else:
            for k, (y, y2) in keys.items():
                checked += _check_members(view, mu, y, y2, set(view.dirty(y, y2)), exhaustive=False)
        rows.append({"stage": l, "n": st.n, "worst_relative_mass": str(worst),
                     "pair_classes": len(keys), "members_checked": checked})
    return CompatibilityReport(rows, True, "ergodicity: implied by the compatibility conditions at every checked stage")


def _check_members(view: _StageView, mu, y, y2, dirty: set, exhaustive: bool, sample: int = 64) -> int:
    """Sections vanish below each member and the derivative ratio equals
    ``mu[y'] / mu[y]``; exhaustive over members or over the first ``sample``."""
    sp = view.sp
    st = view.stage
    s = view.local_transporter(y, y2)
    others = [sp.section_id(h, y) for h in view.g]
    target = mu.cylinder_measure(y2) / mu.cylinder_measure(y)
    count = 0
    for w in enumerate_level(view.G.shape, st.extra):
        if w in dirty:
            continue
        z = y + w
        for h in [s] + others:
            if sp.section_id(h, w) != sp.e:
                raise ConditionFailed("finitely many changed coordinates", z,
                                      "an element has a nontrivial section on a member cylinder")
        # the transporter maps y to y2 and acts below y through its section s
        gz = y2 + sp.apply_ids(s, w)
        if mu.cylinder_measure(gz) / mu.cylinder_measure(z) != target:
            raise ConditionFailed("constant derivative", z, "derivative differs from the cylinder ratio")
        count += 1
        if not exhaustive and count >= sample:
            break
    return count
