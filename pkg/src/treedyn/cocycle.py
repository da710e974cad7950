"""Radon-Nikodym cocycles and finitary-set diagnostics.

For ``g`` with root permutation ``gamma`` and sections ``alpha_n``, the
derivative ``d(mu o g)/d mu`` at ``x`` is the product over levels of
``mu_n(alpha_{n-1}(x_1..x_{n-1})[x_n]) / mu_n(x_n)``; the product is finite
once every later factor equals one, and :func:`rn_derivative` finds that
depth by walking ``x``.

The finitary sets of ``g`` at depth ``n``:

* ``plain``  - prefixes ``y`` whose section has a nontrivial root permutation;
* ``plus``   - those whose root permutation does not preserve ``mu_{n+1}``;
* ``bullet`` - prefixes below which some deeper section is nontrivial.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .automorphism import (Automorphism, ElementSpace, MachineState, RuleElement, apply_point, compose,
                           invert, is_trivial)
from .errors import CapExceeded, NoActivityBound, NotDecidable, NotStabilized
from .measures import (CLOSED_FORM, INCONCLUSIVE, PARTIAL_SUMS, BernoulliMeasure, ProductMeasure,
                       UniformMeasure, rng_for)
from .tree import DEFAULT_CAP, BoundaryPoint, check_cap, level_size

DEFAULT_RN_HORIZON = 64
DEFAULT_DELTA_GRID = (0.51, 0.6, 0.75, 0.9)

PLAIN, PLUS, BULLET = "plain", "plus", "bullet"


@dataclass(frozen=True)
class RadonNikodymValue:
    value: Fraction
    depth: int

    def __float__(self):
        return float(self.value)


def _measure_classes(mu: ProductMeasure):
    ts = mu.tail_structure()
    if ts is None:
        return None
    s, p = ts
    s = max(s, len(mu.shape.head))
    return s, math.lcm(p, mu.shape.period)


def _level_class(cls, n):
    s, p = cls
    return n if n <= s else s + 1 + (n - s - 1) % p


def uniform_beyond(mu: ProductMeasure, n: int) -> bool:
    """True when every level deeper than ``n`` is uniform (known in closed form)."""
    cls = _measure_classes(mu)
    if cls is None:
        return False
    s, p = cls
    return all(mu.level(m).is_uniform for m in range(n + 1, max(s, n) + p + 1))


def _stable_section(h: Automorphism) -> bool:
    if h.is_identity_fast():
        return True
    if isinstance(h, RuleElement):
        if h.rule.has_activity_bound:
            return not h.may_be_active()
        return False
    if h.key() is not None:
        return is_trivial(h)
    try:
        return not h.may_be_active()
    except (NotDecidable, NoActivityBound):
        return False


def rn_derivative(g: Automorphism, mu: ProductMeasure, x: BoundaryPoint,
                  horizon: int = DEFAULT_RN_HORIZON) -> RadonNikodymValue:
    """Exact ``d(mu o g)/d mu (x)``.

    The walk stops when the current section is trivial, when every deeper
    level of ``mu`` is uniform, or when the triple (section, tail phase,
    measure level class) repeats with all factors on the cycle equal to
    one.  Raises :class:`NotStabilized` otherwise.
    """
    cls = _measure_classes(mu)
    value = Fraction(1)
    last = 0
    seen = {}
    factors = []
    h = g
    n = 0
    while True:
        if _stable_section(h) or uniform_beyond(mu, n):
            return RadonNikodymValue(value, last)
        if cls is not None and n >= len(x.prefix):
            k = h.key()
            if k is not None:
                sig = (k, x.phase(n), _level_class(cls, n + 1))
                if sig in seen:
                    if all(f == 1 for f in factors[seen[sig]:]):
                        return RadonNikodymValue(value, last)
                    raise NotStabilized(horizon, "cycle with nontrivial factors")
                seen[sig] = n
        if n >= horizon:
            raise NotStabilized(horizon)
        a = x.letter(n + 1)
        lev = mu.level(n + 1)
        f = lev[h.perm()[a]] / lev[a]
        factors.append(f)
        if f != 1:
            value *= f
            last = n + 1
        h = h.child(a)
        n += 1


# --------------------------------------------------------------------------
# finitary sets


@dataclass
class FinitarySets:
    depth: int
    variant: str
    members: tuple | None
    measure: Fraction | None
    cardinality: int
    lower_bound: bool = False
    closed_form: bool = False


def _root_nontrivial(h):
    p = h.perm()
    return any(p[i] != i for i in range(len(p)))


def _active_between(h: Automorphism, lo, hi, lookahead_ok=False):
    """May some section of ``h`` at relative depth in [lo, hi] be nontrivial."""
    if h.is_identity_fast():
        return False
    try:
        return h.may_be_active(lo, hi)
    except (NotDecidable, NoActivityBound):
        return True


def f_sets(g: Automorphism, n: int, variant: str = PLAIN, mu: ProductMeasure | None = None,
           lookahead: int | None = None, cap: int | None = None) -> FinitarySets:
    """Exact finitary sets at depth ``n`` by pruned depth-first search.

    ``cap`` bounds the number of visited tree nodes.  The bullet variant
    needs an exact activity bound or a finite ``lookahead`` (the result is
    then a lower bound for the set).
    """
    if variant not in (PLAIN, PLUS, BULLET):
        raise ValueError(f"unknown variant {variant!r}")
    if variant == PLUS and mu is None:
        raise ValueError("the plus variant needs a measure")
    if variant == PLUS and uniform_beyond(mu, n):
        return FinitarySets(n, variant, (), Fraction(0), 0)
    # rules with closed forms skip searches that could not finish under the cap
    if isinstance(g, RuleElement) and level_size(g.shape, n) > (DEFAULT_CAP if cap is None else cap):
        cf = g.rule.fset_closed_form(n, variant, mu)
        if cf is not None:
            return FinitarySets(n, variant, None, cf[1], cf[0], closed_form=True)
    try:
        return _f_sets_search(g, n, variant, mu, lookahead, cap)
    except CapExceeded:
        if isinstance(g, RuleElement):
            cf = g.rule.fset_closed_form(n, variant, mu)
            if cf is not None:
                return FinitarySets(n, variant, None, cf[1], cf[0], closed_form=True)
        raise


def _f_sets_search(g, n, variant, mu, lookahead, cap):
    if isinstance(g, RuleElement):
        if not g.rule.has_activity_bound and variant == BULLET and lookahead is None:
            raise NoActivityBound(type(g.rule).__name__)
    cap = DEFAULT_CAP if cap is None else cap
    lower = False
    if variant == BULLET:
        exact = g.activity_exact
        if lookahead is not None and not exact:
            lower = True
        if lookahead is None and not exact and g.key() is None:
            try:
                g.may_be_active(0, 0)
            except NoActivityBound:
                raise
    hi_bullet = None if (lookahead is None or g.activity_exact) else lookahead

    out = []
    visited = 0
    stack = [(g, ())]
    while stack:
        h, y = stack.pop()
        visited += 1
        check_cap(visited, cap)
        d = len(y)
        if d == n:
            if variant == PLAIN:
                if _root_nontrivial(h):
                    out.append(y)
            elif variant == PLUS:
                lev = mu.level(n + 1)
                if not lev.preserved_by(h.perm()):
                    out.append(y)
            else:
                hi = None if hi_bullet is None else hi_bullet - n
                if hi is None or hi >= 1:
                    if lower and not h.activity_exact:
                        if _explicit_active(h, 1, hi, cap):
                            out.append(y)
                    elif _active_between(h, 1, hi):
                        out.append(y)
            continue
        if variant == BULLET:
            hi = None if hi_bullet is None else hi_bullet - d
            if hi is not None and hi < n - d + 1:
                continue
            keep = _active_between(h, n - d + 1, hi) if not lower else True
        else:
            keep = _active_between(h, n - d, n - d)
        if not keep:
            continue
        for a in range(h.arity - 1, -1, -1):
            stack.append((h.child(a), y + (a,)))
    out.sort()
    mass = mu.set_measure(out) if mu is not None else None
    return FinitarySets(n, variant, tuple(out), mass, len(out), lower_bound=lower)


def _explicit_active(h, lo, hi, cap):
    """Brute-force search for a nontrivial section at relative depth in [lo, hi]."""
    visited = 0
    stack = [(h, 0)]
    while stack:
        u, r = stack.pop()
        visited += 1
        check_cap(visited, cap)
        if r >= lo and _root_nontrivial(u):
            return True
        if r < hi:
            for a in range(u.arity):
                stack.append((u.child(a), r + 1))
    return False


# --------------------------------------------------------------------------
# finite-state spectral closed forms


def _constant_level(mu):
    if isinstance(mu, BernoulliMeasure):
        return mu.dist
    if isinstance(mu, UniformMeasure) and mu.shape.is_constant:
        return mu.level(1)
    return None


def _machine_matrices(g: MachineState, weights):
    """Transition matrices over non-identity states reachable from ``g``."""
    m = g.machine
    ident = m.identity_states()
    order, index = [], {}
    stack = [g.state]
    while stack:
        s = stack.pop()
        if s in index or s in ident:
            continue
        index[s] = len(order)
        order.append(s)
        for t in m.nexts[s]:
            stack.append(t)
    k = len(order)
    W = np.zeros((k, k))
    for s in order:
        for a, t in enumerate(m.nexts[s]):
            if t in index:
                W[index[s], index[t]] += weights[a]
    active = np.array([m.perms[s] != tuple(range(m.q)) for s in order])
    return order, W, active


def _coreachable(W, target):
    k = len(target)
    good = target.copy()
    changed = True
    while changed:
        changed = False
        for i in range(k):
            if not good[i] and np.any((W[i] > 0) & good):
                good[i] = True
                changed = True
    return good


def _radius(W, mask):
    idx = np.flatnonzero(mask)
    if len(idx) == 0:
        return 0.0
    sub = W[np.ix_(idx, idx)]
    return float(max(abs(np.linalg.eigvals(sub)))) if len(idx) else 0.0


def machine_growth(g: MachineState, mu: ProductMeasure | None = None):
    """Spectral data for a finite-state element.

    Returns ``(count_radius, mass_radius, bullet_mass_radius)``: the growth
    rate of ``|F_n|`` and the decay rates of ``mu(F_n)`` and ``mu(F_n bullet)``,
    each as the spectral radius of the transition matrix restricted to the
    states that can still reach an active state.  ``mass`` entries are None
    unless ``mu`` has a constant level distribution.
    """
    q = g.machine.q
    order, C, active = _machine_matrices(g, [1.0] * q)
    live = _coreachable(C, active)
    # states with an active state strictly below them
    below = np.array([np.any((C[i] > 0) & live) for i in range(len(order))]) if len(order) else active
    rc = _radius(C, live)
    dist = _constant_level(mu) if mu is not None else None
    if dist is None:
        return rc, None, None
    _, M, _ = _machine_matrices(g, [float(p) for p in dist.probs])
    return rc, _radius(M, live), _radius(M, _coreachable(C, below) if len(order) else below)


# --------------------------------------------------------------------------
# reports


@dataclass
class Verdict:
    name: str
    holds: bool | None
    evidence: str
    detail: str = ""

    def to_json(self):
        return {"property": self.name, "holds": self.holds, "evidence": self.evidence, "detail": self.detail}


@dataclass
class FinitarityRow:
    n: int
    size: int
    mass: Fraction | None
    size_plus: int | None
    mass_plus: Fraction | None
    size_bullet: int | None
    mass_bullet: Fraction | None


@dataclass
class FinitarityReport:
    rows: list
    deltas: tuple
    sum_mass: list = field(default_factory=list)
    sum_mass_plus: list = field(default_factory=list)
    sum_delta: dict = field(default_factory=dict)
    sum_delta_bullet: dict = field(default_factory=dict)
    verdicts: list = field(default_factory=list)

    def verdict(self, name):
        for v in self.verdicts:
            if v.name == name:
                return v
        raise KeyError(name)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "size", "mass", "size_plus", "mass_plus", "size_bullet", "mass_bullet",
                    "sum_mass", "sum_mass_plus"] + [f"sum_size_delta_{d}" for d in self.deltas])
        for i, r in enumerate(self.rows):
            w.writerow([r.n, r.size, _fmt(r.mass), _fmt(r.size_plus), _fmt(r.mass_plus), _fmt(r.size_bullet),
                        _fmt(r.mass_bullet), _fmt(self.sum_mass[i]), _fmt(self.sum_mass_plus[i])]
                       + [repr(self.sum_delta[d][i]) for d in self.deltas])
        return buf.getvalue()

    def to_json(self) -> dict:
        return {
            "rows": [{"n": r.n, "size": r.size, "mass": _fmt(r.mass), "size_plus": r.size_plus,
                      "mass_plus": _fmt(r.mass_plus), "size_bullet": r.size_bullet,
                      "mass_bullet": _fmt(r.mass_bullet)} for r in self.rows],
            "sum_mass": [_fmt(s) for s in self.sum_mass],
            "sum_mass_plus": [_fmt(s) for s in self.sum_mass_plus],
            "sum_size_delta": {str(d): self.sum_delta[d] for d in self.deltas},
            "verdicts": [v.to_json() for v in self.verdicts],
        }


def _fmt(v):
    if v is None:
        return None
    if isinstance(v, Fraction):
        return f"{v.numerator}/{v.denominator}"
    return v


def _trend(terms):
    """Heuristic reading of a nonnegative term sequence: 'converging',
    'diverging' or None.  Only used with the PartialSums evidence label."""
    t = [float(v) for v in terms]
    if not t or max(t) == 0:
        return "converging"
    half = t[len(t) // 2:]
    if max(half) <= 1e-6 * max(t):
        return "converging"
    nz = [v for v in half if v > 0]
    if len(nz) >= 3 and all(b >= a for a, b in zip(nz, nz[1:])) and nz[-1] >= nz[0]:
        return "diverging"
    return None


def finitarity_report(g: Automorphism, mu: ProductMeasure, horizon: int = 12,
                      deltas=DEFAULT_DELTA_GRID, lookahead: int | None = None,
                      cap: int | None = None, bullet: bool = True) -> FinitarityReport:
    """Per-level finitary-set data for ``n = 1..horizon`` plus verdicts.

    Closed-form verdicts come from the spectral data of finite-state
    kernels or from a rule's ``series_verdicts`` hook; everything else is
    labeled PartialSums or Inconclusive.
    """
    deltas = tuple(deltas)
    rows = []
    for n in range(1, horizon + 1):
        p = f_sets(g, n, PLAIN, mu, cap=cap)
        pp = f_sets(g, n, PLUS, mu, cap=cap)
        sb = mb = None
        if bullet:
            try:
                b = f_sets(g, n, BULLET, mu, lookahead=lookahead, cap=cap)
                sb, mb = b.cardinality, b.measure
            except NoActivityBound:
                pass
        rows.append(FinitarityRow(n, p.cardinality, p.measure, pp.cardinality, pp.measure, sb, mb))
    rep = FinitarityReport(rows, deltas)
    acc = acc_p = Fraction(0)
    sd = {d: 0.0 for d in deltas}
    sdb = {d: 0.0 for d in deltas}
    rep.sum_delta = {d: [] for d in deltas}
    rep.sum_delta_bullet = {d: [] for d in deltas}
    for r in rows:
        acc += r.mass
        acc_p += r.mass_plus
        rep.sum_mass.append(acc)
        rep.sum_mass_plus.append(acc_p)
        for d in deltas:
            sd[d] += r.size * d ** r.n
            rep.sum_delta[d].append(sd[d])
            if r.size_bullet is not None:
                sdb[d] += r.size_bullet * d ** r.n
                rep.sum_delta_bullet[d].append(sdb[d])
    rep.verdicts = _verdicts(g, mu, rows, deltas, horizon)
    return rep


def _verdicts(g, mu, rows, deltas, horizon):
    if is_identity_like(g):
        return [Verdict("finitary", True, CLOSED_FORM, "identity"),
                Verdict("mu_finitary", True, CLOSED_FORM, "identity"),
                Verdict("eventually_mu_preserving", True, CLOSED_FORM, "identity"),
                Verdict("purely_mu_finitary", True, CLOSED_FORM, "identity"),
                Verdict("w_subexponentially_bounded", True, CLOSED_FORM, "identity")]
    if isinstance(g, RuleElement) and hasattr(g.rule, "series_verdicts"):
        vs = g.rule.series_verdicts(mu, deltas)
        if vs is not None:
            return vs
    if isinstance(g, MachineState):
        return _machine_verdicts(g, mu, deltas)
    if g.key() is not None and not g.may_be_active(horizon + 1, None):
        return [Verdict("finitary", True, CLOSED_FORM, f"no nontrivial section below depth {horizon}")]
    out = []
    t = _trend([r.mass for r in rows])
    out.append(Verdict("mu_finitary", True if t == "converging" else None,
                       PARTIAL_SUMS if t == "converging" else INCONCLUSIVE,
                       f"partial sum {float(sum(r.mass for r in rows))!r} over {len(rows)} levels"))
    t = _trend([r.mass_plus for r in rows])
    out.append(Verdict("eventually_mu_preserving", True if t == "converging" else None,
                       PARTIAL_SUMS if t == "converging" else INCONCLUSIVE, ""))
    for d in deltas:
        t = _trend([r.size * d ** r.n for r in rows])
        out.append(Verdict(f"sum_size_delta<inf@{d}", {"converging": True, "diverging": False}.get(t),
                           PARTIAL_SUMS if t else INCONCLUSIVE, ""))
    return out


def is_identity_like(g):
    try:
        return is_trivial(g)
    except NotDecidable:
        return False


def _machine_verdicts(g: MachineState, mu, deltas):
    rc, rm, rb = machine_growth(g, mu)
    out = []
    fin = rc < 1e-9
    out.append(Verdict("finitary", fin, CLOSED_FORM,
                       "no cycle through active states" if fin else f"active states on a cycle (growth {rc:.6g})"))
    if rm is not None:
        out.append(Verdict("mu_finitary", rm < 1, CLOSED_FORM, f"mass decay rate {rm:.6g}"))
        out.append(Verdict("purely_mu_finitary", rb < 1, CLOSED_FORM, f"bullet mass decay rate {rb:.6g}"))
    else:
        out.append(Verdict("mu_finitary", None, INCONCLUSIVE, "measure has no constant level"))
    if uniform_beyond(mu, 0):
        out.append(Verdict("eventually_mu_preserving", True, CLOSED_FORM, "uniform levels"))
    elif rm is not None:
        out.append(Verdict("eventually_mu_preserving", rm < 1, CLOSED_FORM, "dominated by mass decay"))
    wsub = rc <= 1 + 1e-12
    out.append(Verdict("w_subexponentially_bounded", wsub, CLOSED_FORM, f"count growth rate {rc:.6g}"))
    for d in deltas:
        x = d * rc
        holds = True if x < 1 - 1e-12 else (False if x > 1 + 1e-12 else None)
        out.append(Verdict(f"sum_size_delta<inf@{d}", holds, CLOSED_FORM if holds is not None else INCONCLUSIVE,
                           f"delta * growth = {x:.6g}"))
    return out


# --------------------------------------------------------------------------
# cocycle identity


@dataclass
class ChainCheckResult:
    ok: bool
    worst_defect: Fraction
    witness: object = None
    checked: int = 0


def random_point(mu: ProductMeasure, rng: np.random.Generator, depth: int = 12, max_period: int = 2) -> BoundaryPoint:
    """A finitely represented point: ``depth`` letters drawn from ``mu``
    followed by a random periodic tail of period at most ``max_period``."""
    pre = []
    for n in range(1, depth + 1):
        cdf = np.cumsum(mu.level(n).floats())
        pre.append(int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right")))
    per = int(rng.integers(1, max_period + 1))
    shape = mu.shape
    span = len(shape.head) + math.lcm(shape.period, per)
    qmin = min(shape.arity(n) for n in range(depth + 1, depth + 1 + span + 1))
    tail = tuple(int(rng.integers(0, qmin)) for _ in range(per))
    return BoundaryPoint(shape, tuple(pre), tail)


def cocycle_chain_check(g: Automorphism, h: Automorphism, mu: ProductMeasure, samples: int = 100,
                        seed: int = 0, horizon: int = DEFAULT_RN_HORIZON) -> ChainCheckResult:
    """Check ``rn(gh, x) = rn(g, hx) rn(h, x)`` exactly on sampled points."""
    rng = rng_for(seed, 1)
    gh = compose(g, h)
    worst = Fraction(0)
    witness = None
    for _ in range(samples):
        x = random_point(mu, rng)
        lhs = rn_derivative(gh, mu, x, horizon).value
        hx = apply_point(h, x)
        rhs = rn_derivative(g, mu, hx, horizon).value * rn_derivative(h, mu, x, horizon).value
        d = abs(lhs - rhs)
        if d > worst:
            worst, witness = d, x
    return ChainCheckResult(worst == 0, worst, witness, samples)


def inverse_check(g: Automorphism, mu: ProductMeasure, x: BoundaryPoint, horizon=DEFAULT_RN_HORIZON) -> bool:
    """``rn(g, x) * rn(g^-1, g x) == 1`` exactly."""
    gx = apply_point(g, x)
    return rn_derivative(g, mu, x, horizon).value * rn_derivative(invert(g), mu, gx, horizon).value == 1
