"""Rule elements whose sections are decided by counting letters in a prefix.

All sets here are unions of binary "count classes" (words of a given
length with a given number of ones), possibly plus an initial segment of
one class in lexicographic order.  Membership, activity bounds, sizes and
exact masses then need binomial coefficients only.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from scipy.stats import binom

from ..automorphism import Rule, RuleElement
from ..cocycle import Verdict, uniform_beyond
from ..errors import ScheduleOverflow, SeparationNotFound
from ..measures import (CLOSED_FORM, INCONCLUSIVE, BernoulliMeasure, ProductMeasure, UniformMeasure,
                        binomial_mass, entropy, kakutani_classify, ORTHOGONAL, parse_rational,
                        format_rational, LevelDistribution)
from ..groups import GeneratedGroup
from ..tree import BINARY

FLIP = (1, 0)


@dataclass
class NamedConstruction:
    name: str
    elements: dict = field(default_factory=dict)
    group: GeneratedGroup | None = None
    data: dict = field(default_factory=dict)
    claims: list = field(default_factory=list)


def _p1(mu: ProductMeasure) -> Fraction:
    """Mass of letter 1 for a binary Bernoulli or uniform measure."""
    if isinstance(mu, BernoulliMeasure) and len(mu.dist) == 2:
        return mu.dist[1]
    if isinstance(mu, UniformMeasure) and mu.shape == BINARY:
        return Fraction(1, 2)
    return None


def word_rank(y) -> int:
    """Rank of ``y`` among words of its length and weight, lexicographically."""
    m = len(y)
    ones = sum(y)
    r = 0
    for i, b in enumerate(y):
        if b == 1:
            r += math.comb(m - i - 1, ones)
            ones -= 1
    return r


@dataclass
class CountSet:
    """Words of length ``m`` whose weight lies in ``full``, plus, for each
    ``j -> r`` in ``partial``, the first ``r`` words of weight ``j`` in
    lexicographic order."""

    m: int
    full: frozenset
    partial: dict = field(default_factory=dict)

    def contains(self, y) -> bool:
        w = sum(y)
        if w in self.full:
            return True
        r = self.partial.get(w)
        return r is not None and word_rank(y) < r

    def may_extend_into(self, y, complement=False) -> bool:
        """Some length-``m`` extension of ``y`` lies in the set (or its complement)."""
        w = sum(y)
        free = self.m - len(y)
        for j in range(w, w + free + 1):
            r = self.partial.get(j)
            if not complement:
                if j in self.full or (r is not None and self._min_rank(y, j) < r):
                    return True
            else:
                if j in self.full:
                    continue
                if r is None or self._max_rank(y, j) >= r:
                    return True
        return False

    def _min_rank(self, y, j):
        rest = j - sum(y)
        return word_rank(tuple(y) + (0,) * (self.m - len(y) - rest) + (1,) * rest)

    def _max_rank(self, y, j):
        rest = j - sum(y)
        return word_rank(tuple(y) + (1,) * rest + (0,) * (self.m - len(y) - rest))

    def size(self) -> int:
        return sum(math.comb(self.m, j) for j in self.full) + sum(self.partial.values())

    def mass(self, p1: Fraction) -> Fraction:
        p1 = Fraction(p1)
        p0 = 1 - p1
        tot = binomial_mass(p1, self.m, sorted(self.full))
        for j, r in self.partial.items():
            tot += r * p1 ** j * p0 ** (self.m - j)
        return tot

    def classes(self) -> list:
        return sorted(set(self.full) | set(self.partial))

    def counts(self) -> list:
        return sorted(self.full)


def count_interval(center, n, eps) -> range:
    """Counts ``j`` with ``|j/n - center| < eps`` (exact)."""
    lo = center * n - eps * n
    hi = center * n + eps * n
    jlo = max(0, math.floor(lo) + 1)
    jhi = min(n, math.ceil(hi) - 1)
    return range(jlo, jhi + 1) if jlo <= jhi else range(0)


# --------------------------------------------------------------------------
# factorial element


class FactorialRule(Rule):
    """Flip the next letter at depth ``k!`` when the letters at positions
    ``(k-1)!+1 .. k!`` are all zero."""

    exact_activity = True

    @staticmethod
    def _k_of(n):
        k, f = 2, 2
        while f < n:
            k += 1
            f *= k
        return k if f == n else None

    def perm(self, prefix):
        n = len(prefix)
        k = self._k_of(n)
        if k is None:
            return None
        lo = math.factorial(k - 1)
        return FLIP if not any(prefix[lo:n]) else None

    def may_be_active(self, prefix, lo, hi):
        p = len(prefix)
        k = 2
        while True:
            f = math.factorial(k)
            if hi is not None and f > hi:
                return False
            if f >= max(lo, p):
                start = math.factorial(k - 1)
                if not any(prefix[start:min(f, p)]):
                    return True
                if start >= p:
                    return True
            k += 1

    def fset_closed_form(self, n, variant, measure):
        if variant == "plain":
            k = self._k_of(n)
            if k is None:
                return 0, Fraction(0)
            a = math.factorial(k - 1)
            mass = None
            if measure is not None:
                mass = Fraction(1)
                for i in range(a + 1, n + 1):
                    mass *= measure.level(i)[0]
            return 2 ** a, mass
        if variant == "bullet":
            return 2 ** n, (Fraction(1) if measure is not None else None)
        return None

    def series_verdicts(self, mu, deltas):
        out = [
            Verdict("finitary", False, CLOSED_FORM, "active at every depth k!"),
            Verdict("subexponentially_bounded", False, CLOSED_FORM, "|F_n bullet| = 2^n"),
            Verdict("w_subexponentially_bounded", True, CLOSED_FORM,
                    "sum_k (2 delta^k)^((k-1)!) < inf for delta in (0,1)"),
            Verdict("purely_mu_finitary", False, CLOSED_FORM, "mu(F_n bullet) = 1 for all n"),
        ]
        for d in deltas:
            out.append(Verdict(f"sum_size_delta<inf@{d}", True, CLOSED_FORM, "(2 delta^k)^((k-1)!) summable"))
        p1 = _p1(mu)
        if p1 is not None:
            out.append(Verdict("mu_finitary", True, CLOSED_FORM,
                               f"sum_k mu_0^(k!-(k-1)!) with mu_0 = {format_rational(1 - p1)} converges"))
        else:
            out.append(Verdict("mu_finitary", None, INCONCLUSIVE, "non-Bernoulli measure"))
        if uniform_beyond(mu, 0):
            out.append(Verdict("eventually_mu_preserving", True, CLOSED_FORM, "uniform levels"))
        elif p1 is not None:
            out.append(Verdict("eventually_mu_preserving", True, CLOSED_FORM, "implied by mu-finitary"))
        return out


def factorial_element() -> NamedConstruction:
    g = RuleElement(BINARY, FactorialRule())
    G = GeneratedGroup({"g": g}, BINARY, name="factorial")
    return NamedConstruction("factorial", {"g": g}, G, {},
                             ["F_n empty off factorials", "|F_{k!}| = 2^((k-1)!)", "not purely finitary"])


# --------------------------------------------------------------------------
# typical-set elements


class WindowRule(Rule):
    """``gamma`` on every node of depth ``n - 1``; on depth ``m`` in
    ``[n, top]`` apply ``gamma`` exactly on the set ``B_m``; identity below."""

    exact_activity = True

    def __init__(self, n, sets: dict):
        self.n = n
        self.sets = sets
        self.top = max(sets)

    def perm(self, prefix):
        m = len(prefix)
        if m == self.n - 1:
            return FLIP
        s = self.sets.get(m)
        if s is not None and m >= self.n and s.contains(prefix):
            return FLIP
        return None

    def may_be_active(self, prefix, lo, hi):
        p = len(prefix)
        lo = max(lo, p)
        hi = self.top if hi is None else min(hi, self.top)
        if lo <= self.n - 1 <= hi:
            return True
        for m in range(max(lo, self.n), hi + 1):
            s = self.sets.get(m)
            if s is not None and s.may_extend_into(prefix):
                return True
        return False

    def fset_closed_form(self, n, variant, measure):
        if variant != "plain":
            return None
        p1 = _p1(measure) if measure is not None else None
        if n == self.n - 1:
            return 2 ** n, (Fraction(1) if measure is not None else None)
        s = self.sets.get(n)
        if s is None or n < self.n:
            return 0, Fraction(0)
        return s.size(), (s.mass(p1) if p1 is not None else None)


def typical_count_set(p1: Fraction, m: int) -> CountSet:
    """A set of mass at least ``m^-2`` made of words whose probability
    brackets ``e^{-mh}``.

    Words are drawn one at a time (lexicographically within a weight
    class) from the two classes nearest to ``e^{-mh}`` from above and from
    below, taking from the upper class whenever the running mean word
    probability is at most ``e^{-mh}``.  The mean then stays near
    ``e^{-mh}``, so the size tracks ``m^-2 e^{mh}`` without the jumps that
    whole-class selection produces.
    """
    p1 = Fraction(p1)
    p0 = 1 - p1
    l0, l1 = math.log(p0), math.log(p1)
    h = -(float(p0) * l0 + float(p1) * l1)
    target = Fraction(1, m * m)

    def dev(j):
        return ((m - j) * l0 + j * l1) / m + h

    order = sorted(range(m + 1), key=lambda j: (abs(dev(j)), j))
    if abs(dev(order[0])) < 1e-12:
        above = below = [order[0]]
    else:
        above = [j for j in order if dev(j) > 0]
        below = [j for j in order if dev(j) < 0]
    taken = {}
    mass = Fraction(0)
    count = 0
    ref = math.exp(-m * h)
    while mass < target:
        use_above = count == 0 or float(mass) / count <= ref
        pool = above if use_above else below
        pool = [j for j in pool if taken.get(j, 0) < math.comb(m, j)] or \
            [j for j in order if taken.get(j, 0) < math.comb(m, j)]
        j = pool[0]
        taken[j] = taken.get(j, 0) + 1
        mass += p1 ** j * p0 ** (m - j)
        count += 1
    full = frozenset(j for j, r in taken.items() if r == math.comb(m, j))
    return CountSet(m, full, {j: r for j, r in taken.items() if j not in full})


def sm_elements(mu: ProductMeasure, window=(8, 16)) -> NamedConstruction:
    """Elements ``g_n`` for ``n`` in the window, truncated below the window top."""
    p1 = _p1(mu)
    if p1 is None or p1 == Fraction(1, 2):
        raise ValueError("a non-uniform binary Bernoulli measure is required")
    lo, hi = window
    sets = {m: typical_count_set(p1, m) for m in range(lo, hi + 1)}
    h = entropy(mu.dist)
    elements = {}
    for n in range(lo, hi + 1):
        elements[f"g{n}"] = RuleElement(BINARY, WindowRule(n, {m: s for m, s in sets.items() if m >= n}))
    G = GeneratedGroup(elements, BINARY, name="typical-set")
    rows = []
    p0 = 1 - p1
    for m, s in sets.items():
        pinch = max(abs(((m - j) * math.log(p0) + j * math.log(p1)) / m + h) for j in s.classes())
        rows.append({"m": m, "size": s.size(), "mass": s.mass(p1), "pinch": pinch})
    return NamedConstruction("typical-set", elements, G, {"sets": sets, "entropy": h, "rows": rows, "p1": p1},
                             ["mu(B_m) >= m^-2", "e^-h is a bifurcation point for sum |F_m| delta^m"])


def bifurcation_probe(construction: NamedConstruction, n: int | None = None, offset: float = 0.05):
    """Terms ``|F_m(g_n)| delta^m`` over the window for ``delta = e^-h +- offset``."""
    sets = construction.data["sets"]
    h = construction.data["entropy"]
    ms = sorted(sets)
    n = ms[0] if n is None else n
    out = {}
    for sign in (1, -1):
        d = math.exp(-h) + sign * offset
        terms = [sets[m].size() * d ** m for m in ms if m >= n]
        sums = []
        acc = 0.0
        for t in terms:
            acc += t
            sums.append(acc)
        out["plus" if sign > 0 else "minus"] = {"delta": d, "terms": terms, "partial_sums": sums}
    return out


# --------------------------------------------------------------------------
# separation by likelihood ratio


class StagedRule(Rule):
    """Flip the next letter at depth ``n_k`` on the set chosen by stage ``k``.

    ``stage(k)`` returns ``(n_k, CountSet, complement_flag)``; stages are
    computed lazily by the owning construction and cached."""

    exact_activity = True

    def __init__(self, stage_fn, max_stage: int):
        self.stage_fn = stage_fn
        self.max_stage = max_stage
        self._depths = {}

    def _stage_at(self, m):
        k = 1
        while k <= self.max_stage:
            nk, cs, comp = self.stage_fn(k)
            if nk == m:
                return cs, comp
            if nk > m:
                return None
            k += 1
        return None

    def perm(self, prefix):
        st = self._stage_at(len(prefix))
        if st is None:
            return None
        cs, comp = st
        inside = cs.contains(prefix)
        return FLIP if inside != comp else None

    def may_be_active(self, prefix, lo, hi):
        p = len(prefix)
        for k in range(1, self.max_stage + 1):
            nk, cs, comp = self.stage_fn(k)
            if hi is not None and nk > hi:
                return False
            if nk >= max(lo, p) and cs.may_extend_into(prefix, complement=comp):
                return True
        return False

    def fset_closed_form(self, n, variant, measure):
        if variant != "plain":
            return None
        st = self._stage_at(n)
        if st is None:
            return 0, Fraction(0)
        cs, comp = st
        p1 = _p1(measure) if measure is not None else None
        size = cs.size()
        mass = cs.mass(p1) if p1 is not None else None
        if comp:
            size = 2 ** n - size
            mass = None if mass is None else 1 - mass
        return size, mass


def _lr_separation(p_mu, p_nu, m, k):
    """Best count-class set for depth ``m`` by decreasing likelihood ratio."""
    target_mu = 1 - Fraction(1, 2 ** k)
    target_nu = Fraction(1, 2 ** k)
    q_mu, q_nu = 1 - p_mu, 1 - p_nu
    # ratio mu/nu on class j is (p_mu/p_nu)^j (q_mu/q_nu)^(m-j): monotone in j
    lr = [(j * (math.log(p_mu) - math.log(p_nu)) + (m - j) * (math.log(q_mu) - math.log(q_nu)), j)
          for j in range(m + 1)]
    lr.sort(key=lambda t: (-t[0], t[1]))
    chosen = []
    mmu = mnu = Fraction(0)
    for _, j in lr:
        chosen.append(j)
        c = math.comb(m, j)
        mmu += c * p_mu ** j * q_mu ** (m - j)
        mnu += c * p_nu ** j * q_nu ** (m - j)
        if mmu > target_mu:
            break
    if mmu > target_mu and mnu < target_nu:
        return CountSet(m, frozenset(chosen)), mmu, mnu
    return None


def orthogonal_pair_element(mu: ProductMeasure, nu: ProductMeasure, stages: int = 4,
                            max_depth: int = 4096) -> NamedConstruction:
    """Element flipping the letter below depth ``n_k`` on ``D_k`` where
    ``mu(D_k) > 1 - 2^-k`` and ``nu(D_k) < 2^-k``."""
    kres = kakutani_classify(mu, nu)
    if kres.verdict != ORTHOGONAL:
        raise SeparationNotFound("measures are not certified orthogonal")
    p_mu, p_nu = _p1(mu), _p1(nu)
    if p_mu is None or p_nu is None:
        raise NotImplementedError("only binary exchangeable pairs are supported")
    cache = {}

    def stage(k):
        if k in cache:
            return cache[k]
        prev = stage(k - 1)[0] if k > 1 else 0
        for m in range(prev + 1, max_depth + 1):
            r = _lr_separation(p_mu, p_nu, m, k)
            if r is not None:
                cache[k] = (m, r[0], False)
                cache[("mass", k)] = (r[1], r[2])
                return cache[k]
        raise SeparationNotFound(f"stage {k} not separated below depth {max_depth}")

    for k in range(1, stages + 1):
        stage(k)
    rule = StagedRule(stage, stages)
    rule.series_verdicts = lambda m, deltas: _pair_verdicts(m, mu, nu, stages, cache)
    g = RuleElement(BINARY, rule)
    data = {"stages": [{"k": k, "n_k": cache[k][0], "counts": cache[k][1].counts(),
                        "mu_mass": cache[("mass", k)][0], "nu_mass": cache[("mass", k)][1]}
                       for k in range(1, stages + 1)]}
    return NamedConstruction("orthogonal-pair", {"g": g}, GeneratedGroup({"g": g}, BINARY), data,
                             ["nu-finitary", "not mu-finitary"])


def _pair_verdicts(m, mu, nu, stages, cache):
    if _p1(m) == _p1(nu):
        return [Verdict("mu_finitary", True, CLOSED_FORM,
                        f"sum_k nu(F_(n_k)) < sum_k 2^-k over the schedule; {stages} stages built")]
    if _p1(m) == _p1(mu):
        return [Verdict("mu_finitary", False, CLOSED_FORM,
                        "sum_k mu(complement of F_(n_k)) < sum_k 2^-k; Borel-Cantelli puts a.e. point in F_(n_k) eventually")]
    return [Verdict("mu_finitary", None, INCONCLUSIVE, "measure outside the constructed pair")]


# --------------------------------------------------------------------------
# separation of one Bernoulli parameter from all others


def lambda_net(lo: Fraction, hi: Fraction, spacing: Fraction) -> list:
    """Rational points of ``[lo, hi]`` including both ends, gaps at most ``spacing``."""
    if hi < lo:
        return []
    steps = max(1, math.ceil((hi - lo) / spacing))
    return sorted({lo + (hi - lo) * i / steps for i in range(steps + 1)})


def wlln_mass(lam: Fraction, n: int, center: Fraction, eps: Fraction) -> Fraction:
    return binomial_mass(lam, n, count_interval(center, n, eps))


def _float_mass(lam, n, rng_):
    if len(rng_) == 0:
        return 0.0
    return float(binom.cdf(rng_[-1], n, float(lam)) - binom.cdf(rng_[0] - 1, n, float(lam)))


def separating_element(theta, stages: int = 2, max_depth: int = 20000) -> NamedConstruction:
    """Element flipping the letter below depth ``n_k`` off ``B_{theta, n_k, eps_k}``."""
    theta = parse_rational(theta)
    if not 0 < theta < 1:
        raise ValueError("theta must lie in (0, 1)")
    base = min(theta, 1 - theta)
    cache = {}

    def eps(k):
        return base / (6 * (k + 1))

    def nets(k):
        e = eps(k)
        left = lambda_net(theta / (k + 1), theta - 6 * e, e)
        right = lambda_net(theta + 6 * e, 1 - (1 - theta) / (k + 1), e)
        return left + right

    def stage(k):
        if k in cache:
            return cache[k]
        prev = stage(k - 1)[0] if k > 1 else 0
        e = eps(k)
        target = 1 - Fraction(1, k * k)
        net = nets(k)
        n = prev + 1
        while n <= max_depth:
            ok = _float_mass(theta, n, count_interval(theta, n, e)) > float(target) - 1e-9 and all(
                _float_mass(lam, n, count_interval(lam, n, e)) > float(target) - 1e-9 for lam in net)
            if ok and wlln_mass(theta, n, theta, e) > target and all(
                    wlln_mass(lam, n, lam, e) > target for lam in net):
                cs = CountSet(n, frozenset(count_interval(theta, n, e)))
                cache[k] = (n, cs, True)
                return cache[k]
            n += 1
        raise ScheduleOverflow(f"stage {k} needs depth beyond {max_depth}")

    for k in range(1, stages + 1):
        stage(k)
    rule = StagedRule(stage, stages)
    rule.series_verdicts = lambda m, deltas: _theta_verdicts(m, theta, stages, cache, nets)
    g = RuleElement(BINARY, rule)
    data = {"theta": theta, "stages": [
        {"k": k, "n_k": cache[k][0], "eps_k": eps(k), "net": nets(k),
         "theta_mass": wlln_mass(theta, cache[k][0], theta, eps(k))} for k in range(1, stages + 1)],
        "eps": eps, "nets": nets}
    return NamedConstruction("separating", {"g": g}, GeneratedGroup({"g": g}, BINARY), data,
                             ["mu_theta-finitary", "not mu_lambda-finitary for lambda != theta"])


def _theta_verdicts(m, theta, stages, cache, nets):
    lam = _p1(m)
    if lam == theta:
        return [Verdict("mu_finitary", True, CLOSED_FORM,
                        f"sum_k mu_theta(F_(n_k)) < sum_k k^-2; {stages} stages built")]
    if lam is not None:
        for k in range(1, stages + 1):
            if lam in nets(k):
                return [Verdict("mu_finitary", False, CLOSED_FORM,
                                f"lambda lies on the stage-{k} net; complement masses below k^-2 from stage {k} on")]
    return [Verdict("mu_finitary", None, INCONCLUSIVE, "parameter not on a built net")]
