"""Exact infinite product measures on the tree boundary.

All cylinder arithmetic uses :class:`fractions.Fraction`.  Square roots and
logarithms (Hellinger affinity, entropy, log-products) are doubles; values
within ``FLOAT_TOL`` are treated as equal where a comparison is needed.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .errors import ConfigError, InvalidDistribution, ShapeMismatch
from .tree import TreeShape, check_cap, enumerate_level

FLOAT_TOL = 1e-12
DEFAULT_LOG_THRESHOLD = -60.0
DEFAULT_KAKUTANI_HORIZON = 256


def parse_rational(value, pointer="") -> Fraction:
    """Parse ``"p/q"``, an int, or a decimal string into a Fraction."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise ConfigError(pointer, f"not a rational: {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(str(value))
    if isinstance(value, str):
        try:
            return Fraction("".join(value.split()))
        except (ValueError, ZeroDivisionError):
            raise ConfigError(pointer, f"malformed rational {value!r}")
    raise ConfigError(pointer, f"not a rational: {value!r}")


def format_rational(r: Fraction) -> str:
    return f"{r.numerator}/{r.denominator}"


@dataclass(frozen=True)
class LevelDistribution:
    """A nondegenerate probability vector with exact rational entries."""

    probs: tuple

    def __post_init__(self):
        probs = tuple(Fraction(p) for p in self.probs)
        if len(probs) < 2:
            raise InvalidDistribution("a level needs at least two letters")
        if any(p <= 0 for p in probs):
            raise InvalidDistribution(f"entries must be positive: {probs}")
        if sum(probs) != 1:
            raise InvalidDistribution(f"entries must sum to 1, got {sum(probs)}")
        object.__setattr__(self, "probs", probs)

    @classmethod
    def uniform(cls, q: int) -> "LevelDistribution":
        return cls(tuple(Fraction(1, q) for _ in range(q)))

    @classmethod
    def of(cls, *probs) -> "LevelDistribution":
        return cls(tuple(parse_rational(p) for p in probs))

    def __len__(self):
        return len(self.probs)

    def __getitem__(self, a):
        return self.probs[a]

    @property
    def is_uniform(self) -> bool:
        return len(set(self.probs)) == 1

    def max(self) -> Fraction:
        return max(self.probs)

    def floats(self) -> np.ndarray:
        return np.array([float(p) for p in self.probs])

    def preserved_by(self, perm) -> bool:
        return all(self.probs[perm[a]] == self.probs[a] for a in range(len(self.probs)))

    def to_json(self) -> list:
        return [format_rational(p) for p in self.probs]


def _dist_from_json(obj, pointer) -> LevelDistribution:
    if not isinstance(obj, list):
        raise ConfigError(pointer, "expected a list of rationals")
    probs = tuple(parse_rational(p, f"{pointer}/{i}") for i, p in enumerate(obj))
    try:
        return LevelDistribution(probs)
    except InvalidDistribution as exc:
        raise ConfigError(pointer, str(exc))


class ProductMeasure:
    """Base class: ``level(n)`` gives the distribution on level ``n``."""

    shape: TreeShape

    def level(self, n: int) -> LevelDistribution:
        raise NotImplementedError

    def tail_structure(self):
        """``(start, period)`` with ``level(n + period) == level(n)`` for all
        ``n > start``, or None when no periodic description is known."""
        raise NotImplementedError

    def cylinder_measure(self, y) -> Fraction:
        r = Fraction(1)
        for i, a in enumerate(y, start=1):
            r *= self.level(i)[a]
        return r

    def set_measure(self, ys) -> Fraction:
        return sum((self.cylinder_measure(y) for y in ys), Fraction(0))

    def to_json(self) -> dict:
        raise NotImplementedError

    def same_levels(self, other, n: int) -> bool:
        return all(self.level(i) == other.level(i) for i in range(1, n + 1))


class UniformMeasure(ProductMeasure):
    """The Haar measure: uniform letters on every level."""

    def __init__(self, shape: TreeShape):
        self.shape = shape

    def level(self, n):
        return _uniform(self.shape.arity(n))

    def tail_structure(self):
        return len(self.shape.head), self.shape.period

    def cylinder_measure(self, y):
        r = Fraction(1)
        for i in range(1, len(y) + 1):
            r /= self.shape.arity(i)
        return r

    def to_json(self):
        return {"kind": "uniform"}

    def __repr__(self):
        return "UniformMeasure()"


@lru_cache(maxsize=None)
def _uniform(q):
    return LevelDistribution.uniform(q)


class BernoulliMeasure(ProductMeasure):
    def __init__(self, shape: TreeShape, dist: LevelDistribution):
        if not shape.is_constant:
            raise ShapeMismatch("Bernoulli measures need constant arity")
        if len(dist) != shape.arity(1):
            raise ShapeMismatch("distribution length does not match the arity")
        self.shape = shape
        self.dist = dist

    def level(self, n):
        return self.dist

    def tail_structure(self):
        return 0, 1

    def cylinder_measure(self, y):
        counts = {}
        for a in y:
            counts[a] = counts.get(a, 0) + 1
        r = Fraction(1)
        for a, c in counts.items():
            r *= self.dist[a] ** c
        return r

    def to_json(self):
        return {"kind": "bernoulli", "p": self.dist.to_json()}

    def __repr__(self):
        return f"BernoulliMeasure({[str(p) for p in self.dist.probs]})"


class ExplicitMeasure(ProductMeasure):
    """Finite list of level distributions followed by a periodic tail."""

    def __init__(self, shape: TreeShape, head, tail):
        self.shape = shape
        self.head = tuple(head)
        self.tail = tuple(tail)
        if not self.tail:
            raise InvalidDistribution("tail must be nonempty")
        start, period = self.tail_structure()
        for n in range(1, start + period + 1):
            if len(self.level(n)) != shape.arity(n):
                raise ShapeMismatch(f"level {n} distribution does not match the arity")

    def level(self, n):
        h = len(self.head)
        if n <= h:
            return self.head[n - 1]
        return self.tail[(n - h - 1) % len(self.tail)]

    def tail_structure(self):
        start = max(len(self.head), len(self.shape.head))
        return start, math.lcm(len(self.tail), self.shape.period)

    def to_json(self):
        return {"kind": "explicit", "head": [d.to_json() for d in self.head],
                "tail": [d.to_json() for d in self.tail]}


@dataclass(frozen=True)
class PeriodicOverride:
    """Override every level ``start, start + step, start + 2 step, ...``."""

    start: int
    step: int
    dist: LevelDistribution

    def hits(self, n: int) -> bool:
        return n >= self.start and (n - self.start) % self.step == 0


class OverridesMeasure(ProductMeasure):
    """A base measure with some levels replaced.

    ``overrides`` is a finite map ``n -> LevelDistribution``; ``periodic`` is
    an optional :class:`PeriodicOverride` applied to levels not listed in
    the finite map; ``rule`` is an optional callable ``n -> dist or None``
    with no closed-form structure (Kakutani verdicts then rely on the trace).
    """

    def __init__(self, base: ProductMeasure, overrides=None, periodic=None, rule=None):
        self.base = base
        self.shape = base.shape
        self.overrides = dict(sorted((overrides or {}).items()))
        self.periodic = periodic
        self.rule = rule
        for n, d in self.overrides.items():
            if n < 1 or len(d) != self.shape.arity(n):
                raise ShapeMismatch(f"override at level {n} does not match the tree")

    def level(self, n):
        d = self.overrides.get(n)
        if d is not None:
            return d
        if self.periodic is not None and self.periodic.hits(n):
            return self.periodic.dist
        if self.rule is not None:
            d = self.rule(n)
            if d is not None:
                return d
        return self.base.level(n)

    def tail_structure(self):
        if self.rule is not None:
            return None
        bt = self.base.tail_structure()
        if bt is None:
            return None
        start, period = bt
        start = max([start] + list(self.overrides))
        if self.periodic is not None:
            start = max(start, self.periodic.start)
            period = math.lcm(period, self.periodic.step)
        return start, period

    def to_json(self):
        out = {"kind": "overrides", "base": self.base.to_json(),
               "overrides": {str(n): d.to_json() for n, d in self.overrides.items()}}
        if self.periodic is not None:
            out["periodic"] = {"start": self.periodic.start, "step": self.periodic.step,
                               "p": self.periodic.dist.to_json()}
        if self.rule is not None:
            out["rule"] = "opaque"
        return out


def haar(shape: TreeShape | None = None) -> UniformMeasure:
    return UniformMeasure(shape or TreeShape.binary())


def bernoulli(*probs, shape: TreeShape | None = None) -> BernoulliMeasure:
    dist = LevelDistribution.of(*probs)
    return BernoulliMeasure(shape or TreeShape.constant(len(dist)), dist)


def measure_from_json(obj, shape: TreeShape, pointer="") -> ProductMeasure:
    if not isinstance(obj, dict) or "kind" not in obj:
        raise ConfigError(pointer, "measure needs a 'kind'")
    kind = obj["kind"]
    try:
        if kind == "uniform":
            return UniformMeasure(shape)
        if kind == "bernoulli":
            return BernoulliMeasure(shape, _dist_from_json(obj.get("p"), pointer + "/p"))
        if kind == "explicit":
            head = [_dist_from_json(d, f"{pointer}/head/{i}") for i, d in enumerate(obj.get("head", []))]
            tail = [_dist_from_json(d, f"{pointer}/tail/{i}") for i, d in enumerate(obj.get("tail", []))]
            return ExplicitMeasure(shape, head, tail)
        if kind == "overrides":
            base = measure_from_json(obj.get("base", {"kind": "uniform"}), shape, pointer + "/base")
            ov = {}
            for k, d in (obj.get("overrides") or {}).items():
                try:
                    n = int(k)
                except ValueError:
                    raise ConfigError(f"{pointer}/overrides/{k}", "level keys must be integers")
                ov[n] = _dist_from_json(d, f"{pointer}/overrides/{k}")
            per = obj.get("periodic")
            periodic = None
            if per is not None:
                periodic = PeriodicOverride(int(per["start"]), int(per["step"]),
                                            _dist_from_json(per["p"], pointer + "/periodic/p"))
            return OverridesMeasure(base, ov, periodic)
    except ShapeMismatch as exc:
        raise ConfigError(pointer, str(exc))
    raise ConfigError(pointer + "/kind", f"unknown measure kind {kind!r}")


# --------------------------------------------------------------------------
# Hellinger distance and the Kakutani dichotomy


def _check_same_support(alpha, beta):
    if len(alpha) != len(beta):
        raise ShapeMismatch("distributions live on different alphabets")


def hellinger(alpha: LevelDistribution, beta: LevelDistribution) -> float:
    """``H = sqrt(sum (sqrt a - sqrt b)^2) / sqrt 2``."""
    _check_same_support(alpha, beta)
    s = sum((math.sqrt(a) - math.sqrt(b)) ** 2 for a, b in zip(alpha.floats(), beta.floats()))
    return math.sqrt(s) / math.sqrt(2.0)


def hellinger_affinity(alpha: LevelDistribution, beta: LevelDistribution) -> float:
    """``1 - H^2 = sum sqrt(a b)``."""
    _check_same_support(alpha, beta)
    if alpha == beta:
        return 1.0
    return float(sum(math.sqrt(a * b) for a, b in zip(alpha.floats(), beta.floats())))


EQUIVALENT = "Equivalent"
ORTHOGONAL = "Orthogonal"
UNDECIDED = "Undecided"

CLOSED_FORM = "ClosedForm"
PARTIAL_SUMS = "PartialSums"
INCONCLUSIVE = "Inconclusive"


@dataclass
class KakutaniResult:
    verdict: str
    evidence: str
    detail: str
    trace: list = field(default_factory=list)
    period_factor: float | None = None
    difference_levels: tuple = ()

    def trace_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "affinity", "cumulative_log"])
        for n, aff, cum in self.trace:
            w.writerow([n, repr(aff), repr(cum)])
        return buf.getvalue()

    def to_json(self) -> dict:
        return {"verdict": self.verdict, "evidence": self.evidence, "detail": self.detail,
                "period_factor": self.period_factor,
                "difference_levels": list(self.difference_levels)}


def kakutani_classify(mu: ProductMeasure, nu: ProductMeasure, horizon: int = DEFAULT_KAKUTANI_HORIZON,
                      log_threshold: float = DEFAULT_LOG_THRESHOLD) -> KakutaniResult:
    """Three-valued Kakutani dichotomy for product measures.

    Closed forms are used whenever both measures are eventually periodic:
    equal tails mean a finite difference set (equivalence), a differing
    tail repeats an affinity factor below one forever (orthogonality).
    Otherwise the log partial product is compared with ``log_threshold``.
    """
    if mu.shape != nu.shape:
        raise ShapeMismatch("measures live on different trees")
    trace = []
    cum = 0.0
    for n in range(1, horizon + 1):
        aff = hellinger_affinity(mu.level(n), nu.level(n))
        cum += math.log(aff)
        trace.append((n, aff, cum))
    tm, tn = mu.tail_structure(), nu.tail_structure()
    if tm is not None and tn is not None:
        start = max(tm[0], tn[0], len(mu.shape.head))
        period = math.lcm(tm[1], tn[1], mu.shape.period)
        window = range(start + 1, start + period + 1)
        diff_tail = [n for n in window if mu.level(n) != nu.level(n)]
        diffs = tuple(n for n in range(1, start + 1) if mu.level(n) != nu.level(n))
        if not diff_tail:
            return KakutaniResult(EQUIVALENT, CLOSED_FORM,
                                  f"levels agree beyond {start}; finite difference set of size {len(diffs)}",
                                  trace, None, diffs)
        factor = math.prod(hellinger_affinity(mu.level(n), nu.level(n)) for n in window)
        return KakutaniResult(ORTHOGONAL, CLOSED_FORM,
                              f"affinity product over each period of {period} levels after {start} is {factor!r} < 1",
                              trace, factor, diffs + tuple(diff_tail))
    if cum < log_threshold:
        return KakutaniResult(ORTHOGONAL, PARTIAL_SUMS,
                              f"log partial product {cum!r} below threshold {log_threshold}", trace)
    return KakutaniResult(UNDECIDED, INCONCLUSIVE, f"log partial product {cum!r} at horizon {horizon}", trace)


@dataclass
class NonatomicityResult:
    certified: bool
    witness_depth: int | None
    closed_form_factor: Fraction | None
    detail: str


def nonatomicity_certificate(mu: ProductMeasure, horizon: int = 256, threshold=1e-9) -> NonatomicityResult:
    """Certify that the product of per-level maxima tends to zero."""
    thr = parse_rational(threshold) if not isinstance(threshold, Fraction) else threshold
    prod = Fraction(1)
    witness = None
    for n in range(1, horizon + 1):
        prod *= mu.level(n).max()
        if prod < thr:
            witness = n
            break
    factor = None
    ts = mu.tail_structure()
    if ts is not None:
        start, period = ts
        factor = math.prod((mu.level(n).max() for n in range(start + 1, start + period + 1)), start=Fraction(1))
        if factor >= 1:
            factor = None
    if witness is None and factor is None:
        return NonatomicityResult(False, None, None, "undecided within horizon")
    parts = []
    if witness is not None:
        parts.append(f"product of maxima below {threshold} at depth {witness}")
    if factor is not None:
        parts.append(f"periodic max factor {format_rational(factor)} < 1")
    return NonatomicityResult(True, witness, factor, "; ".join(parts))


# --------------------------------------------------------------------------
# sampling


def rng_for(seed: int, stream: int = 0) -> np.random.Generator:
    """Philox generator keyed by ``(seed, stream)``.

    The 128-bit Philox key is ``seed + 2**64 * stream``; independent
    sub-streams come from distinct ``stream`` values."""
    seed = int(seed) & (2 ** 64 - 1)
    return np.random.Generator(np.random.Philox(key=seed + (int(stream) << 64)))


def sample(mu: ProductMeasure, depth: int, seed: int, stream: int = 0) -> tuple:
    """One depth-``depth`` prefix drawn letter by letter from ``mu``."""
    if depth < 1:
        raise ValueError("depth must be at least 1")
    rng = rng_for(seed, stream)
    u = rng.random(depth)
    return tuple(_draw(mu.level(n), u[n - 1]) for n in range(1, depth + 1))


def sample_many(mu: ProductMeasure, depth: int, count: int, seed: int, stream: int = 0) -> np.ndarray:
    rng = rng_for(seed, stream)
    u = rng.random((count, depth))
    out = np.empty((count, depth), dtype=np.int64)
    for n in range(1, depth + 1):
        cdf = np.cumsum(mu.level(n).floats())
        cdf[-1] = 1.0
        out[:, n - 1] = np.searchsorted(cdf, u[:, n - 1], side="right")
    return out


def _draw(dist: LevelDistribution, u: float) -> int:
    acc = 0.0
    for a, p in enumerate(dist.floats()):
        acc += p
        if u < acc:
            return a
    return len(dist) - 1


# --------------------------------------------------------------------------
# entropy, typical sets, law-of-large-numbers sets


def entropy(alpha: LevelDistribution) -> float:
    return -sum(p * math.log(p) for p in alpha.floats())


def _bernoulli_dist(mu: ProductMeasure) -> LevelDistribution:
    if isinstance(mu, BernoulliMeasure):
        return mu.dist
    if isinstance(mu, UniformMeasure) and mu.shape.is_constant:
        return mu.level(1)
    raise ValueError("a Bernoulli measure is required")


def sm_typical_set(mu: ProductMeasure, n: int, delta: float, cap: int | None = None) -> list:
    """``{y : |log mu(y) / n + h| < delta}`` by exact enumeration."""
    dist = _bernoulli_dist(mu)
    h = entropy(dist)
    logs = [math.log(p) for p in dist.floats()]
    out = []
    for y in enumerate_level(mu.shape, n, cap):
        lp = sum(logs[a] for a in y)
        if abs(lp / n + h) < delta:
            out.append(y)
    return out


def sm_typical_mass(mu: ProductMeasure, n: int, delta: float) -> Fraction:
    """Exact mass of the typical set, summed over binary count classes."""
    dist = _bernoulli_dist(mu)
    if len(dist) != 2:
        return mu.set_measure(sm_typical_set(mu, n, delta))
    h = entropy(dist)
    l0, l1 = (math.log(p) for p in dist.floats())
    total = Fraction(0)
    for j in range(n + 1):
        if abs(((n - j) * l0 + j * l1) / n + h) < delta:
            total += math.comb(n, j) * dist[0] ** (n - j) * dist[1] ** j
    return total


def wlln_set(mu: ProductMeasure, lam, n: int, eps, cap: int | None = None) -> list:
    """``{x in X^n : |mean(x) - lam| < eps}`` for binary letters, exactly."""
    if mu.shape.arity(1) != 2 or not mu.shape.is_constant:
        raise ValueError("binary letters required")
    lam, eps = parse_rational(lam), parse_rational(eps)
    return [y for y in enumerate_level(mu.shape, n, cap) if abs(Fraction(sum(y), n) - lam) < eps]


def wlln_counts(lam, n: int, eps) -> range:
    """Counts ``j`` with ``|j/n - lam| < eps`` (as a possibly empty range)."""
    lam, eps = parse_rational(lam), parse_rational(eps)
    js = [j for j in range(n + 1) if abs(Fraction(j, n) - lam) < eps]
    return range(js[0], js[-1] + 1) if js else range(0)


def binomial_mass(p1: Fraction, n: int, counts) -> Fraction:
    """``P(Binomial(n, p1) in counts)`` exactly; ``p1`` is the mass of letter 1."""
    p1 = Fraction(p1)
    p0 = 1 - p1
    num = 0
    den = p1.denominator ** n if p0.denominator == p1.denominator else None
    if den is not None:
        a, b = p1.numerator, p0.numerator
        for j in counts:
            num += math.comb(n, j) * a ** j * b ** (n - j)
        return Fraction(num, den)
    return sum((math.comb(n, j) * p1 ** j * p0 ** (n - j) for j in counts), Fraction(0))


# --------------------------------------------------------------------------
# omega words


@dataclass(frozen=True)
class OmegaWord:
    """A 0/1 sequence: finitely many explicit bits, then a constant tail."""

    word: tuple = ()
    tail: int = 0

    def __post_init__(self):
        object.__setattr__(self, "word", tuple(int(b) for b in self.word))
        if any(b not in (0, 1) for b in self.word) or self.tail not in (0, 1):
            raise ValueError("omega words are binary")

    def bit(self, i: int) -> int:
        """Bit at position ``i`` (1-based)."""
        return self.word[i - 1] if i <= len(self.word) else self.tail

    def to_json(self):
        return {"word": list(self.word), "tail": self.tail}


def tail_equivalent(w1: OmegaWord, w2: OmegaWord) -> bool:
    """True iff the sequences differ in finitely many positions."""
    return w1.tail == w2.tail
