"""The Grigorchuk group and the even-sum translation group."""
from __future__ import annotations

from dataclasses import dataclass, field

from ..automorphism import Machine, equal_exact, flip_portrait, Identity, apply_point
from ..groups import GeneratedGroup, Word, supported_in
from ..tree import BINARY, BoundaryPoint

# States e, a, b, c, d with sections written (below 0, below 1).
# b, c, d act on the subtree 1^n 0 by flipping the next letter unless
# n is congruent to 0, 1, 2 (mod 3) respectively.
GRIGORCHUK_MACHINE = Machine(
    perms=[(0, 1), (1, 0), (0, 1), (0, 1), (0, 1)],
    nexts=[(0, 0), (0, 0), (0, 4), (1, 2), (1, 3)],
    names="eabcd",
)

# a -> aca, b -> c, c -> d, d -> b; the image of a word w acts below 1 as w.
GRIGORCHUK_LIFT = {"a": "aca", "b": "c", "c": "d", "d": "b"}


@dataclass
class Provenance:
    label: str
    claims: list = field(default_factory=list)


def grigorchuk() -> GeneratedGroup:
    gens = {n: GRIGORCHUK_MACHINE.state(n, BINARY) for n in "abcd"}
    G = GeneratedGroup(gens, BINARY, name="grigorchuk")
    G.provenance = Provenance("grigorchuk", ["minimal", "weakly branch (corpus label)"])
    return G


def grigorchuk_relations(G: GeneratedGroup) -> dict:
    """Exact checks of the defining involutions and ``bcd = 1``."""
    e = Identity(G.shape)
    out = {f"{n}^2": equal_exact(G.evaluate(Word(((n, 1), (n, 1)))), e) for n in "abcd"}
    out["bcd"] = equal_exact(G.evaluate("bcd"), e)
    ones = BoundaryPoint(G.shape, (), (1,))
    for n in "bcd":
        out[f"{n} fixes 1^inf"] = apply_point(G.generators[n], ones).same_point(ones)
    return out


def lift_word(w: Word, times: int = 1) -> Word:
    """Apply the lifting substitution ``times`` times (involutive letters)."""
    for _ in range(times):
        letters = []
        for n, _e in w.letters:
            letters.extend((m, 1) for m in GRIGORCHUK_LIFT[n])
        w = Word(tuple(letters))
    return w


def grigorchuk_rigid_candidates(depth: int, seeds=("adad", "dada", "abab", "acac")) -> dict:
    """For each ``m <= depth`` a nontrivial word supported in ``[1^m]``.

    Seeds are lifted ``m`` times; a lift of ``w`` acts below ``1`` as ``w``
    and below ``0`` by a word in ``a`` and one other generator, so the
    lifted words are certified by :func:`supported_in` rather than trusted.
    """
    G = grigorchuk()
    out = {}
    for m in range(0, depth + 1):
        O = (1,) * m
        for s in seeds:
            w = lift_word(Word.parse(s), m)
            g = G.evaluate(w)
            if not equal_exact(g, Identity(G.shape)) and supported_in(g, O):
                out[m] = w
                break
    return out


def parity_group(span: int = 6) -> GeneratedGroup:
    """Flips of two coordinates ``i < j <= span`` (1-based), which generate
    the even-sum translations supported in the first ``span`` coordinates."""
    gens = {}
    for i in range(1, span + 1):
        for j in range(i + 1, span + 1):
            gens[f"p{i}_{j}"] = flip_portrait(BINARY, {i: True, j: True})
    G = GeneratedGroup(gens, BINARY, name="parity")
    G.provenance = Provenance("parity", ["minimal on levels below span", "index two in the tail relation (label)"])
    G.span = span
    return G


def parity_generator_coords(name: str) -> tuple:
    i, j = name[1:].split("_")
    return int(i), int(j)
