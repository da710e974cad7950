"""Koopman operators restricted to functions of the first ``n`` letters.

``kappa(g) f = f o g^-1 * sqrt(d(mu o g^-1)/d mu)``.  When every section of
``g`` below depth ``n`` preserves the deeper levels of ``mu``, the space of
depth-``n`` cylinder functions is invariant and, in the basis
``e_y = 1_[y] / sqrt(mu[y])``, ``kappa(g)`` is the permutation matrix of the
level action.  Everything here works in that normalized basis.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.linalg import null_space

from .automorphism import Automorphism, level_table, section, is_trivial
from .cocycle import _measure_classes, uniform_beyond
from .errors import DimensionMismatch, KEpsNotFound, NoStabilizerElement, NotDecidable, NotDepthCompatible
from .groups import GeneratedGroup, rigid_stabilizer_elements
from .measures import ProductMeasure
from .tree import check_cap, enumerate_level, level_size, prefix_index

NULL_RCOND = 1e-10


def cylinder_masses(mu: ProductMeasure, n: int) -> list:
    """Exact masses of all depth-``n`` cylinders in lexicographic order."""
    out = [Fraction(1)]
    for m in range(1, n + 1):
        lev = mu.level(m)
        out = [p * lev[a] for p in out for a in range(len(lev))]
    return out


# --------------------------------------------------------------------------
# depth compatibility


def depth_compatibility_witness(g: Automorphism, mu: ProductMeasure, n: int, columns=None,
                                horizon: int = 256):
    """A depth-``n`` prefix below which ``g`` fails to preserve ``mu``, or None.

    Walks the distinct sections level by level; for measures with a known
    periodic tail the walk stops once (section set, level class) repeats.
    ``columns`` limits the prefixes that matter."""
    if uniform_beyond(mu, n):
        return None
    cls = _measure_classes(mu)
    layer = {}
    ys = columns if columns is not None else enumerate_level(g.shape, n)
    for y in ys:
        h = section(g, y)
        if h.is_identity_fast():
            continue
        k = h.key()
        layer.setdefault(k if k is not None else ("y", tuple(y)), (h, tuple(y)))
    seen = set()
    m = n
    while layer:
        if m - n > horizon:
            raise NotDecidable(f"depth compatibility undecided after {horizon} levels")
        lev = mu.level(m + 1)
        for h, y in layer.values():
            if not lev.preserved_by(h.perm()):
                return y
        if cls is not None and m + 1 > cls[0] and all(k[0] != "y" for k in layer):
            sig = (frozenset(layer), (m + 1 - cls[0]) % cls[1])
            if sig in seen:
                return None
            seen.add(sig)
        nxt = {}
        for h, y in layer.values():
            for x in range(h.arity):
                c = h.child(x)
                if c.is_identity_fast():
                    continue
                k = c.key()
                if k is None:
                    try:
                        if not c.may_be_active():
                            continue
                    except Exception:
                        pass
                    k = ("y", y + (x,))
                nxt.setdefault(k, (c, y))
        layer = nxt
        m += 1
    return None


def is_depth_compatible(g, mu, n, columns=None) -> bool:
    return depth_compatibility_witness(g, mu, n, columns) is None


# --------------------------------------------------------------------------
# matrices


@dataclass
class KoopmanMatrix:
    depth: int
    measure: ProductMeasure
    element: Automorphism
    matrix: np.ndarray
    images: np.ndarray            # images[i] = index of g_n(y_i)
    masses: list = field(repr=False, default_factory=list)

    def entry_squared(self, i: int, j: int) -> Fraction:
        """Exact square of the indicator-basis entry ``(i, j)``."""
        if self.images[j] != i:
            return Fraction(0)
        return self.masses[j] / self.masses[i]

    def indicator_matrix(self) -> np.ndarray:
        """Matrix on the unnormalized indicators ``1_[y]``."""
        M = np.zeros_like(self.matrix)
        for j, i in enumerate(self.images):
            if i >= 0:
                M[i, j] = math.sqrt(self.entry_squared(i, j))
        return M

    def to_text(self, exact: bool = False) -> str:
        """Dense row-major text; ``exact`` writes squared indicator entries."""
        rows = []
        N = self.matrix.shape[0]
        for i in range(N):
            if exact:
                rows.append(" ".join(str(self.entry_squared(i, j)) for j in range(N)))
            else:
                rows.append(" ".join(repr(float(v)) for v in self.matrix[i]))
        return "\n".join(rows) + "\n"


def koopman_matrix(g: Automorphism, mu: ProductMeasure, n: int, columns=None, cap=None) -> KoopmanMatrix:
    """``kappa_mu(g)`` on depth-``n`` functions, normalized basis.

    With ``columns`` only those basis vectors are mapped (the others give
    zero columns), which is enough for functions supported on them."""
    check_cap(level_size(g.shape, n), cap)
    w = depth_compatibility_witness(g, mu, n, columns)
    if w is not None:
        raise NotDepthCompatible(w)
    table = level_table(g, n)
    N = len(table)
    M = np.zeros((N, N))
    images = np.full(N, -1, dtype=np.int64)
    cols = range(N) if columns is None else [prefix_index(g.shape, y) for y in columns]
    for j in cols:
        M[table[j], j] = 1.0
        images[j] = table[j]
    return KoopmanMatrix(n, mu, g, M, images, cylinder_masses(mu, n))


def unitarity_defect(M) -> float:
    A = M.matrix if isinstance(M, KoopmanMatrix) else np.asarray(M)
    return float(np.max(np.abs(A.T @ A - np.eye(A.shape[0]))))


def homomorphism_defect(Mg, Mh, Mgh) -> float:
    """``max |M(g) M(h) - M(gh)|``."""
    A = [m.matrix if isinstance(m, KoopmanMatrix) else np.asarray(m) for m in (Mg, Mh, Mgh)]
    return float(np.max(np.abs(A[0] @ A[1] - A[2])))


@dataclass
class FixedSpace:
    basis: np.ndarray
    dimension: int

    def contains(self, v, tol: float = 1e-10) -> bool:
        v = np.asarray(v, dtype=float)
        if self.dimension == 0:
            return bool(np.linalg.norm(v) <= tol)
        r = v - self.basis @ (self.basis.T @ v)
        return bool(np.linalg.norm(r) <= tol * max(1.0, np.linalg.norm(v)))


def fixed_space(matrices) -> FixedSpace:
    """Joint fixed vectors ``{h : M h = h for all M}``."""
    mats = [m.matrix if isinstance(m, KoopmanMatrix) else np.asarray(m) for m in matrices]
    if not mats:
        raise DimensionMismatch("no matrices")
    N = mats[0].shape[0]
    if any(m.shape != (N, N) for m in mats):
        raise DimensionMismatch("matrices of different sizes")
    if isinstance(matrices[0], KoopmanMatrix):
        if len({(m.depth, id(m.measure)) for m in matrices}) > 1:
            raise DimensionMismatch("matrices use different depths or measures")
    stacked = np.vstack([m - np.eye(N) for m in mats])
    basis = null_space(stacked, rcond=NULL_RCOND)
    return FixedSpace(basis, basis.shape[1])


@dataclass
class RigidFixedReport:
    O: tuple
    depth: int
    elements: list
    dimension: int
    outside_count: int
    outside_fixed: bool
    inside_residual: int

    def to_json(self):
        return {"O": [a + 1 for a in self.O], "depth": self.depth, "elements": [str(w) for w in self.elements],
                "dimension": self.dimension, "outside_count": self.outside_count,
                "outside_fixed": self.outside_fixed, "inside_residual": self.inside_residual}


def rigid_fixed_space(G: GeneratedGroup, O, mu: ProductMeasure, depth: int, radius: int = 3,
                      candidates=()) -> RigidFixedReport:
    """Fixed space of the elements supported in ``[O]`` found in a ball.

    Reports dimensions and containment only: cylinders outside ``O`` are
    untouched by construction, the residual dimension inside ``O`` is a
    finite-depth trend, not a statement about the infinite space."""
    O = tuple(O)
    words = rigid_stabilizer_elements(G, O, radius, candidates=candidates)
    mats = [koopman_matrix(G.evaluate(w), mu, depth) for w in words]
    if not mats:
        raise NoStabilizerElement(len(O))
    fs = fixed_space(mats)
    ys = enumerate_level(G.shape, depth)
    outside = [i for i, y in enumerate(ys) if y[:len(O)] != O]
    ok = all(fs.contains(np.eye(len(ys))[i]) for i in outside)
    return RigidFixedReport(O, depth, words, fs.dimension, len(outside), ok, fs.dimension - len(outside))


# --------------------------------------------------------------------------
# level filtration


def level_projectors(q: int, n: int) -> list:
    """``P_0 .. P_n``: projections onto depth-k functions minus depth-(k-1)
    functions, in the normalized Haar basis of depth ``n``."""
    N = q ** n
    E = []
    for k in range(n + 1):
        block = q ** (n - k)
        # averaging over blocks of consecutive leaves sharing a k-prefix
        E.append(np.kron(np.eye(q ** k), np.full((block, block), 1.0 / block)))
    return [E[0]] + [E[k] - E[k - 1] for k in range(1, n + 1)] if N else []


def commutator_defect(M, P) -> float:
    A = M.matrix if isinstance(M, KoopmanMatrix) else np.asarray(M)
    return float(np.max(np.abs(A @ P - P @ A)))


@dataclass
class FiltrationReport:
    depth: int
    defects: dict
    max_defect: float

    def ok(self, tol: float = 1e-12) -> bool:
        return self.max_defect <= tol

    def to_json(self):
        return {"depth": self.depth, "max_defect": self.max_defect,
                "defects": {f"{g}@{k}": v for (g, k), v in self.defects.items()}}


def level_filtration_check(G: GeneratedGroup, n: int) -> FiltrationReport:
    """Haar Koopman matrices of the generators commute with every ``P_k``."""
    from .measures import haar
    if not G.shape.is_constant:
        raise ValueError("level projectors need a constant arity")
    mu = haar(G.shape)
    Ps = level_projectors(G.shape.arity(1), n)
    defects = {}
    for name in G.names:
        M = koopman_matrix(G.generators[name], mu, n)
        for k, P in enumerate(Ps):
            defects[(name, k)] = commutator_defect(M, P)
    return FiltrationReport(n, defects, max(defects.values()))


# --------------------------------------------------------------------------
# matrix coefficients without depth compatibility


def section_affinity(h: Automorphism, mu: ProductMeasure, depth: int, tol: float = 1e-15,
                     horizon: int = 512) -> tuple:
    """``int sqrt(d(mu o h)/d mu)`` over the subtree of a depth-``depth``
    vertex whose section is ``h``, as an interval ``(lo, hi)``.

    Branches reaching a trivial section contribute their weight exactly;
    the weight still pending when the walk stops bounds the remainder."""
    lo = 0.0
    layer = {}
    k0 = h.key()
    layer[k0 if k0 is not None else ("h", 0)] = (h, 1.0)
    m = depth
    while layer and m - depth < horizon:
        pending = sum(w for _, w in layer.values())
        if pending < tol:
            break
        lev = mu.level(m + 1)
        nxt = {}
        for idx, (node, w) in enumerate(layer.values()):
            if node.is_identity_fast():
                lo += w
                continue
            p = node.perm()
            for x in range(node.arity):
                wx = w * math.sqrt(float(lev[x]) * float(lev[p[x]]))
                c = node.child(x)
                if c.is_identity_fast():
                    lo += wx
                    continue
                k = c.key()
                k = k if k is not None else ("h", m, idx, x)
                old = nxt.get(k)
                nxt[k] = (c, wx + (old[1] if old else 0.0))
        layer = nxt
        m += 1
    pending = sum(w for _, w in layer.values())
    return lo, min(1.0, lo + pending)


def koopman_coefficient(g: Automorphism, mu: ProductMeasure, f, r, depth: int) -> tuple:
    """``<kappa_mu(g) f, r>`` for depth-``depth`` value vectors, as ``(value, error)``.

    ``sum_y f(y) r(g y) sqrt(mu[y] mu[g y]) * affinity(section of g at y)``;
    no depth compatibility is needed."""
    ys = enumerate_level(g.shape, depth)
    masses = cylinder_masses(mu, depth)
    table = level_table(g, depth)
    val = 0.0
    err = 0.0
    cache = {}
    for i, y in enumerate(ys):
        if f[i] == 0 or r[table[i]] == 0:
            continue
        h = section(g, y)
        k = h.key()
        if k is not None and k in cache:
            lo, hi = cache[k]
        else:
            lo, hi = section_affinity(h, mu, depth)
            if k is not None:
                cache[k] = (lo, hi)
        c = float(f[i]) * float(r[table[i]]) * math.sqrt(masses[i] * masses[table[i]])
        val += c * (lo + hi) / 2
        err += abs(c) * (hi - lo) / 2
    return val, err


# --------------------------------------------------------------------------
# rigidity along shrinking cylinders


def function_coefficients(values, mu: ProductMeasure, n: int) -> np.ndarray:
    """Normalized-basis coordinates of the depth-``n`` function with ``values``."""
    masses = cylinder_masses(mu, n)
    return np.array([float(v) * math.sqrt(m) for v, m in zip(values, masses)])


@dataclass
class RigidityStep:
    m: int
    O: tuple
    word: str
    value: float
    bound: float
    printed_bound: float
    mass: Fraction
    error: float = 0.0

    @property
    def ok(self) -> bool:
        return self.value + self.error <= self.bound + 1e-12


@dataclass
class RigidityTrace:
    steps: list

    @property
    def ok(self) -> bool:
        return all(s.ok for s in self.steps)

    def to_json(self):
        return [{"m": s.m, "O": [a + 1 for a in s.O], "word": s.word, "value": s.value, "bound": s.bound,
                 "printed_bound": s.printed_bound, "mu_O": str(s.mass), "error": s.error} for s in self.steps]


def rigidity_trace(G: GeneratedGroup, mu: ProductMeasure, f, r, chain, depth: int, radius: int = 2,
                   candidates=None) -> RigidityTrace:
    """``|<kappa(g_m) f, r> - <f, r>|`` for ``g_m`` supported in ``O_m``.

    ``f`` and ``r`` are depth-``depth`` value vectors; ``candidates`` maps
    ``len(O_m)`` to an extra word to try.  The bound checked at every step
    is ``||f 1_O|| ||r|| + |<f 1_O, r>|`` (Cauchy-Schwarz on the part of
    ``f`` inside ``O``); the form with ``||f|| ||1_O||`` in place of
    ``||f 1_O||`` agrees with it for constant ``f`` and is reported as
    ``printed_bound``.  Coefficients go through :func:`koopman_coefficient`,
    so elements acting on non-uniform deep levels are allowed."""
    f = np.asarray(f, dtype=float)
    r = np.asarray(r, dtype=float)
    cf = function_coefficients(f, mu, depth)
    cr = function_coefficients(r, mu, depth)
    ys = enumerate_level(G.shape, depth)
    masses = cylinder_masses(mu, depth)
    base = float(cf @ cr)
    steps = []
    for m, O in enumerate(chain, start=1):
        O = tuple(O)
        extra = (candidates or {}).get(len(O))
        extra = [] if extra is None else [extra]
        words = rigid_stabilizer_elements(G, O, radius, candidates=extra)
        if not words:
            raise NoStabilizerElement(m)
        w = words[0]
        g = G.evaluate(w)
        coef, err = koopman_coefficient(g, mu, f, r, depth)
        inside = np.array([1.0 if y[:len(O)] == O else 0.0 for y in ys])
        value = abs(coef - base)
        fO = cf * inside
        mass_O = sum(p for p, s in zip(masses, inside) if s)
        bound = float(np.linalg.norm(fO) * np.linalg.norm(cr) + abs(fO @ cr))
        printed = float(np.linalg.norm(cf) * math.sqrt(mass_O) * np.linalg.norm(cr) + abs(fO @ cr))
        steps.append(RigidityStep(m, O, str(w), value, bound, printed, mass_O, err))
    return RigidityTrace(steps)


# --------------------------------------------------------------------------
# weak containment: matching matrix coefficients of two measures


@dataclass
class WeakContainmentReport:
    k_eps: int
    eps: float
    C: float
    bound: float
    coefficients_mu: dict
    coefficients_nu: dict
    coefficients_nu_direct: dict
    differences: dict
    agreement: float
    y_mass: Fraction
    preimage_masses: dict

    @property
    def ok(self) -> bool:
        return max(self.differences.values()) < self.bound

    def to_json(self):
        return {"k_eps": self.k_eps, "eps": self.eps, "C": self.C, "bound": self.bound,
                "coefficients_mu": self.coefficients_mu, "coefficients_nu": self.coefficients_nu,
                "coefficients_nu_direct": self.coefficients_nu_direct, "differences": self.differences,
                "agreement": self.agreement, "Y_mass": str(self.y_mass),
                "preimage_masses": {k: str(v) for k, v in self.preimage_masses.items()}, "ok": self.ok}


def _clean_prefixes(g: Automorphism, k: int) -> set:
    """Depth-``k`` prefixes at which the section of ``g`` is trivial."""
    return {y for y in enumerate_level(g.shape, k) if is_trivial(section(g, y))}


def find_k_eps(G: GeneratedGroup, F, mu: ProductMeasure, n: int, eps, max_k: int = 20):
    """Least ``k > n`` with ``mu(Y_k) > 1 - eps`` and ``mu(g^-1 Y_k) > 1 - eps``
    for all ``g`` in ``F``, ``Y_k`` the prefixes where every ``g`` is clean."""
    eps = Fraction(eps).limit_denominator(10 ** 12) if not isinstance(eps, Fraction) else eps
    elems = {name: G.evaluate(name) for name in F}
    for k in range(n + 1, max_k + 1):
        masses = cylinder_masses(mu, k)
        Y = set.intersection(*(_clean_prefixes(g, k) for g in elems.values()))
        idx = {y: i for i, y in enumerate(enumerate_level(G.shape, k))}
        yM = sum(masses[idx[y]] for y in Y)
        if yM <= 1 - eps:
            continue
        pre = {}
        for name, g in elems.items():
            table = level_table(g, k)
            ys = enumerate_level(G.shape, k)
            # g^-1 Y = prefixes whose image lies in Y
            pre[name] = sum(masses[i] for i, y in enumerate(ys) if ys[table[i]] in Y)
        if all(v > 1 - eps for v in pre.values()):
            return k, Y, yM, pre
    raise KEpsNotFound(f"no k <= {max_k} reaches eps = {eps}")


def weak_containment_experiment(G: GeneratedGroup, F, mu: ProductMeasure, nu: ProductMeasure, f, n: int,
                                eps=0.01, use_phi: bool = True, max_k: int = 20) -> WeakContainmentReport:
    """Compare ``<kappa_mu(g) f, f>`` with ``<kappa_nu(g) f~, f~>`` where
    ``f~ = f * sqrt(d mu_k / d nu_k) * 1_Y`` on the first ``k_eps`` letters.

    The ``nu`` coefficient is computed twice: through Koopman matrices on
    the cylinders where ``f~`` lives, and as a direct cylinder sum."""
    f = [float(v) for v in f]
    C = max(abs(v) for v in f)
    k, Y, yM, pre = find_k_eps(G, F, mu, n, eps, max_k)
    ys = enumerate_level(G.shape, k)
    m_mu = cylinder_masses(mu, k)
    m_nu = cylinder_masses(nu, k)
    fk = [f[prefix_index(G.shape, y[:n])] for y in ys]
    phi = [math.sqrt(a / b) if use_phi else 1.0 for a, b in zip(m_mu, m_nu)]
    ft = [v * p if y in Y else 0.0 for v, p, y in zip(fk, phi, ys)]
    support = [y for y, v in zip(ys, ft) if v != 0.0]
    c_f = function_coefficients(f, mu, n)
    c_ft = function_coefficients(ft, nu, k)
    co_mu, co_nu, co_direct, diff = {}, {}, {}, {}
    for name in F:
        g = G.evaluate(name)
        Mmu = koopman_matrix(g, mu, n)
        co_mu[name] = float((Mmu.matrix @ c_f) @ c_f)
        Mnu = koopman_matrix(g, nu, k, columns=support)
        co_nu[name] = float((Mnu.matrix @ c_ft) @ c_ft)
        # direct sum over y in the support: f~(y) f~(g y) sqrt(nu[y] nu[gy])
        table = level_table(g, k)
        s = 0.0
        for i, y in enumerate(ys):
            if ft[i] == 0.0:
                continue
            j = table[i]
            s += ft[i] * ft[j] * math.sqrt(m_nu[i] * m_nu[j])
        co_direct[name] = s
        diff[name] = abs(co_mu[name] - co_nu[name])
    agreement = max(abs(co_nu[x] - co_direct[x]) for x in F)
    return WeakContainmentReport(k, float(eps), C, 2 * C * C * float(eps), co_mu, co_nu, co_direct, diff,
                                 agreement, yM, pre)
