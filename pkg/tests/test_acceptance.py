"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line."""
import math
import time
from fractions import Fraction

import pytest

from treedyn.automorphism import Identity, equal_to_depth, level_table
from treedyn.cocycle import PLAIN, f_sets
from treedyn.measures import ORTHOGONAL, bernoulli, haar, kakutani_classify
from treedyn.registry import get_entry
from treedyn.tree import BINARY

RESULTS = []


def record(n, title, checks, elapsed, budget):
    failed = [name for name, ok in checks if not ok]
    ok = not failed and elapsed < budget
    line = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {title}  [{elapsed:.2f}s / {budget}s]"
    if failed:
        line += "  failed: " + "; ".join(failed)
    print(line)
    RESULTS.append(line)
    assert not failed, line
    assert elapsed < budget, line


def verdict_checks(bundle):
    return [(v["claim"], v["holds"] is True) for v in bundle["verdicts"]]


def run_entry(name, **overrides):
    t = time.perf_counter()
    b = get_entry(name).run(**overrides)
    return b, time.perf_counter() - t


def test_criterion_01_relations(G):
    t = time.perf_counter()
    b = get_entry("grigorchuk-relations").run()
    e = Identity(BINARY)
    checks = verdict_checks(b)
    for w in ("aa", "bb", "cc", "dd", "bcd"):
        checks.append((f"{w} = 1 on the depth-12 table", equal_to_depth(G.evaluate(w), e, 12)))
    record(1, "Grigorchuk relations", checks, time.perf_counter() - t, 1)


def test_criterion_02_minimality():
    t = time.perf_counter()
    checks = []
    for name in ("minimality-grigorchuk", "minimality-parity"):
        b = get_entry(name).run(levels=5)
        checks += [(f"{name}: {c}", ok) for c, ok in verdict_checks(b)]
        checks.append((f"{name}: five levels", len(b["verdicts"]) == 10))
    record(2, "minimality at levels 1-5", checks, time.perf_counter() - t, 10)


def test_criterion_03_cocycle():
    b, dt = run_entry("cocycle-exactness", seed=0, samples=1000)
    checks = verdict_checks(b) + [("no failing triples", b["data"]["failures"] == 0)]
    record(3, "cocycle identities on 1000 exact triples", checks, dt, 30)


def test_criterion_04_factorial_fsets():
    b, dt = run_entry("example-4.2-fsets", upto=24)
    t = time.perf_counter()
    from treedyn.constructions import factorial_element
    g = factorial_element().elements["g"]
    H = haar()
    sizes = {n: f_sets(g, n, PLAIN, H).cardinality for n in range(1, 25)}
    checks = verdict_checks(b) + [
        ("F_n empty off factorials (direct)", all(s == 0 for n, s in sizes.items() if n not in (1, 2, 6, 24))),
        ("|F_2| = 2", sizes[2] == 2),
        ("|F_6| = 4", sizes[6] == 4),
        ("Haar masses 1/2 and 1/16", (f_sets(g, 2, PLAIN, H).measure, f_sets(g, 6, PLAIN, H).measure)
         == (Fraction(1, 2), Fraction(1, 16))),
    ]
    record(4, "factorial F-sets", checks, dt + time.perf_counter() - t, 5)


def test_criterion_05_kakutani():
    b, dt = run_entry("corollary-5.4-kakutani")
    t = time.perf_counter()
    r = kakutani_classify(haar(), bernoulli("1/4", "3/4"))
    aff = (math.sqrt(1 / 8) + math.sqrt(3 / 8))
    checks = verdict_checks(b) + [
        ("Haar vs Bernoulli(1/4,3/4) orthogonal, closed form", r.verdict == ORTHOGONAL and r.evidence == "ClosedForm"),
        ("affinity 0.965926 +- 1e-6", abs(aff - 0.965926) <= 1e-6 and abs(r.period_factor - aff) <= 1e-12),
    ]
    record(5, "Kakutani classifier", checks, dt + time.perf_counter() - t, 5)


def test_criterion_06_three_stage_build():
    b, dt = run_entry("theorem-5.3-grigorchuk-3stages", stages=3)
    checks = verdict_checks(b) + [("three stages built", len(b["data"]["stages"]) == 3)]
    record(6, "three-stage lambda^omega build", checks, dt, 300)


def test_criterion_07_dissipative_witness():
    b, dt = run_entry("example-4.4", stages=3)
    lb = Fraction(b["data"]["mass_lower_bound"])
    checks = verdict_checks(b) + [("exact lower bound positive", lb > 0)]
    record(7, "dissipativity witness", checks, dt, 120)


def test_criterion_08_non_ergodic_witness():
    t = time.perf_counter()
    checks = []
    for name in ("example-4.5", "example-4.6"):
        b = get_entry(name).run(seed=0, stages=3)
        checks += [(f"{name}: {c}", ok) for c, ok in verdict_checks(b)]
        checks.append((f"{name}: A and B masses positive",
                       Fraction(b["data"]["A_mass"]) > 0 and Fraction(b["data"]["B_mass"]) > 0))
    record(8, "non-ergodicity witnesses", checks, time.perf_counter() - t, 120)


def test_criterion_09_koopman_diagnostics():
    t = time.perf_counter()
    checks = []
    for depth in (4, 5, 6):
        b = get_entry("koopman-diagnostics").run(depth=depth)
        checks += [(f"depth {depth}: {c}", ok) for c, ok in verdict_checks(b)]
    fx = b["data"]["fixed_space"]
    checks.append(("fixed-space dimension covers the complement cylinders", fx["dimension"] >= fx["outside_count"]))
    record(9, "Koopman diagnostics", checks, time.perf_counter() - t, 60)


def test_criterion_10_weak_containment():
    b, dt = run_entry("theorem-7.1-weak-containment", eps=0.01)
    exp = b["data"]["experiment"]
    checks = verdict_checks(b) + [
        ("max difference < 2 C^2 eps", max(exp["differences"].values()) < 2 * 0.01),
        ("matrix vs direct agreement <= 1e-12", exp["agreement"] <= 1e-12),
    ]
    record(10, "coefficient approximation bound", checks, dt, 120)


def test_criterion_11_rigidity():
    b, dt = run_entry("proposition-2.1-rigidity", depth=6)
    checks = verdict_checks(b)
    for mname, tr in b["data"].items():
        steps = tr
        checks.append((f"{mname}: six steps", len(steps) == 6))
        checks.append((f"{mname}: trace <= 2 sqrt(mass)",
                       all(s["value"] <= 2 * math.sqrt(Fraction(s["mu_O"])) + 1e-12 for s in steps)))
    record(11, "rigidity trace", checks, dt, 60)


def test_criterion_12_bifurcation():
    b, dt = run_entry("example-4.3-bifurcation", lo=8, hi=16)
    h = b["data"]["entropy"]
    checks = verdict_checks(b) + [("h = 0.6365 +- 1e-3", abs(h - 0.6365) <= 1e-3)]
    record(12, "bifurcation probe", checks, dt, 60)
