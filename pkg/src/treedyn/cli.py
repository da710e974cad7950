"""Command line: run configs, reproduce corpus entries, list/describe, validate.

Exit codes: 0 ok, 2 negative verdict or golden mismatch, 3 cap exceeded,
4 configuration error.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from importlib import resources
from pathlib import Path

import jsonschema

from . import __version__
from .errors import CapExceeded, ConfigError, TreedynError
from .registry import REGISTRY, bundle_ok, canon, get_entry, verdict

FORMAT_VERSION = "1"
EXIT_OK, EXIT_NEGATIVE, EXIT_CAP, EXIT_CONFIG = 0, 2, 3, 4
DEFAULT_CAP = 1 << 20
CACHE_ENV = "TREEDYN_CACHE_DIR"
FLOAT_RTOL = 1e-9


# --------------------------------------------------------------------------
# configs


def load_schema(name="config"):
    return json.loads(resources.files("treedyn").joinpath("schemas", f"{name}.json").read_text())


def _pointer(path) -> str:
    return "".join(f"/{p}" for p in path) or "/"


def schema_errors(cfg, name="config") -> list:
    """``[(json_pointer, message)]`` sorted by pointer."""
    v = jsonschema.Draft202012Validator(load_schema(name))
    return sorted((_pointer(e.absolute_path), e.message) for e in v.iter_errors(cfg))


def read_config(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError("/", f"cannot read {path}: {exc.strerror}")
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("/", f"invalid JSON at line {exc.lineno}: {exc.msg}")


def apply_defaults(cfg: dict, seed=None, cap=None, horizon=None, out=None) -> dict:
    """Defaulted copy with every cap explicit; flags override the file."""
    cfg = json.loads(json.dumps(cfg))
    params = cfg.setdefault("parameters", {})
    if seed is not None:
        params["seed"] = seed
    if cap is not None:
        params["cap"] = cap
    if horizon is not None:
        params["horizon"] = horizon
    params.setdefault("cap", DEFAULT_CAP)
    op = cfg["operation"]
    defaults = {
        "kakutani": {"horizon": 256},
        "minimality": {"levels": 5},
        "finitarity": {"horizon": 12, "deltas": [0.51, 0.6, 0.75, 0.9]},
        "cocycle": {"samples": 100, "horizon": 256},
        "koopman": {"depth": 3},
        "rigidity": {"depth": 6},
        "reproduce": {},
    }[op]
    for k, v in defaults.items():
        params.setdefault(k, v)
    if op == "cocycle" and "seed" not in params:
        raise ConfigError("/parameters/seed", "a seed is required for sampling operations")
    outputs = cfg.setdefault("outputs", {})
    if out is not None:
        outputs["dir"] = str(out)
    outputs.setdefault("svg", False)
    outputs.setdefault("csv", True)
    cfg.setdefault("group", "grigorchuk")
    return cfg


def validate_config(cfg) -> None:
    errs = schema_errors(cfg)
    if errs:
        ptr, msg = errs[0]
        raise ConfigError(ptr, msg + (f" (and {len(errs) - 1} more)" if len(errs) > 1 else ""))


def _shape(cfg):
    from .tree import BINARY, TreeShape
    if "shape" in cfg:
        return TreeShape.from_json(cfg["shape"], "/shape")
    return BINARY


def build_measure(obj, shape, pointer):
    if obj.get("kind") == "lambda-omega":
        from .constructions import build_measure_family, grigorchuk
        from .measures import OmegaWord
        fam = build_measure_family(grigorchuk(), stages=obj.get("stages", 3))
        return fam.measure(OmegaWord(tuple(obj.get("omega", [])), obj.get("tail_letter", 0)))
    from .measures import measure_from_json
    return measure_from_json(obj, shape, pointer)


def _measures(cfg, shape, *names):
    ms = cfg.get("measures", {})
    out = []
    for n in names:
        if n not in ms:
            raise ConfigError(f"/measures/{n}", "missing measure")
        out.append(build_measure(ms[n], shape, f"/measures/{n}"))
    return out


def _element(G, cfg):
    w = cfg.get("element")
    if w is None:
        raise ConfigError("/element", "operation needs an element word")
    try:
        return G.evaluate(w)
    except (KeyError, ValueError) as exc:
        raise ConfigError("/element", f"cannot evaluate {w!r}: {exc}")


# --------------------------------------------------------------------------
# output helpers


def to_csv(header, rows) -> str:
    buf = io.StringIO()
    buf.write(f"# format_version={FORMAT_VERSION}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow(r)
    return buf.getvalue()


def to_svg(title, series, xlabel="n", ylabel="") -> str:
    """Line plot; ``series`` maps a label to ``(xs, ys)``."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    matplotlib.rcParams["svg.hashsalt"] = "treedyn"
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, (xs, ys) in series.items():
        ax.plot(xs, ys, marker="o", ms=3, label=label)
    ax.set_title(title)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if len(series) > 1:
        ax.legend()
    buf = io.StringIO()
    fig.savefig(buf, format="svg", metadata={"Date": None, "Description": f"format_version={FORMAT_VERSION}"})
    plt.close(fig)
    return buf.getvalue()


def content_hash(report: dict) -> str:
    body = {k: v for k, v in report.items() if k != "content_hash"}
    return hashlib.sha256(json.dumps(body, sort_keys=True).encode()).hexdigest()


# --------------------------------------------------------------------------
# operations: each returns (verdicts, data, files)


def op_kakutani(cfg, p):
    from .measures import kakutani_classify
    shape = _shape(cfg)
    mu, nu = _measures(cfg, shape, "mu", "nu")
    r = kakutani_classify(mu, nu, p["horizon"])
    vs = [verdict(f"verdict {r.verdict}", r.verdict != "Undecided", r.evidence, r.detail)]
    files = {"affinities.csv": to_csv(["n", "affinity", "cumulative_log"],
                                      [(n, repr(a), repr(c)) for n, a, c in r.trace])}
    if cfg["outputs"]["svg"]:
        files["log_products.svg"] = to_svg("Kakutani log partial products",
                                           {"log prod": ([t[0] for t in r.trace], [t[2] for t in r.trace])},
                                           ylabel="sum log affinity")
    return vs, {"kakutani": r.to_json()}, files


def op_minimality(cfg, p):
    from .groups import minimality_check
    from .registry import corpus_group
    G = corpus_group(cfg["group"], "/group")
    vs, data = [], {}
    for n in range(1, p["levels"] + 1):
        res = minimality_check(G, n, cap=p["cap"])
        vs.append(verdict(f"level {n} transitive", res.transitive, "Exact",
                          f"{len(res.witnesses)} witnesses" if res.transitive else f"{len(res.orbits)} orbits"))
        data[str(n)] = res.to_json()
    return vs, data, {}


def op_finitarity(cfg, p):
    from .cocycle import finitarity_report
    from .registry import corpus_group
    G = corpus_group(cfg["group"], "/group")
    g = _element(G, cfg)
    (mu,) = _measures(cfg, G.shape, "mu")
    rep = finitarity_report(g, mu, horizon=p["horizon"], deltas=tuple(p["deltas"]), cap=p["cap"], bullet=False)
    vs = [verdict(v.name, v.holds, v.evidence, v.detail) for v in rep.verdicts]
    files = {"fsets.csv": f"# format_version={FORMAT_VERSION}\n" + rep.to_csv()}
    if cfg["outputs"]["svg"]:
        ns = [r.n for r in rep.rows]
        files["partial_sums.svg"] = to_svg("Partial sums of |F_n| delta^n",
                                           {f"delta={d}": (ns, rep.sum_delta[d]) for d in rep.deltas})
    return vs, rep.to_json(), files


def op_cocycle(cfg, p):
    from .automorphism import apply_point, compose, invert
    from .cocycle import random_point, rn_derivative
    from .measures import rng_for
    from .registry import corpus_group
    from .groups import ball
    G = corpus_group(cfg["group"], "/group")
    (mu,) = _measures(cfg, G.shape, "mu")
    els = [G.evaluate(b.word) for b in ball(G, 2, cap=p["cap"])]
    rng = rng_for(p["seed"], 3)
    H = p["horizon"]
    bad = 0
    for _ in range(p["samples"]):
        g, h = els[rng.integers(len(els))], els[rng.integers(len(els))]
        x = random_point(mu, rng)
        lhs = rn_derivative(compose(g, h), mu, x, H).value
        if lhs != rn_derivative(g, mu, apply_point(h, x), H).value * rn_derivative(h, mu, x, H).value:
            bad += 1
        if rn_derivative(g, mu, x, H).value * rn_derivative(invert(g), mu, apply_point(g, x), H).value != 1:
            bad += 1
    vs = [verdict("cocycle identities hold", bad == 0, "Exact", f"{p['samples']} samples, seed {p['seed']}")]
    return vs, {"failures": bad, "elements": len(els)}, {}


def op_koopman(cfg, p):
    from .automorphism import compose
    from .koopman import homomorphism_defect, koopman_matrix, unitarity_defect
    from .registry import corpus_group
    from .errors import NotDepthCompatible
    from .tree import level_size
    G = corpus_group(cfg["group"], "/group")
    g = _element(G, cfg)
    (mu,) = _measures(cfg, G.shape, "mu")
    n = p["depth"]
    if level_size(G.shape, n) > p["cap"]:
        raise CapExceeded(level_size(G.shape, n), p["cap"])
    try:
        M = koopman_matrix(g, mu, n)
    except NotDepthCompatible as exc:
        from .tree import to_external
        return [verdict("depth compatible", False, "Exact", f"witness cylinder {list(to_external(exc.witness))}")], \
            {}, {}
    u = unitarity_defect(M)
    hd = homomorphism_defect(M, M, koopman_matrix(compose(g, g), mu, n))
    vs = [verdict("depth compatible", True, "Exact"),
          verdict("unitarity defect <= 1e-12", u <= 1e-12, "Numerical", repr(u)),
          verdict("kappa(g)^2 = kappa(g^2) to 1e-12", hd <= 1e-12, "Numerical", repr(hd))]
    return vs, {"unitarity": u, "homomorphism": hd}, {"matrix.txt": M.to_text(exact=True)}


def op_rigidity(cfg, p):
    import numpy as np
    from .constructions import grigorchuk_rigid_candidates
    from .koopman import rigidity_trace
    from .registry import corpus_group
    from .tree import level_size
    G = corpus_group(cfg["group"], "/group")
    (mu,) = _measures(cfg, G.shape, "mu")
    d = p["depth"]
    ones = np.ones(level_size(G.shape, d))
    chain = [(1,) * m for m in range(1, d + 1)]
    cand = grigorchuk_rigid_candidates(d) if cfg["group"] == "grigorchuk" else None
    tr = rigidity_trace(G, mu, ones, ones, chain, d, candidates=cand)
    vs = [verdict("bound holds at every step", tr.ok, "Numerical", f"{len(tr.steps)} steps")]
    rows = [(s.m, s.word, repr(s.value), repr(s.bound), str(s.mass)) for s in tr.steps]
    files = {"rigidity.csv": to_csv(["m", "word", "value", "bound", "mu_O"], rows)}
    if cfg["outputs"]["svg"]:
        ms = [s.m for s in tr.steps]
        files["rigidity.svg"] = to_svg("Rigidity trace", {"value": (ms, [s.value for s in tr.steps]),
                                                          "bound": (ms, [s.bound for s in tr.steps])}, "m")
    return vs, {"trace": tr.to_json()}, files


def op_reproduce(cfg, p):
    name = p.get("name")
    if not name:
        raise ConfigError("/parameters/name", "reproduce needs a corpus name")
    e = get_entry(name)
    b = e.run(seed=p.get("seed"))
    return b["verdicts"], b["data"], {}


OPERATIONS = {"kakutani": op_kakutani, "minimality": op_minimality, "finitarity": op_finitarity,
              "cocycle": op_cocycle, "koopman": op_koopman, "rigidity": op_rigidity, "reproduce": op_reproduce}


def run_config(cfg: dict, out_dir=None):
    """Validate, dispatch and assemble the report; returns ``(report, files, wall_time)``."""
    validate_config(cfg)
    cfg = apply_defaults(cfg)
    t0 = time.perf_counter()
    vs, data, files = OPERATIONS[cfg["operation"]](cfg, cfg["parameters"])
    wall = time.perf_counter() - t0
    report = {"format_version": FORMAT_VERSION, "tool": "treedyn", "tool_version": __version__,
              "config": cfg, "verdicts": vs, "data": data, "artifacts": sorted(files)}
    report = canon(report)
    report["content_hash"] = content_hash(report)
    return report, files, wall


def write_outputs(out_dir, report, files, wall):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    for name, text in files.items():
        (out / name).write_text(text)
    # wall time lives outside the report so repeated runs stay byte-identical
    (out / "timing.json").write_text(json.dumps({"format_version": FORMAT_VERSION, "wall_time_s": wall}) + "\n")


# --------------------------------------------------------------------------
# golden files


def golden_path(name) -> Path:
    return Path(str(resources.files("treedyn").joinpath("golden", f"{name}.json")))


def diff_json(a, b, path="", out=None, limit=20):
    """JSON pointers where ``a`` and ``b`` differ (floats compared with a
    relative tolerance)."""
    out = [] if out is None else out
    if len(out) >= limit:
        return out
    if isinstance(a, dict) and isinstance(b, dict):
        for k in sorted(set(a) | set(b)):
            if k not in a or k not in b:
                out.append(f"{path}/{k}: present on one side only")
            else:
                diff_json(a[k], b[k], f"{path}/{k}", out, limit)
    elif isinstance(a, list) and isinstance(b, list):
        if len(a) != len(b):
            out.append(f"{path or '/'}: length {len(a)} != {len(b)}")
        for i, (x, y) in enumerate(zip(a, b)):
            diff_json(x, y, f"{path}/{i}", out, limit)
    elif isinstance(a, float) or isinstance(b, float):
        if not (isinstance(a, (int, float)) and isinstance(b, (int, float))
                and math.isclose(a, b, rel_tol=FLOAT_RTOL, abs_tol=1e-12)):
            out.append(f"{path or '/'}: {a!r} != {b!r}")
    elif a != b:
        out.append(f"{path or '/'}: {a!r} != {b!r}")
    return out


def _cache_dir():
    d = os.environ.get(CACHE_ENV)
    return Path(d) if d else None


def reproduce_one(name, seed=None, update=False):
    """``(exit_code, message, bundle)`` for one corpus entry."""
    e = get_entry(name)
    key = hashlib.sha256(json.dumps([name, seed, __version__]).encode()).hexdigest()[:16]
    cache = _cache_dir()
    bundle = None
    if cache is not None and (cache / f"{name}-{key}.json").exists():
        bundle = json.loads((cache / f"{name}-{key}.json").read_text())
    if bundle is None:
        bundle = e.run(seed=seed)
        bundle = {"format_version": FORMAT_VERSION, "name": name, **bundle}
        if cache is not None:
            cache.mkdir(parents=True, exist_ok=True)
            (cache / f"{name}-{key}.json").write_text(json.dumps(bundle, sort_keys=True))
    gp = golden_path(name)
    if update:
        gp.write_text(json.dumps(bundle, indent=1, sort_keys=True) + "\n")
        return EXIT_OK, f"{name}: golden written", bundle
    if not bundle_ok(bundle):
        bad = [v["claim"] for v in bundle["verdicts"] if v["holds"] is not True]
        return EXIT_NEGATIVE, f"{name}: FAIL negative verdicts: {'; '.join(bad)}", bundle
    if not gp.exists():
        return EXIT_NEGATIVE, f"{name}: FAIL no golden file", bundle
    diffs = diff_json(json.loads(gp.read_text()), bundle)
    if diffs:
        return EXIT_NEGATIVE, f"{name}: FAIL golden mismatch\n  " + "\n  ".join(diffs), bundle
    return EXIT_OK, f"{name}: ok ({len(bundle['verdicts'])} verdicts match golden)", bundle


def _reproduce_task(args):
    name, seed, update = args
    try:
        code, msg, _ = reproduce_one(name, seed, update)
    except CapExceeded as exc:
        return EXIT_CAP, f"{name}: cap exceeded: {exc}"
    return code, msg


# --------------------------------------------------------------------------
# entry point


def build_parser():
    ap = argparse.ArgumentParser(prog="treedyn", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"treedyn {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run an experiment config")
    r.add_argument("config")
    r.add_argument("--out", help="output directory (overrides outputs.dir)")
    r.add_argument("--seed", type=int)
    r.add_argument("--cap", type=int)
    r.add_argument("--horizon", type=int)

    rp = sub.add_parser("reproduce", help="verify corpus entries against golden files")
    rp.add_argument("names", nargs="*")
    rp.add_argument("--all", action="store_true")
    rp.add_argument("--seed", type=int)
    rp.add_argument("--jobs", type=int, default=1)
    rp.add_argument("--out", help="write each bundle as <out>/<name>.json")
    rp.add_argument("--update-golden", action="store_true", help=argparse.SUPPRESS)

    ls = sub.add_parser("list", help="list corpus entries")
    ls.add_argument("--json", action="store_true")

    d = sub.add_parser("describe", help="describe a corpus entry")
    d.add_argument("name")

    v = sub.add_parser("validate", help="schema-check a config")
    v.add_argument("config")
    return ap


def cmd_run(args):
    cfg = read_config(args.config)
    validate_config(cfg)
    cfg = apply_defaults(cfg, args.seed, args.cap, args.horizon, args.out)
    report, files, wall = run_config(cfg)
    out = cfg["outputs"].get("dir")
    if out:
        write_outputs(out, report, files, wall)
    for vd in report["verdicts"]:
        state = {True: "PASS", False: "FAIL", None: "UNDECIDED"}[vd["holds"]]
        print(f"{state} [{vd['evidence']}] {vd['claim']}" + (f" ({vd['detail']})" if vd["detail"] else ""))
    print(f"wall time {wall:.2f}s", file=sys.stderr)
    return EXIT_OK if all(vd["holds"] is True for vd in report["verdicts"]) else EXIT_NEGATIVE


def cmd_reproduce(args):
    names = sorted(REGISTRY) if args.all else args.names
    if not names:
        raise ConfigError("names", "give corpus names or --all")
    for n in names:
        get_entry(n)
    tasks = [(n, args.seed, args.update_golden) for n in names]
    if args.jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(args.jobs) as ex:
            results = list(ex.map(_reproduce_task, tasks))
    else:
        results = [_reproduce_task(t) for t in tasks]
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        for n in names:
            _, _, b = reproduce_one(n, args.seed)
            Path(args.out, f"{n}.json").write_text(json.dumps(b, indent=1, sort_keys=True) + "\n")
    for _, msg in results:
        print(msg)
    return max(code for code, _ in results)


def cmd_list(args):
    if args.json:
        print(json.dumps({"format_version": FORMAT_VERSION,
                          "entries": [{"name": e.name, "anchor": e.anchor, "title": e.title}
                                      for e in REGISTRY.values()]}, indent=1))
    else:
        w = max(len(n) for n in REGISTRY)
        for e in REGISTRY.values():
            print(f"{e.name:<{w}}  {e.anchor:<16} {e.title}")
    return EXIT_OK


def cmd_describe(args):
    e = get_entry(args.name)
    print(f"{e.name}: {e.title}")
    print(f"anchor: {e.anchor}")
    print(e.description)
    if e.params:
        print("parameters: " + ", ".join(f"{k}={v}" for k, v in e.params.items()))
    if e.sampling:
        print("sampling: yes (seeded)")
    return EXIT_OK


def cmd_validate(args):
    cfg = read_config(args.config)
    errs = schema_errors(cfg)
    if not errs:
        try:
            cfg = apply_defaults(cfg)
            shape = _shape(cfg)
            from .measures import measure_from_json
            for n, m in cfg.get("measures", {}).items():
                if m.get("kind") != "lambda-omega":
                    measure_from_json(m, shape, f"/measures/{n}")
        except ConfigError as exc:
            errs = [(exc.pointer or "/", str(exc).split(": ", 1)[-1])]
    for ptr, msg in errs:
        print(f"{ptr}: {msg}", file=sys.stderr)
    if errs:
        return EXIT_CONFIG
    print("ok")
    return EXIT_OK


COMMANDS = {"run": cmd_run, "reproduce": cmd_reproduce, "list": cmd_list, "describe": cmd_describe,
            "validate": cmd_validate}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error at {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CapExceeded as exc:
        print(f"cap exceeded: {exc}", file=sys.stderr)
        return EXIT_CAP
    except TreedynError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NEGATIVE


if __name__ == "__main__":
    sys.exit(main())
