import json
from pathlib import Path

import pytest

from treedyn import cli
from treedyn.registry import REGISTRY

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def run(argv, capsys):
    code = cli.main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_list_has_many_entries(capsys):
    code, out, _ = run(["list"], capsys)
    assert code == 0
    assert len(out.strip().splitlines()) >= 10
    code, out, _ = run(["list", "--json"], capsys)
    assert json.loads(out)["format_version"] == "1"


def test_describe_example_37(capsys):
    code, out, _ = run(["describe", "example-3.7"], capsys)
    assert code == 0
    assert "μ_θ-finitary but not μ_λ-finitary" in out


def test_describe_unknown(capsys):
    code, _, err = run(["describe", "nosuch"], capsys)
    assert code == 4
    assert "nosuch" in err


def test_malformed_rational_pointer(tmp_path, capsys):
    cfg = {"format_version": "1", "operation": "kakutani",
           "measures": {"mu": {"kind": "uniform"}, "nu": {"kind": "bernoulli", "p": ["1/0", "1"]}}}
    p = tmp_path / "bad.json"
    p.write_text(json.dumps(cfg))
    code, _, err = run(["validate", str(p)], capsys)
    assert code == 4 and "/measures/nu/p/0" in err
    code, _, err = run(["run", str(p)], capsys)
    assert code == 4 and "/measures/nu/p/0" in err


def test_schema_error_pointer(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text(json.dumps({"format_version": "1", "operation": "kakutani", "parameters": {"horizon": 0}}))
    code, _, err = run(["validate", str(p)], capsys)
    assert code == 4 and "/parameters/horizon" in err


def test_sampling_needs_seed(tmp_path, capsys):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"format_version": "1", "operation": "cocycle",
                             "measures": {"mu": {"kind": "uniform"}}}))
    code, _, err = run(["run", str(p)], capsys)
    assert code == 4 and "/parameters/seed" in err


def test_run_kakutani_outputs(tmp_path, capsys):
    out = tmp_path / "k"
    code, stdout, _ = run(["run", str(CONFIGS / "kakutani.json"), "--out", str(out)], capsys)
    assert code == 0 and "Orthogonal" in stdout
    rep = json.loads((out / "report.json").read_text())
    assert rep["format_version"] == "1"
    assert all("evidence" in v for v in rep["verdicts"])
    assert rep["content_hash"] == cli.content_hash(rep)
    assert (out / "affinities.csv").read_text().startswith("# format_version=1\nn,affinity")
    assert (out / "log_products.svg").read_text().lstrip().startswith("<?xml")
    first = {f: (out / f).read_bytes() for f in rep["artifacts"] + ["report.json"]}
    run(["run", str(CONFIGS / "kakutani.json"), "--out", str(out)], capsys)
    assert first == {f: (out / f).read_bytes() for f in first}


def test_run_minimality(capsys):
    code, out, _ = run(["run", str(CONFIGS / "minimality-grigorchuk.json")], capsys)
    assert code == 0 and out.count("PASS") == 5


def test_seeded_runs_identical(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert run(["run", str(CONFIGS / "cocycle.json"), "--out", str(tmp_path / "o")], capsys)[0] == 0
        (tmp_path / "o" / "report.json").rename(d)
    assert a.read_bytes() == b.read_bytes()


def test_cap_exit_code(tmp_path, capsys):
    p = tmp_path / "k.json"
    p.write_text(json.dumps({"format_version": "1", "operation": "koopman", "element": "a",
                             "measures": {"mu": {"kind": "uniform"}}, "parameters": {"depth": 6, "cap": 8}}))
    code, _, err = run(["run", str(p)], capsys)
    assert code == 3 and "cap" in err


def test_negative_verdict_exit_code(tmp_path, capsys):
    p = tmp_path / "k.json"
    p.write_text(json.dumps({"format_version": "1", "operation": "koopman", "element": "b",
                             "measures": {"mu": {"kind": "bernoulli", "p": ["2/3", "1/3"]}},
                             "parameters": {"depth": 3}}))
    code, out, _ = run(["run", str(p)], capsys)
    assert code == 2 and "FAIL" in out


@pytest.mark.parametrize("name", ["grigorchuk-relations", "example-4.2-fsets"])
def test_reproduce_matches_golden(name, capsys):
    code, out, _ = run(["reproduce", name], capsys)
    assert code == 0, out
    assert "match golden" in out


def test_reproduce_detects_mismatch(tmp_path, monkeypatch, capsys):
    g = json.loads(cli.golden_path("example-4.2-fsets").read_text())
    g["data"]["rows"][1]["size"] = 3
    bad = tmp_path / "example-4.2-fsets.json"
    bad.write_text(json.dumps(g))
    monkeypatch.setattr(cli, "golden_path", lambda name: bad)
    code, out, _ = run(["reproduce", "example-4.2-fsets"], capsys)
    assert code == 2
    assert "/data/rows/1/size" in out


def test_every_entry_has_golden():
    for name in REGISTRY:
        assert cli.golden_path(name).exists(), name


def test_diff_json_float_tolerance():
    assert cli.diff_json({"x": 1.0}, {"x": 1.0 + 1e-13}) == []
    assert cli.diff_json({"x": [1, 2]}, {"x": [1, 3]}) == ["/x/1: 2 != 3"]


def test_cache_dir(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv(cli.CACHE_ENV, str(tmp_path))
    assert run(["reproduce", "grigorchuk-relations"], capsys)[0] == 0
    assert list(tmp_path.glob("grigorchuk-relations-*.json"))
    assert run(["reproduce", "grigorchuk-relations"], capsys)[0] == 0
