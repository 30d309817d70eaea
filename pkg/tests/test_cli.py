import json

import pytest

from resmatch.cli import main
from resmatch.instance import dumps, loads, write_market


@pytest.fixture
def prop1_file(tmp_path, prop1_cop_market):
    path = tmp_path / "prop1.json"
    write_market(prop1_cop_market, path)
    return path


def test_validate_ok(prop1_file, capsys):
    assert main(["validate", str(prop1_file)]) == 0
    assert capsys.readouterr().out.startswith("ok:")


def test_validate_duplicate_score(tmp_path, capsys):
    data = {
        "individuals": [{"id": "i"}, {"id": "j"}],
        "institutions": [{"id": "s", "capacity": 1, "scores": {"i": "5", "j": "5"}}],
    }
    path = tmp_path / "dup.json"
    path.write_text(json.dumps(data))
    assert main(["validate", str(path)]) == 1
    assert "duplicate score" in capsys.readouterr().out


def test_validate_malformed_and_missing(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("not json")
    assert main(["validate", str(bad)]) == 2
    assert main(["validate", str(tmp_path / "missing.json")]) == 2
    assert "error:" in capsys.readouterr().err


def test_run_prints_sorted_triples(prop1_file, capsys, tmp_path):
    trace = tmp_path / "trace.json"
    assert main(["run", str(prop1_file), "--policy", "no-transfer", "--trace", str(trace)]) == 0
    assert capsys.readouterr().out == "(i, s, SC)\n(j, s, GC)\n"
    assert len(json.loads(trace.read_text())["steps"]) == 3


def test_run_is_byte_identical(prop1_file, capsys):
    main(["run", str(prop1_file)])
    first = capsys.readouterr().out
    main(["run", str(prop1_file)])
    assert capsys.readouterr().out == first


def test_run_empty_market(tmp_path, capsys):
    path = tmp_path / "empty.json"
    path.write_text('{"individuals": [], "institutions": []}')
    assert main(["run", str(path)]) == 0
    assert capsys.readouterr().out == ""


def test_run_refuses_invalid_market(tmp_path, capsys):
    data = {
        "individuals": [{"id": "i", "preferences": [["s", "GC"]]}, {"id": "j"}],
        "institutions": [{"id": "s", "capacity": 1, "scores": {"i": "5", "j": "5"}}],
    }
    path = tmp_path / "dup.json"
    path.write_text(json.dumps(data))
    assert main(["run", str(path)]) == 1
    assert "duplicate score" in capsys.readouterr().out
    assert main(["run", str(path), "--break-ties"]) == 0
    assert capsys.readouterr().out == "(i, s, GC)\n"


def test_run_bad_order(prop1_file):
    assert main(["run", str(prop1_file), "--order", "i"]) == 2


def test_generate_is_deterministic(tmp_path, monkeypatch, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["generate", "--seed", "42", "--out", str(a)]) == 0
    monkeypatch.setenv("RESMATCH_SEED", "42")
    assert main(["generate", "--out", str(b)]) == 0
    assert a.read_text() == b.read_text()
    assert main(["validate", str(a)]) == 0
    market = loads(a.read_text())
    assert len(market.individuals) == 5 and len(market.institutions) == 2
    assert dumps(market) == a.read_text()


def test_generate_rejects_bad_sizes(monkeypatch):
    assert main(["generate", "--individuals", "99"]) == 2
    monkeypatch.setenv("RESMATCH_SEED", "x")
    assert main(["generate"]) == 2


def test_generated_market_audits_clean(tmp_path, capsys):
    path = tmp_path / "g.json"
    main(["generate", "--seed", "3", "--out", str(path)])
    assert main(["audit", str(path), "--lemma-probes", "0"]) == 0
    assert "all checks passed" in capsys.readouterr().out


def test_audit_prop1(capsys):
    assert main(["audit", "--prop1", "--policy", "no-transfer"]) == 0
    out = capsys.readouterr().out
    assert "fair=True stable=False" in out and "fair=False stable=True" in out


def test_audit_small_suite_and_json(tmp_path, capsys):
    out = tmp_path / "report.json"
    code = main(["audit", "--markets", "10", "--lemma-probes", "50", "--seed", "1", "--out", str(out)])
    assert code == 0
    report = json.loads(out.read_text())
    assert report["ok"] and report["config"]["seed"] == 1


def test_audit_mutant_fails_with_witness(capsys):
    code = main(["audit", "--markets", "30", "--lemma-probes", "0", "--mutant", "lowest-merit"])
    out = capsys.readouterr().out
    assert code == 1
    assert "FAIL choice-fairness" in out and "counterexample [choice-fairness]" in out


def test_audit_exhaustive_blocks_flag(capsys):
    code = main(["audit", "--markets", "3", "--lemma-probes", "0", "--exhaustive-blocks", "--policy", "transfer-gc"])
    assert code == 0
