import json
import os

import pytest

from dss.cli import main


def run_cli(*argv):
    return main(list(argv))


def test_landscape_emits_full_grid(tmp_path):
    out = tmp_path / "grid.csv"
    assert run_cli("landscape", "--objective", "branin", "--resolution", "101",
                   "--out", str(out)) == 0
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "x1,x2,value"
    assert len(lines) == 1 + 101 * 101


def test_optimize_writes_trace_with_budget_rows(tmp_path, capsys):
    out = tmp_path / "run.csv"
    code = run_cli("optimize", "--objective", "branin", "--budget", "12",
                   "--seed", "7", "--out", str(out))
    assert code == 0
    lines = out.read_text().strip().splitlines()
    assert len(lines) == 1 + 12
    printed = json.loads(capsys.readouterr().out.strip())
    assert printed["objective"] == "branin"
    assert printed["evaluations"] == 12
    assert printed["best_score"] <= 150.0


def test_optimize_supports_json_and_memory_dump(tmp_path):
    out = tmp_path / "run.csv"
    out_json = tmp_path / "run.json"
    mem = tmp_path / "memory.csv"
    code = run_cli("optimize", "--objective", "styblinski", "--budget", "10",
                   "--out", str(out), "--out-json", str(out_json),
                   "--dump-memory", str(mem))
    assert code == 0
    doc = json.loads(out_json.read_text())
    assert doc["n_evaluations"] == 10
    assert mem.read_text().splitlines()[0] == "cell_0,cell_1"


def test_optimize_accepts_space_override(tmp_path):
    space_file = tmp_path / "space.json"
    space_file.write_text(json.dumps({"params": [
        {"name": "x1", "kind": "continuous", "low": 0.0, "high": 5.0},
        {"name": "x2", "kind": "continuous", "low": 0.0, "high": 5.0},
    ]}))
    out = tmp_path / "run.csv"
    assert run_cli("optimize", "--objective", "branin", "--budget", "10",
                   "--space", str(space_file), "--out", str(out)) == 0


def test_space_override_outside_domain_is_usage_error(tmp_path, capsys):
    space_file = tmp_path / "space.json"
    space_file.write_text(json.dumps({"params": [
        {"name": "x1", "kind": "continuous", "low": -50.0, "high": 50.0},
        {"name": "x2", "kind": "continuous", "low": 0.0, "high": 15.0},
    ]}))
    code = run_cli("optimize", "--objective", "branin", "--budget", "10",
                   "--space", str(space_file), "--out", str(tmp_path / "x.csv"))
    assert code == 1
    assert "domain" in capsys.readouterr().err


def test_gen_data_is_deterministic(tmp_path):
    d1, d2 = tmp_path / "a", tmp_path / "b"
    for d in (d1, d2):
        assert run_cli("gen-data", "--seed", "3", "--train", "200", "--valid", "50",
                       "--out-dir", str(d)) == 0
    assert (d1 / "train.ffm").read_text() == (d2 / "train.ffm").read_text()
    assert (d1 / "valid.ffm").read_text() == (d2 / "valid.ffm").read_text()
    assert len((d1 / "train.ffm").read_text().strip().splitlines()) == 200


def test_benchmark_and_report_pipeline(tmp_path):
    trace = tmp_path / "bench.csv"
    summary = tmp_path / "summary.csv"
    code = run_cli("benchmark", "--objective", "branin", "--budget", "10",
                   "--strategy", "random", "--seeds", "1,2", "--out", str(trace))
    assert code == 0
    assert len(trace.read_text().strip().splitlines()) == 1 + 2 * 10
    assert run_cli("report", str(trace), "--out", str(summary)) == 0
    lines = summary.read_text().strip().splitlines()
    assert lines[0].startswith("strategy,objective,median_best")
    assert len(lines) == 2


def test_unknown_flag_is_usage_error(capsys):
    assert run_cli("optimize", "--wat") == 1
    assert capsys.readouterr().err.strip()


def test_unknown_objective_is_runtime_error(tmp_path, capsys):
    code = run_cli("optimize", "--objective", "nope", "--out", str(tmp_path / "x.csv"))
    assert code == 2
    assert "nope" in capsys.readouterr().err


def test_missing_space_file_is_runtime_error(tmp_path, capsys):
    code = run_cli("optimize", "--objective", "branin",
                   "--space", str(tmp_path / "missing.json"),
                   "--out", str(tmp_path / "x.csv"))
    assert code == 2


def test_grid_objective_via_file(tmp_path):
    grid = tmp_path / "surface.csv"
    grid.write_text("x1,x2,value\n0.0,0.0,1.0\n0.0,1.0,2.0\n1.0,0.0,3.0\n1.0,1.0,4.0\n")
    out = tmp_path / "run.csv"
    assert run_cli("optimize", "--objective", f"grid:{grid}", "--budget", "9",
                   "--out", str(out)) == 0
    assert len(out.read_text().strip().splitlines()) == 1 + 9


def test_help_lists_defaults(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["optimize", "--help"])
    assert exc.value.code == 0
    text = capsys.readouterr().out
    assert "0.75" in text  # exploit fraction default
    assert "--dump-memory" in text
