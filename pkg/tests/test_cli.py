"""Exit codes, preset resolution, and output wiring of the console entry point."""

import json
import subprocess
import sys

import pytest

from flexsched.cli import main
from flexsched.harness import VerificationError, parse_csv

TINY = {
    "grid": {
        "freq_units": 2,
        "time_units": 2,
        "mu_max": 1,
        "numerologies": [{"mu": 0}, {"mu": 1}],
    },
    "users": [
        {
            "id": 0,
            "service_class": "urllc",
            "spectral_efficiency": 1.0,
            "demand_q_kbps": 50.0,
            "latency_tau_ms": 1.0,
            "slack_u_kbps": 20.0,
        },
        {"id": 1, "service_class": "embb", "spectral_efficiency": 1.0},
    ],
    "rate_params": {"ctrl_overhead": 0.0, "frame_duration_ms": 2.0},
}


@pytest.fixture
def tiny_path(tmp_path):
    path = tmp_path / "tiny.json"
    path.write_text(json.dumps(TINY))
    return path


def test_solve_file_scenario_prints_row(tiny_path, capsys):
    assert main(["solve", "--scenario", str(tiny_path), "--method", "p0"]) == 0
    out = capsys.readouterr().out
    lines = out.strip().splitlines()
    assert lines[0].split()[:2] == ["method", "status"]
    assert len(lines) == 2
    assert lines[1].split()[:2] == ["p0", "Optimal"]


def test_solve_writes_csv_with_timing(tiny_path, tmp_path, capsys):
    out_csv = tmp_path / "row.csv"
    assert (
        main(["solve", "--scenario", str(tiny_path), "--method", "p1", "--out", str(out_csv)])
        == 0
    )
    assert f"wrote {out_csv}" in capsys.readouterr().out
    rows = parse_csv(out_csv)
    assert len(rows) == 1
    assert rows[0].metrics.method == "p1"
    assert rows[0].metrics.solve_wall_time_s > 0.0  # solve keeps wall clocks


def test_solve_accepts_preset_name(capsys):
    assert main(["solve", "--scenario", "tiny_scenario", "--method", "heuristic"]) == 0
    assert "BestEffort" in capsys.readouterr().out


def test_solve_node_limit_reaches_solver(tiny_path, capsys):
    assert (
        main(["solve", "--scenario", str(tiny_path), "--method", "p1", "--node-limit", "1"]) == 0
    )
    row = capsys.readouterr().out.strip().splitlines()[1]
    assert row.split()[1] == "NodeLimit"


def test_validate_reports_counts(tiny_path, capsys):
    assert main(["validate", "--scenario", str(tiny_path)]) == 0
    out = capsys.readouterr().out
    assert out.startswith("ok: grid 2x2 mu_max=1, 4 blocks, 2 users (1 urllc)")


def test_validate_rejects_unknown_field(tmp_path, capsys):
    bad = dict(TINY, extra=1)
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(bad))
    assert main(["validate", "--scenario", str(path)]) == 1
    assert "unknown field" in capsys.readouterr().err


def test_missing_file_and_preset_lists_presets(capsys):
    assert main(["validate", "--scenario", "no_such_thing"]) == 1
    err = capsys.readouterr().err
    assert "neither a file nor a packaged preset" in err
    assert "desk_scenario" in err and "tiny_scenario" in err


def test_compare_runs_every_method(tmp_path, capsys):
    scenario = dict(TINY, methods=["p1"])
    path = tmp_path / "p1only.json"
    path.write_text(json.dumps(scenario))
    assert main(["compare", "--scenario", str(path)]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert [line.split()[0] for line in lines[1:]] == ["heuristic", "p0", "p1"]


def test_sweep_writes_csv_and_plot_data(tiny_path, tmp_path, capsys):
    spec = {
        "base_scenario": TINY,
        "demand_values_kbps": [40.0],
        "latency_values_ms": [0.5, 1.0],
        "slack_table": [
            {"demand_kbps": 40.0, "latency_ms": 0.5, "u_kbps": 10.0},
            {"demand_kbps": 40.0, "latency_ms": 1.0, "u_kbps": 10.0},
        ],
    }
    spec_path = tmp_path / "spec.json"
    spec_path.write_text(json.dumps(spec))
    out_dir = tmp_path / "out"
    assert main(["sweep", "--spec", str(spec_path), "--out-dir", str(out_dir)]) == 0
    out = capsys.readouterr().out
    csv_path = out_dir / "sweep.csv"
    plot_path = out_dir / "embb_vs_latency_demand_40kbps.dat"
    assert f"wrote {csv_path}" in out and f"wrote {plot_path}" in out
    rows = parse_csv(csv_path)
    assert len(rows) == 6  # 1 demand x 2 latencies x 3 methods
    assert all(row.metrics.solve_wall_time_s == 0.0 for row in rows)  # timing blanked
    assert plot_path.read_text().startswith("# method: heuristic\n")


def test_sweep_missing_slack_entry_exits_one(tmp_path, capsys):
    spec = {
        "base_scenario": TINY,
        "demand_values_kbps": [40.0],
        "latency_values_ms": [0.5],
        "slack_table": [{"demand_kbps": 40.0, "latency_ms": 1.0, "u_kbps": 10.0}],
    }
    spec_path = tmp_path / "spec.json"
    spec_path.write_text(json.dumps(spec))
    assert main(["sweep", "--spec", str(spec_path), "--out-dir", str(tmp_path / "out")]) == 1
    assert "no u_kbps entry" in capsys.readouterr().err


def test_usage_errors_exit_one(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["solve", "--method", "p0"])  # --scenario missing
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        main(["solve", "--scenario", "x", "--method", "simplex"])
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == 1


def test_verification_failure_exits_two(tiny_path, monkeypatch, capsys):
    def explode(scenario, node_limit):
        raise VerificationError("planted")

    monkeypatch.setattr("flexsched.cli.run_scenario", explode)
    assert main(["solve", "--scenario", str(tiny_path), "--method", "p0"]) == 2
    assert "planted" in capsys.readouterr().err


def test_console_script_entry_point(tiny_path):
    proc = subprocess.run(
        [sys.executable, "-m", "flexsched.cli", "validate", "--scenario", str(tiny_path)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert proc.stdout.startswith("ok:")
