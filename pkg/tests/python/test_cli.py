"""
CPTrap - Command Line Interface Tests

Runs `main()` in-process on small configurations and checks:
- Exit codes per error class
- CSV/JSON artifacts and their schema round trip
- Determinism of repeated runs
"""

import csv
import io
import json
import math

import pytest

from cptrap.cli import main, merge_arguments, build_parser
from cptrap.results import FAMILY_COLUMNS, parse_result_document
from cptrap.sweep import BATH_COLUMNS


# =============================================================================
# Helpers
# =============================================================================

def run_cli(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def read_csv(text):
    rows = list(csv.reader(io.StringIO(text)))
    return rows[0], [[float(x) if x not in ("true", "false") else x == "true" for x in row] for row in rows[1:]]


@pytest.fixture
def write_config(tmp_path):
    def write(document, name="run.json"):
        path = tmp_path / name
        path.write_text(json.dumps(document))
        return str(path)
    return write


@pytest.fixture(autouse=True)
def isolated_environment(monkeypatch, tmp_path):
    monkeypatch.delenv("CPTRAP_OUTPUT_DIR", raising=False)
    monkeypatch.delenv("CPTRAP_PUSHGATEWAY", raising=False)
    monkeypatch.setenv("CPTRAP_EVENT_LOG", str(tmp_path / "events.jsonl"))


# =============================================================================
# Family and sweep tables
# =============================================================================

class TestTables:

    def test_family_endpoints_are_extremal_states(self, capsys):
        code, out, _ = run_cli(capsys, "family", "--ratio", "1", "--points", "7")
        assert code == 0
        header, rows = read_csv(out)
        assert tuple(header) == FAMILY_COLUMNS
        assert len(rows) == 7
        assert rows[0][:3] == [-0.5, 0.0, 0.5]
        assert rows[-1][:3] == [0.25, 0.5, 0.25]
        assert all(row[-1] is True for row in rows)

    def test_family_ratio_from_bath(self, write_config, capsys):
        path = write_config({"bath": {"occupation": {"kind": "flat", "level": 1.0}}})
        code, out, _ = run_cli(capsys, "--config", path, "family", "--points", "3")
        assert code == 0
        _, rows = read_csv(out)
        assert rows[-1][0] == pytest.approx(1.0 / 3.0, abs=1e-12)

    def test_occupation_sweep_approaches_quarter(self, capsys):
        code, out, _ = run_cli(capsys, "sweep", "--parameter", "N", "--grid", "0,1,10,100")
        assert code == 0
        header, rows = read_csv(out)
        assert tuple(header) == BATH_COLUMNS
        values = [row[header.index("min_ground_population")] for row in rows]
        assert [row[0] for row in rows] == [0.0, 1.0, 10.0, 100.0]
        assert values[0] == 0.5
        assert all(a > b > 0.25 for a, b in zip(values, values[1:]))
        assert values[-1] == pytest.approx(101.0 / 402.0)

    def test_threaded_sweep_keeps_grid_order(self, capsys):
        _, serial, _ = run_cli(capsys, "sweep", "--parameter", "beta", "--grid", "0.5,1,2")
        _, threaded, _ = run_cli(capsys, "sweep", "--parameter", "beta", "--grid", "0.5,1,2", "--workers", "3")
        assert serial == threaded

    def test_sweep_over_s(self, write_config, capsys):
        path = write_config({"family": {"ratio": 0.5}, "sweep": {"parameter": "s", "grid": [-0.5, 0.0, 0.4]}})
        code, out, _ = run_cli(capsys, "--config", path, "sweep")
        assert code == 0
        _, rows = read_csv(out)
        assert [row[-1] for row in rows] == [True, True, False]

    def test_sweep_needs_a_grid(self, capsys):
        code, _, err = run_cli(capsys, "sweep")
        assert code == 2
        assert "cptrap: error:" in err

    def test_table_as_json(self, capsys):
        code, out, _ = run_cli(capsys, "--format", "json", "family", "--ratio", "0", "--points", "2")
        assert code == 0
        doc = parse_result_document(out)
        assert doc["kind"] == "table"
        assert doc["rows"][1][:3] == [0.5, 0.0, 0.5]


# =============================================================================
# JSON results
# =============================================================================

class TestResults:

    def test_susceptivities_round_trip(self, capsys):
        code, out, _ = run_cli(capsys, "sus")
        assert code == 0
        doc = parse_result_document(out)
        assert doc["kind"] == "susceptivities"
        assert doc["einstein_ratio"] == pytest.approx(math.exp(-1.0), abs=1e-9)

    def test_stationary_family_on_defaults(self, capsys):
        code, out, _ = run_cli(capsys, "stationary")
        assert code == 0
        doc = parse_result_document(out)
        assert doc["classification"] == "family"
        assert doc["kernel_dimension"] == 2
        assert doc["payload"]["R"] == pytest.approx(math.exp(-1.0), abs=1e-8)

    def test_beats_writes_descriptor_and_trajectory(self, write_config, tmp_path, capsys):
        path = write_config({
            "bath": {"occupation": {"kind": "shifted-window", "level": 1.0, "inner": 3.0, "outer": 4.0}},
            "initial_state": [0.5, 0.5, 0, 0, -0.5, 0, 0, 0, 0],
        })
        target = tmp_path / "out" / "beats.json"
        code, out, _ = run_cli(capsys, "--config", path, "--output", str(target), "beats")
        assert code == 0
        assert out == ""
        doc = parse_result_document(target.read_text())
        assert doc["initial_modulus"] == pytest.approx(1.0)
        assert doc["frequency"] != 0.0
        header, rows = read_csv((tmp_path / "out" / "beats.trajectory.csv").read_text())
        assert header[0] == "t"
        assert len(rows) >= 200
        assert "trajectory" not in doc

    def test_beats_on_stdout_carries_the_trajectory(self, write_config, tmp_path, capsys):
        path = write_config({
            "bath": {"occupation": {"kind": "shifted-window", "level": 1.0, "inner": 3.0, "outer": 4.0}},
            "initial_state": [0.5, 0.5, 0, 0, -0.5, 0, 0, 0, 0],
        })
        code, out, _ = run_cli(capsys, "--config", path, "beats")
        assert code == 0
        doc = parse_result_document(out)
        trajectory = doc["trajectory"]
        assert trajectory["columns"][0] == "t"
        assert len(trajectory["columns"]) == len(trajectory["rows"][0])
        assert len(trajectory["rows"]) >= 200
        assert trajectory["rows"][0][0] == 0.0
        assert not list(tmp_path.glob("*.csv"))

    def test_beats_without_oscillation_is_a_regime_error(self, write_config, capsys):
        path = write_config({"bath": {"occupation": {"kind": "fock"}}})
        code, _, err = run_cli(capsys, "--config", path, "beats")
        assert code == 4
        assert "no beats" in err

    def test_beats_under_thermal_pumping(self, capsys):
        code, _, _ = run_cli(capsys, "beats")
        assert code == 4


# =============================================================================
# Evolution
# =============================================================================

class TestEvolve:

    def test_zero_horizon_is_initial_state(self, capsys):
        code, out, _ = run_cli(capsys, "evolve", "--horizon", "0")
        assert code == 0
        _, rows = read_csv(out)
        assert len(rows) == 1
        assert rows[0][1:4] == [0.5, 0.5, 0.0]

    def test_exact_sampling(self, capsys):
        code, out, _ = run_cli(capsys, "evolve", "--exact", "--horizon", "1", "--samples", "4")
        assert code == 0
        _, rows = read_csv(out)
        assert [row[0] for row in rows] == [0.0, 0.25, 0.5, 0.75, 1.0]

    def test_initial_state_file(self, write_config, capsys):
        path = write_config("excited", name="state.json")
        code, out, _ = run_cli(capsys, "evolve", "--initial-state", path, "--horizon", "0")
        assert code == 0
        _, rows = read_csv(out)
        assert rows[0][3] == 1.0

    def test_output_directory_override(self, monkeypatch, tmp_path, capsys):
        monkeypatch.setenv("CPTRAP_OUTPUT_DIR", str(tmp_path))
        code, out, _ = run_cli(capsys, "--output", "traj.csv", "evolve", "--horizon", "0.1", "--samples", "2")
        assert code == 0
        assert out == ""
        assert (tmp_path / "traj.csv").read_text().startswith("t,rho11,")


# =============================================================================
# Errors
# =============================================================================

class TestErrors:

    def test_unknown_key_exits_2(self, write_config, capsys):
        code, _, err = run_cli(capsys, "--config", write_config({"tempp": 300}), "sus")
        assert code == 2
        assert "tempp" in err

    def test_physics_violation_exits_3(self, write_config, capsys):
        path = write_config({"bath": {"occupation": {"kind": "flat", "level": -1}}})
        code, _, _ = run_cli(capsys, "--config", path, "sus")
        assert code == 3

    def test_events_are_logged(self, tmp_path, capsys):
        run_cli(capsys, "family", "--ratio", "0.5")
        events = [json.loads(line) for line in (tmp_path / "events.jsonl").read_text().splitlines()]
        assert events[-1]["event"] == "run_completed"
        assert events[-1]["subcommand"] == "family"
        assert events[-1]["exit_code"] == 0

    def test_flags_merge_into_document(self):
        args = build_parser().parse_args(["evolve", "--horizon", "2", "--exact"])
        doc = merge_arguments({"numerics": {"samples": 5}}, args)
        assert doc["numerics"] == {"samples": 5, "horizon": 2.0, "exact": True}


# =============================================================================
# Self-test
# =============================================================================

class TestSelftest:

    def test_quick_suites_pass_and_repeat(self, capsys):
        argv = ("selftest", "--quick", "--suite", "extremal_states", "--suite", "ground_population_bound")
        code, first, _ = run_cli(capsys, *argv)
        assert code == 0
        report = parse_result_document(first)
        assert report["passed"] == 2
        assert report["failed"] == 0
        _, second, _ = run_cli(capsys, *argv)
        assert first == second

    def test_counts_reach_the_event_log(self, tmp_path, capsys):
        run_cli(capsys, "selftest", "--quick", "--suite", "extremal_states")
        events = [json.loads(line) for line in (tmp_path / "events.jsonl").read_text().splitlines()]
        report = next(e for e in events if e["event"] == "selftest_report")
        assert report["passed"] == 1
        assert report["failed_suites"] == []

    def test_unknown_suite(self, capsys):
        code, _, _ = run_cli(capsys, "selftest", "--suite", "nonexistent")
        assert code == 2


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
