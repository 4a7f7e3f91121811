from __future__ import annotations

import csv
import json
from importlib import resources

import numpy as np
import pytest

from rhconsensus import cli


@pytest.fixture()
def case1_config_path(tmp_path):
    text = resources.files("rhconsensus").joinpath("cases/case1.json").read_text()
    path = tmp_path / "case1.json"
    path.write_text(text)
    return path


@pytest.fixture()
def case2_config_path(tmp_path):
    text = resources.files("rhconsensus").joinpath("cases/case2.json").read_text()
    path = tmp_path / "case2.json"
    path.write_text(text)
    return path


def test_config_round_trip(case2_config_path):
    raw = json.loads(case2_config_path.read_text())
    config = cli.parse_config(raw)
    reparsed = cli.parse_config(config_to_plain(cli.config_to_dict(config)))
    assert np.array_equal(config.system.A, reparsed.system.A)
    assert np.array_equal(config.system.B, reparsed.system.B)
    assert np.array_equal(
        config.topology.digraph.adjacency, reparsed.topology.digraph.adjacency
    )
    assert np.array_equal(config.design.Q, reparsed.design.Q)
    assert np.array_equal(config.design.QN, reparsed.design.QN)
    assert np.array_equal(config.design.R, reparsed.design.R)
    assert config.design.horizon == reparsed.design.horizon
    assert config.design.bound_mode == reparsed.design.bound_mode
    assert np.array_equal(config.sim.x0, reparsed.sim.x0)
    assert config.sim.steps == reparsed.sim.steps
    assert config.sim.epsilon == reparsed.sim.epsilon
    assert config.sim.window == reparsed.sim.window
    assert config.lambda_override == reparsed.lambda_override


def config_to_plain(config_dict):
    # through JSON text, as the CLI would read it back
    return json.loads(json.dumps(config_dict))


def test_unknown_fields_rejected(case1_config_path):
    raw = json.loads(case1_config_path.read_text())
    raw["extra"] = 1
    with pytest.raises(cli.ConfigError):
        cli.parse_config(raw)
    raw.pop("extra")
    raw["design"]["rho"] = 0.5
    with pytest.raises(cli.ConfigError):
        cli.parse_config(raw)


def test_check_case1_exit_zero(case1_config_path, tmp_path, capsys):
    out = tmp_path / "report.json"
    code = cli.main(["check", str(case1_config_path), "--out", str(out)])
    assert code == 0
    report = json.loads(out.read_text())
    assert report["consensus"]["verdict"] is True
    assert report["consensus"]["spanning_tree"] is True
    assert abs(report["sufficiency_scalar"]["theta_min"] - 4.737678) <= 1e-5
    assert report["riccati"]["rho_bar"] < 1.0
    assert report["simulation"]["final_disagreement"] <= 1e-6


def test_check_case2_report_contains_condition13(case2_config_path, capsys):
    code = cli.main(["check", str(case2_config_path)])
    assert code == 0
    report = json.loads(capsys.readouterr().out)
    lhs = np.array(report["sufficiency_lti"]["condition13"][0]["lhs"])
    assert lhs.shape == (2, 2)
    assert report["sufficiency_lti"]["condition13"][0]["min_eigenvalue"] > 0
    assert report["sufficiency_scalar"] is None


def test_check_zero_in_degree_exit_one(tmp_path, capsys):
    config = {
        "system": {"A": [[2.0]], "B": [[1.0]]},
        "graph": {"adjacency": [[0, 1, 0], [1, 0, 0], [0, 0, 0]]},
        "design": {"Q": [[1.0]], "QN": [[2.0]], "R": [[1.0]], "horizon": 2},
    }
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(config))
    code = cli.main(["check", str(path)])
    assert code == 1
    payload = json.loads(capsys.readouterr().out)
    assert payload["error"] == "ZeroInDegree"


def test_check_violated_design_exit_three(tmp_path, capsys):
    # weak weights on an unstable scalar plant: the two-agent cycle's
    # lambda = 2 mode stays unstable
    config = {
        "system": {"A": [[2.0]], "B": [[1.0]]},
        "graph": {"adjacency": [[0, 1], [1, 0]]},
        "design": {"Q": [[0.01]], "QN": [[0.01]], "R": [[1.0]], "horizon": 1},
    }
    path = tmp_path / "violated.json"
    path.write_text(json.dumps(config))
    code = cli.main(["check", str(path)])
    assert code == 3
    report = json.loads(capsys.readouterr().out)
    assert report["consensus"]["verdict"] is False
    assert report["consensus"]["max_radius"] > 1.05


def test_simulate_writes_csvs(case1_config_path, tmp_path, capsys):
    out_dir = tmp_path / "runs"
    code = cli.main(["simulate", str(case1_config_path), "--out-dir", str(out_dir)])
    assert code == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["consensus_step"] is not None
    with (out_dir / "trajectory.csv").open() as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["k", "agent", "x1", "u1"]
    assert rows[1][:2] == ["0", "1"]
    # inputs are blank on the final recorded step
    final_rows = [r for r in rows[1:] if r[0] == "100"]
    assert len(final_rows) == 5
    assert all(r[3] == "" for r in final_rows)
    with (out_dir / "disagreement.csv").open() as fh:
        d_rows = list(csv.reader(fh))
    assert d_rows[0] == ["k", "d"]
    assert len(d_rows) == 102


def test_csv_numbers_reingest_bitwise(case2_config_path, tmp_path, capsys):
    out_dir = tmp_path / "runs2"
    assert cli.main(["simulate", str(case2_config_path), "--out-dir", str(out_dir)]) == 0
    capsys.readouterr()
    config = cli.load_config(str(case2_config_path))
    trajectory = cli._simulate(config)
    with (out_dir / "trajectory.csv").open() as fh:
        rows = list(csv.reader(fh))[1:]
    for row in rows:
        k, agent = int(row[0]), int(row[1]) - 1
        stored = trajectory.states[k, agent]
        parsed = np.array([float(v) for v in row[2:4]])
        assert np.array_equal(parsed, stored)


def test_simulate_without_sim_section(tmp_path, capsys):
    config = {
        "system": {"A": [[2.0]], "B": [[1.0]]},
        "graph": {"adjacency": [[0, 1], [1, 0]]},
        "design": {"Q": [[1.0]], "QN": [[2.0]], "R": [[1.0]], "horizon": 2},
    }
    path = tmp_path / "nosim.json"
    path.write_text(json.dumps(config))
    assert cli.main(["simulate", str(path)]) == 1
    assert json.loads(capsys.readouterr().out)["error"] == "ConfigError"


def test_simulate_zero_steps_rejected(case1_config_path, tmp_path, capsys):
    raw = json.loads(case1_config_path.read_text())
    raw["sim"]["steps"] = 0
    path = tmp_path / "zero.json"
    path.write_text(json.dumps(raw))
    assert cli.main(["simulate", str(path)]) == 1
    assert json.loads(capsys.readouterr().out)["error"] == "InvalidSteps"


def test_reproduce_case1_passes(capsys):
    code = cli.main(["reproduce", "case1"])
    out = capsys.readouterr().out
    assert code == 0
    assert "FAIL" not in out
    assert "DEVIATION" in out  # derived theta_min documented against recorded value
    assert "4.73768" in out  # the oracle-verified value is emitted


def test_reproduce_case2_flags_known_mismatch(capsys):
    code = cli.main(["reproduce", "case2"])
    out = capsys.readouterr().out
    assert code == 3
    assert out.count("[FAIL]") == 1
    assert "design-condition LHS at override modes" in out
    # the spectrum conflict note is part of the report
    assert "complex pair" in out


def test_reproduce_unknown_case(capsys):
    assert cli.main(["reproduce", "case9"]) == 1
    assert json.loads(capsys.readouterr().out)["error"] == "ConfigError"
