import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from uavirs.cli import EXIT_INFEASIBLE, EXIT_OK, EXIT_USAGE, main
from uavirs.scenario import load_scenario, scenario_path
from uavirs.trajectory import Trajectory, per_slot_rates

QUICK_TRAJECTORY = """
name: quick
nodes:
  - {id: uav, role: uav, position: [0.0, 0.0, 30.0]}
  - {id: sn1, role: sensor, position: [20.0, 15.0, 0.0]}
  - {id: sn2, role: sensor, position: [45.0, -10.0, 0.0]}
path_loss_classes:
  uav_sn: 2.6
experiment:
  kind: trajectory
  start: [0.0, 0.0, 30.0]
  end: [60.0, 0.0, 30.0]
  fixed_altitude: 30.0
  v_max: 50.0
  slot_duration: 0.1
  rate_target: 1.0
  max_time: 10.0
"""


@pytest.fixture()
def quick_file(tmp_path):
    path = tmp_path / "quick.scenario"
    path.write_text(QUICK_TRAJECTORY)
    return path


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


class TestValidate:
    def test_valid_scenario(self, capsys):
        assert main(["validate", str(scenario_path("fig4"))]) == EXIT_OK
        assert "OK" in capsys.readouterr().out

    def test_invalid_scenario(self, tmp_path, capsys):
        bad = tmp_path / "bad.scenario"
        bad.write_text("nodes: 7\n")
        assert main(["validate", str(bad)]) == EXIT_USAGE
        assert "error" in capsys.readouterr().err

    def test_missing_file(self, tmp_path):
        assert main(["validate", str(tmp_path / "nope.scenario")]) == EXIT_USAGE


class TestKindMismatch:
    def test_trajopt_on_deployment_scenario(self, capsys):
        code = main(["trajopt", str(scenario_path("fig5")), "--quiet"])
        assert code == EXIT_USAGE
        assert "deploy" in capsys.readouterr().err

    def test_deploy_on_trajectory_scenario(self, quick_file, capsys):
        code = main(["deploy", str(quick_file), "--quiet"])
        assert code == EXIT_USAGE
        assert "trajopt" in capsys.readouterr().err


class TestTrajopt:
    def test_writes_consistent_outputs(self, quick_file, tmp_path):
        out = tmp_path / "out"
        assert main(["trajopt", str(quick_file), "--out", str(out), "--quiet"]) == EXIT_OK
        rows = read_rows(out / "quick_trajectory.csv")
        summary = json.loads((out / "quick_summary.json").read_text())
        assert summary["experiment"] == "trajectory"
        assert summary["converged"] is True
        assert summary["achieved_min_rate_bps_hz"] >= 1.0 - 1e-6

        # the emitted table reproduces the reported per-node rates exactly
        waypoints = np.array([[float(r["x"]), float(r["y"]), float(r["z"])] for r in rows])
        node_ids = [k[4:] for k in rows[0] if k.startswith("tau_")]
        tau = np.array(
            [[float(r[f"tau_{nid}"]) for r in rows[:-1]] for nid in node_ids]
        )
        scenario = load_scenario(quick_file)
        traj = Trajectory(waypoints, scenario.experiment.constraints.slot_duration)
        R = per_slot_rates(scenario, traj)
        delta = scenario.experiment.constraints.slot_duration
        rates = (tau * R).sum(axis=1) * delta / summary["mission_time_s"]
        for nid, rate in zip(node_ids, rates):
            assert summary["per_node_rates_bps_hz"][nid] == rate

        # final row closes the path at the configured endpoint with zero airtime
        assert float(rows[-1]["x"]) == 60.0
        assert all(float(rows[-1][f"tau_{nid}"]) == 0.0 for nid in node_ids)

    def test_slot_duration_override(self, quick_file, tmp_path):
        out = tmp_path / "out"
        code = main(
            [
                "trajopt",
                str(quick_file),
                "--out",
                str(out),
                "--slot-duration",
                "0.2",
                "--quiet",
            ]
        )
        assert code == EXIT_OK
        rows = read_rows(out / "quick_trajectory.csv")
        assert float(rows[1]["t_seconds"]) == 0.2

    def test_infeasible_exit_code(self, quick_file, tmp_path):
        out = tmp_path / "out"
        code = main(
            [
                "trajopt",
                str(quick_file),
                "--out",
                str(out),
                "--rate-target",
                "50.0",
                "--quiet",
            ]
        )
        assert code == EXIT_INFEASIBLE
        summary = json.loads((out / "quick_summary.json").read_text())
        assert summary["converged"] is False

    def test_determinism_quick(self, quick_file, tmp_path):
        out1, out2 = tmp_path / "a", tmp_path / "b"
        main(["trajopt", str(quick_file), "--out", str(out1), "--quiet"])
        main(["trajopt", str(quick_file), "--out", str(out2), "--quiet"])
        assert (out1 / "quick_trajectory.csv").read_bytes() == (
            out2 / "quick_trajectory.csv"
        ).read_bytes()


class TestDeploy:
    def test_all_strategies_table(self, tmp_path):
        out = tmp_path / "out"
        code = main(["deploy", str(scenario_path("fig5")), "--out", str(out), "--quiet"])
        assert code == EXIT_OK
        rows = read_rows(out / "fig5_deployment.csv")
        assert [r["strategy"] for r in rows] == ["user", "bs", "hybrid"]
        by_strategy = {r["strategy"]: r for r in rows}
        assert float(by_strategy["hybrid"]["min_rate"]) >= float(
            by_strategy["bs"]["min_rate"]
        )
        assert float(by_strategy["bs"]["min_rate"]) >= float(
            by_strategy["user"]["min_rate"]
        )
        assert float(by_strategy["bs"]["altitude_m"]) == 50.0
        assert float(by_strategy["hybrid"]["altitude_m"]) == 30.0
        split = int(by_strategy["hybrid"]["n_aerial"]) + int(
            by_strategy["hybrid"]["n_terrestrial"]
        )
        assert split == 600

    def test_single_strategy_flag(self, tmp_path):
        out = tmp_path / "out"
        code = main(
            [
                "deploy",
                str(scenario_path("fig5")),
                "--out",
                str(out),
                "--strategies",
                "bs",
                "--quiet",
            ]
        )
        assert code == EXIT_OK
        rows = read_rows(out / "fig5_deployment.csv")
        assert [r["strategy"] for r in rows] == ["bs"]

    def test_determinism(self, tmp_path):
        out1, out2 = tmp_path / "a", tmp_path / "b"
        main(["deploy", str(scenario_path("fig5")), "--out", str(out1), "--quiet"])
        main(["deploy", str(scenario_path("fig5")), "--out", str(out2), "--quiet"])
        assert (out1 / "fig5_deployment.csv").read_bytes() == (
            out2 / "fig5_deployment.csv"
        ).read_bytes()


class TestEntryPoint:
    def test_module_invocation(self, tmp_path):
        result = subprocess.run(
            [sys.executable, "-m", "uavirs", "validate", str(scenario_path("fig5"))],
            capture_output=True,
            text=True,
            cwd=tmp_path,
        )
        assert result.returncode == 0
        assert "OK" in result.stdout

    def test_usage_error_exit_code(self):
        result = subprocess.run(
            [sys.executable, "-m", "uavirs", "frobnicate"],
            capture_output=True,
            text=True,
        )
        assert result.returncode == 2
