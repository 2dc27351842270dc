"""Command-line entry point: run experiments from scenario files.

Subcommands:
  trajopt <scenario>   minimum-time UAV data-collection mission
  deploy <scenario>    hybrid surface-deployment strategy comparison
  validate <scenario>  schema/semantic validation only

Each run writes plot-ready CSV tables plus one machine-readable summary
record into --out. Output numerics are fully deterministic: re-running the
same scenario file reproduces byte-identical tables.

Exit codes: 0 success, 2 usage/validation error, 3 infeasible, 4 internal
error.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass, replace
from pathlib import Path
from typing import List, Union

from . import __version__
from .deployment import DeploymentResult, DeploymentStrategy, evaluate_strategy
from .errors import ConfigurationError, ExperimentMismatchError, ScenarioError
from .scenario import (
    DeploymentExperiment,
    Scenario,
    TrajectoryExperiment,
    load_scenario,
    scenario_digest,
)
from .trajectory import MissionResult, min_time_mission

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INFEASIBLE = 3
EXIT_INTERNAL = 4


@dataclass(eq=False)
class ResultBundle:
    """One experiment run: provenance plus the optimizer output."""

    scenario_digest: str
    tool_version: str
    wall_time: float
    result: Union[MissionResult, List[DeploymentResult]]


def _fmt(value: float) -> str:
    """Shortest round-trip float formatting, so emitted tables re-parse exactly."""
    return repr(float(value))


def run_trajectory(scenario: Scenario, **overrides) -> MissionResult:
    if not isinstance(scenario.experiment, TrajectoryExperiment):
        raise ExperimentMismatchError(
            "scenario holds a deployment experiment; use the deploy subcommand"
        )
    return min_time_mission(scenario, **overrides)


def run_deployment(scenario: Scenario, strategies=None) -> List[DeploymentResult]:
    if not isinstance(scenario.experiment, DeploymentExperiment):
        raise ExperimentMismatchError(
            "scenario holds a trajectory experiment; use the trajopt subcommand"
        )
    chosen = strategies if strategies is not None else scenario.experiment.strategies
    return [evaluate_strategy(scenario, s) for s in chosen]


def trajectory_table(result: MissionResult) -> str:
    """CSV: slot, t_seconds, x, y, z, then one airtime-fraction column per node."""
    header = ["slot", "t_seconds", "x", "y", "z"] + [
        f"tau_{nid}" for nid in result.node_ids
    ]
    lines = [",".join(header)]
    wp = result.trajectory.waypoints
    tau = result.schedule.fractions
    delta = result.trajectory.slot_duration
    m = result.trajectory.num_slots
    for t in range(m + 1):
        row = [str(t), _fmt(t * delta), _fmt(wp[t, 0]), _fmt(wp[t, 1]), _fmt(wp[t, 2])]
        if t < m:
            row += [_fmt(tau[k, t]) for k in range(tau.shape[0])]
        else:  # the final waypoint closes the path; no slot is flown from it
            row += [_fmt(0.0)] * tau.shape[0]
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def deployment_table(results: List[DeploymentResult]) -> str:
    """CSV: strategy, element split, altitude, per-user rates, min rate."""
    user_ids = results[0].user_ids
    header = ["strategy", "n_aerial", "n_terrestrial", "altitude_m"] + [
        f"rate_{uid}" for uid in user_ids
    ] + ["min_rate"]
    lines = [",".join(header)]
    for res in results:
        row = [
            res.strategy.value,
            str(res.plan.aerial_elements),
            str(res.plan.terrestrial_elements),
            _fmt(res.plan.uirs_altitude),
        ]
        row += [_fmt(r) for r in res.per_user_rates]
        row.append(_fmt(res.min_rate))
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def _summary_payload(bundle: ResultBundle) -> dict:
    payload = {
        "scenario_digest": bundle.scenario_digest,
        "tool_version": bundle.tool_version,
        "wall_time_s": bundle.wall_time,
    }
    result = bundle.result
    if isinstance(result, MissionResult):
        payload["experiment"] = "trajectory"
        payload["mission_time_s"] = result.mission_time
        payload["achieved_min_rate_bps_hz"] = result.achieved_min_rate
        payload["rate_target_bps_hz"] = result.rate_target
        payload["converged"] = result.converged
        payload["iterations"] = result.iterations
        payload["per_node_rates_bps_hz"] = {
            nid: float(r) for nid, r in zip(result.node_ids, result.per_node_rates)
        }
    else:
        payload["experiment"] = "deployment"
        payload["strategies"] = {
            res.strategy.value: {
                "n_aerial": res.plan.aerial_elements,
                "n_terrestrial": res.plan.terrestrial_elements,
                "altitude_m": res.plan.uirs_altitude,
                "per_user_rates_bps_hz": {
                    uid: r for uid, r in zip(res.user_ids, res.per_user_rates)
                },
                "min_rate_bps_hz": res.min_rate,
            }
            for res in result
        }
    return payload


def emit_results(bundle: ResultBundle, scenario_file: Path, out_dir: Path) -> List[Path]:
    """Write the CSV table and the JSON summary; returns the paths written."""
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = scenario_file.stem
    written = []
    if isinstance(bundle.result, MissionResult):
        table_path = out_dir / f"{stem}_trajectory.csv"
        table_path.write_text(trajectory_table(bundle.result), encoding="utf-8")
    else:
        table_path = out_dir / f"{stem}_deployment.csv"
        table_path.write_text(deployment_table(bundle.result), encoding="utf-8")
    written.append(table_path)
    summary_path = out_dir / f"{stem}_summary.json"
    summary_path.write_text(
        json.dumps(_summary_payload(bundle), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    written.append(summary_path)
    return written


def _apply_trajectory_overrides(scenario: Scenario, args) -> Scenario:
    exp = scenario.experiment
    constraints = exp.constraints
    if args.slot_duration is not None:
        constraints = replace(constraints, slot_duration=args.slot_duration)
    exp = replace(
        exp,
        constraints=constraints,
        rate_target=args.rate_target if args.rate_target is not None else exp.rate_target,
        max_time=args.max_time if args.max_time is not None else exp.max_time,
    )
    return scenario.with_experiment(exp)


def _cmd_trajopt(args) -> int:
    scenario_file = Path(args.scenario)
    scenario = load_scenario(scenario_file)
    if isinstance(scenario.experiment, TrajectoryExperiment):
        scenario = _apply_trajectory_overrides(scenario, args)
    started = time.perf_counter()
    result = run_trajectory(scenario)
    wall = time.perf_counter() - started
    bundle = ResultBundle(
        scenario_digest=scenario_digest(scenario_file.read_bytes()),
        tool_version=__version__,
        wall_time=wall,
        result=result,
    )
    written = emit_results(bundle, scenario_file, Path(args.out))
    if not args.quiet:
        status = "converged" if result.converged else "INFEASIBLE within max_time"
        print(
            f"trajopt {scenario.name}: mission_time={result.mission_time:.3f} s, "
            f"min_rate={result.achieved_min_rate:.4f} bps/Hz "
            f"(target {result.rate_target}) [{status}]"
        )
        for path in written:
            print(f"  wrote {path}")
    return EXIT_OK if result.converged else EXIT_INFEASIBLE


def _cmd_deploy(args) -> int:
    scenario_file = Path(args.scenario)
    scenario = load_scenario(scenario_file)
    strategies = None
    if args.strategies != "all":
        strategies = [DeploymentStrategy(args.strategies)]
    started = time.perf_counter()
    results = run_deployment(scenario, strategies)
    wall = time.perf_counter() - started
    bundle = ResultBundle(
        scenario_digest=scenario_digest(scenario_file.read_bytes()),
        tool_version=__version__,
        wall_time=wall,
        result=results,
    )
    written = emit_results(bundle, scenario_file, Path(args.out))
    if not args.quiet:
        for res in results:
            print(
                f"deploy {scenario.name} [{res.strategy.value}]: "
                f"split=({res.plan.aerial_elements}, {res.plan.terrestrial_elements}), "
                f"altitude={res.plan.uirs_altitude:g} m, "
                f"min_rate={res.min_rate:.4f} bps/Hz"
            )
        for path in written:
            print(f"  wrote {path}")
    return EXIT_OK


def _cmd_validate(args) -> int:
    scenario = load_scenario(Path(args.scenario))
    if not args.quiet:
        kind = (
            "trajectory"
            if isinstance(scenario.experiment, TrajectoryExperiment)
            else "deployment"
        )
        print(f"OK: {scenario.name} ({kind} experiment, {len(scenario.nodes)} nodes)")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="uavirs",
        description="UAV + reflecting-surface network simulator and optimizer",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("scenario", help="scenario file to run")
    common.add_argument("--out", default="./out", help="output directory (default ./out)")
    common.add_argument("--quiet", action="store_true", help="suppress progress output")

    p_traj = sub.add_parser(
        "trajopt", parents=[common], help="minimum-time data-collection mission"
    )
    p_traj.add_argument(
        "--rate-target", type=float, default=None, help="override the per-node rate target"
    )
    p_traj.add_argument(
        "--slot-duration", type=float, default=None, help="override the slot length (s)"
    )
    p_traj.add_argument(
        "--max-time", type=float, default=None, help="override the mission-time cap (s)"
    )
    p_traj.set_defaults(func=_cmd_trajopt)

    p_dep = sub.add_parser(
        "deploy", parents=[common], help="surface-deployment strategy comparison"
    )
    p_dep.add_argument(
        "--strategies",
        choices=["user", "bs", "hybrid", "all"],
        default="all",
        help="which deployment strategies to evaluate",
    )
    p_dep.set_defaults(func=_cmd_deploy)

    p_val = sub.add_parser("validate", help="validate a scenario file")
    p_val.add_argument("scenario", help="scenario file to validate")
    p_val.add_argument("--quiet", action="store_true")
    p_val.set_defaults(func=_cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ScenarioError, ConfigurationError, ExperimentMismatchError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
