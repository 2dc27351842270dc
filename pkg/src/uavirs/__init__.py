"""uavirs: simulator and optimizer for UAV + reflecting-surface networks.

The package models reflecting-surface-enhanced air-to-ground channels,
optimizes minimum-time UAV data-collection trajectories under max-min rate
targets, and optimizes hybrid aerial/terrestrial surface deployment with
reflecting-element allocation.
"""

__version__ = "0.1.0"

from .channel import (
    LinkRuleSet,
    LinkState,
    LinkStateRule,
    Node,
    NodeRole,
    PathLossModel,
    Position3D,
    RadioParams,
    path_gain,
    rate_bps_hz,
    resolve_link_state,
)
from .deployment import (
    DeploymentPlan,
    DeploymentResult,
    DeploymentStrategy,
    allocation_sweep,
    evaluate_strategy,
    exhaustive_allocate,
    user_rate,
)
from .errors import ConfigurationError, ExperimentMismatchError, ScenarioError
from .irs import (
    CascadedLink,
    IrsSurface,
    SurfaceKind,
    covers,
    effective_snr,
    min_serving_altitude,
)
from .scenario import (
    DeploymentExperiment,
    Scenario,
    TrajectoryExperiment,
    dump_scenario,
    load_scenario,
    loads_scenario,
    scenario_digest,
    scenario_path,
)
from .trajectory import (
    CandidateProbe,
    MissionResult,
    Schedule,
    Trajectory,
    TrajectoryConstraints,
    improve_trajectory,
    min_time_mission,
    optimal_schedule,
    per_slot_rates,
    straight_line_trajectory,
)

__all__ = [
    "__version__",
    "CandidateProbe",
    "CascadedLink",
    "ConfigurationError",
    "DeploymentExperiment",
    "DeploymentPlan",
    "DeploymentResult",
    "DeploymentStrategy",
    "ExperimentMismatchError",
    "IrsSurface",
    "LinkRuleSet",
    "LinkState",
    "LinkStateRule",
    "MissionResult",
    "Node",
    "NodeRole",
    "PathLossModel",
    "Position3D",
    "RadioParams",
    "Scenario",
    "ScenarioError",
    "Schedule",
    "SurfaceKind",
    "Trajectory",
    "TrajectoryConstraints",
    "TrajectoryExperiment",
    "allocation_sweep",
    "covers",
    "dump_scenario",
    "effective_snr",
    "evaluate_strategy",
    "exhaustive_allocate",
    "improve_trajectory",
    "load_scenario",
    "loads_scenario",
    "min_serving_altitude",
    "min_time_mission",
    "optimal_schedule",
    "path_gain",
    "per_slot_rates",
    "rate_bps_hz",
    "resolve_link_state",
    "scenario_digest",
    "scenario_path",
    "straight_line_trajectory",
    "user_rate",
]
