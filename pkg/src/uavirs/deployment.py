"""Hybrid reflecting-surface deployment for relaying from a BS to blocked users.

One UAV-mounted surface near the BS and one terrestrial surface near a user
share a fixed budget of reflecting elements. Users transmit over orthogonal
equal-duration slots (prelog 1/K) and their direct BS links are blocked, so
each user's rate is carried entirely by its serving surface's cascaded path
with per-leg binary LoS/NLoS exponents. The element split, the aerial
altitude (the lowest altitude giving LoS to its assigned users) and the
user-to-surface assignment are chosen to maximize the minimum user rate; the
split is found by exhaustive enumeration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import TYPE_CHECKING, Dict, Optional, Tuple

from .channel import LinkState, Node, path_gain, resolve_link_state
from .errors import ConfigurationError
from .irs import IrsSurface, SurfaceKind, covers, min_serving_altitude

if TYPE_CHECKING:  # pragma: no cover
    from .scenario import Scenario


class DeploymentStrategy(Enum):
    USER_SIDE = "user"
    BS_SIDE = "bs"
    HYBRID = "hybrid"


@dataclass(frozen=True)
class DeploymentPlan:
    """Element split, aerial altitude, and user -> surface assignment."""

    aerial_elements: int
    terrestrial_elements: int
    uirs_altitude: float
    assignment: Tuple[Tuple[str, Optional[str]], ...]  # (user id, surface id | None)

    def __post_init__(self):
        if self.aerial_elements < 0 or self.terrestrial_elements < 0:
            raise ValueError("element counts must be >= 0")
        if self.uirs_altitude < 0:
            raise ValueError("uirs_altitude must be >= 0")
        object.__setattr__(self, "assignment", tuple(self.assignment))

    def serving_surface_id(self, user_id: str) -> Optional[str]:
        for uid, sid in self.assignment:
            if uid == user_id:
                return sid
        raise ValueError(f"unknown user {user_id!r}")


@dataclass(frozen=True)
class DeploymentResult:
    plan: DeploymentPlan
    user_ids: Tuple[str, ...]
    per_user_rates: Tuple[float, ...]
    min_rate: float
    strategy: DeploymentStrategy


def _deployment_surfaces(scenario: "Scenario") -> Tuple[IrsSurface, IrsSurface]:
    aerial = [s for s in scenario.surfaces if s.kind is SurfaceKind.AERIAL_MOUNTED]
    terrestrial = [s for s in scenario.surfaces if s.kind is SurfaceKind.TERRESTRIAL]
    if len(aerial) != 1 or len(terrestrial) != 1:
        raise ConfigurationError(
            "deployment scenarios need exactly one aerial and one terrestrial surface"
        )
    return aerial[0], terrestrial[0]


def _state_model(scenario: "Scenario", state: LinkState):
    if state is LinkState.LOS:
        return scenario.path_loss("los")
    if state is LinkState.NLOS:
        return scenario.path_loss("nlos")
    raise ValueError("blocked links have no path-loss model")


def _leg_amplitude(
    scenario: "Scenario", a_id: str, a_pos, b_id: str, b_pos, aerial_altitude: float
) -> float:
    """Amplitude gain sqrt(path_gain) of one leg, 0 when the leg is blocked."""
    rule = scenario.link_rules.rule_for(a_id, b_id)
    state = resolve_link_state((a_id, b_id), aerial_altitude, rule)
    if state is LinkState.BLOCKED:
        return 0.0
    d = math.dist(tuple(a_pos), tuple(b_pos))
    return math.sqrt(path_gain(d, _state_model(scenario, state), scenario.radio))


def _rate_through(
    scenario: "Scenario",
    surface: Optional[IrsSurface],
    elements: int,
    altitude: float,
    user: Node,
    num_users: int,
) -> float:
    """User rate through one serving surface (or none), prelog 1/num_users."""
    bs = scenario.bs_node()
    direct_alt = max(bs.position.z, user.position.z)
    direct_amp = _leg_amplitude(
        scenario, bs.id, bs.position.as_array(), user.id, user.position.as_array(), direct_alt
    )
    amplitude = direct_amp
    if surface is not None and elements > 0:
        if surface.kind is SurfaceKind.AERIAL_MOUNTED:
            surf_pos = surface.at_altitude(altitude).position
            leg_alt = altitude
        else:
            surf_pos = surface.position
            leg_alt = surface.position.z
        up = _leg_amplitude(
            scenario, bs.id, bs.position.as_array(), surface.id, surf_pos.as_array(), leg_alt
        )
        down = _leg_amplitude(
            scenario, surface.id, surf_pos.as_array(), user.id, user.position.as_array(), leg_alt
        )
        amplitude += elements * up * down
    radio = scenario.radio
    snr = radio.tx_power * amplitude**2 / radio.noise_power
    return math.log2(1.0 + snr) / num_users


def _check_plan(scenario: "Scenario", plan: DeploymentPlan) -> None:
    aerial, terrestrial = _deployment_surfaces(scenario)
    users = {u.id: u for u in scenario.user_nodes()}
    for uid, sid in plan.assignment:
        if uid not in users:
            raise ConfigurationError(f"plan assigns unknown user {uid!r}")
        if sid is None:
            continue
        if sid == terrestrial.id:
            if not covers(terrestrial, users[uid].position, node_id=uid):
                raise ConfigurationError(
                    f"user {uid!r} is outside the terrestrial surface's coverage"
                )
        elif sid == aerial.id:
            rule = scenario.link_rules.rule_for(aerial.id, uid)
            state = resolve_link_state((aerial.id, uid), plan.uirs_altitude, rule)
            if state is not LinkState.LOS:
                raise ConfigurationError(
                    f"user {uid!r} has no LoS to the aerial surface at "
                    f"{plan.uirs_altitude} m"
                )
        else:
            raise ConfigurationError(f"plan references unknown surface {sid!r}")


def user_rate(scenario: "Scenario", plan: DeploymentPlan, user_id: str) -> float:
    """Achievable rate (bps/Hz) of one user under a deployment plan.

    Equal orthogonal time slots give the 1/K prelog; the direct BS link is
    taken from the scenario's link rules (blocked in the relaying scenarios),
    and an unserved user's rate is exactly 0 on top of a blocked direct link.
    """
    users = scenario.user_nodes()
    by_id = {u.id: u for u in users}
    if user_id not in by_id:
        raise ValueError(f"unknown user {user_id!r}")
    _check_plan(scenario, plan)
    aerial, terrestrial = _deployment_surfaces(scenario)
    sid = plan.serving_surface_id(user_id)
    if sid is None:
        surface, elements = None, 0
    elif sid == aerial.id:
        surface, elements = aerial, plan.aerial_elements
    else:
        surface, elements = terrestrial, plan.terrestrial_elements
    return _rate_through(
        scenario, surface, elements, plan.uirs_altitude, by_id[user_id], len(users)
    )


def _aerial_threshold(scenario: "Scenario", aerial: IrsSurface, user_id: str) -> float:
    return scenario.link_rules.rule_for(aerial.id, user_id).min_altitude_for_los


def _hybrid_plan(scenario: "Scenario", n_aerial: int, n_terrestrial: int) -> DeploymentPlan:
    """Altitude and assignment for one element split.

    Users without terrestrial coverage go to the aerial surface when LoS is
    attainable. Each terrestrially covered user then takes whichever surface
    yields it the higher rate -- the aerial option priced at the altitude
    needed if that user joins -- with ties to the terrestrial surface. The
    final altitude is the lowest giving LoS to all aerially assigned users.
    """
    aerial, terrestrial = _deployment_surfaces(scenario)
    users = scenario.user_nodes()
    num_users = len(users)
    aerial_set = []
    choices: Dict[str, Optional[str]] = {}
    for user in users:
        t_covered = covers(terrestrial, user.position, node_id=user.id)
        can_fly = (
            n_aerial > 0 and math.isfinite(_aerial_threshold(scenario, aerial, user.id))
        )
        if not t_covered:
            if can_fly:
                aerial_set.append(user.id)
                choices[user.id] = aerial.id
            else:
                choices[user.id] = None
    for user in users:
        if user.id in choices:
            continue  # resolved above
        rate_terr = _rate_through(
            scenario, terrestrial, n_terrestrial, 0.0, user, num_users
        )
        can_fly = (
            n_aerial > 0 and math.isfinite(_aerial_threshold(scenario, aerial, user.id))
        )
        if can_fly:
            alt_if = min_serving_altitude(
                aerial, aerial_set + [user.id], scenario.link_rules
            )
            rate_air = _rate_through(scenario, aerial, n_aerial, alt_if, user, num_users)
            if rate_air > rate_terr:
                aerial_set.append(user.id)
                choices[user.id] = aerial.id
                continue
        choices[user.id] = terrestrial.id
    altitude = min_serving_altitude(aerial, aerial_set, scenario.link_rules)
    return DeploymentPlan(
        aerial_elements=n_aerial,
        terrestrial_elements=n_terrestrial,
        uirs_altitude=altitude,
        assignment=tuple((u.id, choices[u.id]) for u in users),
    )


def _evaluate_plan(
    scenario: "Scenario", plan: DeploymentPlan, strategy: DeploymentStrategy
) -> DeploymentResult:
    users = scenario.user_nodes()
    rates = tuple(user_rate(scenario, plan, u.id) for u in users)
    return DeploymentResult(
        plan=plan,
        user_ids=tuple(u.id for u in users),
        per_user_rates=rates,
        min_rate=min(rates),
        strategy=strategy,
    )


def evaluate_strategy(
    scenario: "Scenario",
    strategy: DeploymentStrategy,
    n_budget: Optional[int] = None,
) -> DeploymentResult:
    """Evaluate one deployment strategy for a given element budget.

    USER_SIDE puts the whole budget on the terrestrial surface (uncovered
    users stay unserved); BS_SIDE puts it on the aerial surface at the lowest
    altitude with LoS to every user that can ever reach LoS; HYBRID runs the
    exhaustive split search.
    """
    if not isinstance(strategy, DeploymentStrategy):
        raise ValueError(f"unknown strategy {strategy!r}")
    if n_budget is None:
        n_budget = scenario.experiment.n_budget
    if n_budget < 0:
        raise ValueError("element budget must be >= 0")
    if strategy is DeploymentStrategy.HYBRID:
        return exhaustive_allocate(scenario, n_budget)

    aerial, terrestrial = _deployment_surfaces(scenario)
    users = scenario.user_nodes()
    if strategy is DeploymentStrategy.USER_SIDE:
        assignment = tuple(
            (u.id, terrestrial.id if covers(terrestrial, u.position, node_id=u.id) else None)
            for u in users
        )
        plan = DeploymentPlan(0, n_budget, 0.0, assignment)
    else:  # BS_SIDE
        reachable = [
            u.id
            for u in users
            if math.isfinite(_aerial_threshold(scenario, aerial, u.id))
        ]
        altitude = min_serving_altitude(aerial, reachable, scenario.link_rules)
        assignment = tuple(
            (u.id, aerial.id if u.id in reachable and n_budget > 0 else None)
            for u in users
        )
        plan = DeploymentPlan(n_budget, 0, altitude, assignment)
    return _evaluate_plan(scenario, plan, strategy)


def allocation_sweep(scenario: "Scenario", n_budget: Optional[int] = None):
    """All element splits in order: hybrid rule applied at each n_aerial.

    Returns one DeploymentResult per n_aerial in 0..n_budget; useful for
    plotting rate-vs-allocation curves.
    """
    if n_budget is None:
        n_budget = scenario.experiment.n_budget
    if n_budget < 0:
        raise ValueError("element budget must be >= 0")
    return [
        _evaluate_plan(
            scenario,
            _hybrid_plan(scenario, n_aerial, n_budget - n_aerial),
            DeploymentStrategy.HYBRID,
        )
        for n_aerial in range(n_budget + 1)
    ]


def exhaustive_allocate(scenario: "Scenario", n_budget: Optional[int] = None) -> DeploymentResult:
    """Best element split by enumerating every (n_aerial, n_terrestrial) pair.

    Each split gets the hybrid altitude/assignment rule; the split with the
    highest min rate wins, ties to the smallest aerial count.
    """
    best: Optional[DeploymentResult] = None
    for result in allocation_sweep(scenario, n_budget):
        if best is None or result.min_rate > best.min_rate:
            best = result
    return best
