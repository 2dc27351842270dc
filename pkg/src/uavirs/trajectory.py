"""Minimum-time UAV data-collection missions under a max-min rate target.

The mission-time problem is solved by an outer bisection on the discretized
mission duration T = M * slot_duration. Each candidate T is scored by an inner
block-coordinate descent that alternates two blocks until the scheduled
min-throughput stalls:

  * schedule block -- an exact max-min TDMA linear program over the per-slot
    rate matrix (scipy/HiGHS), followed by a second LP that minimizes total
    airtime at the optimal value so the returned schedule is canonical;
  * trajectory block -- one projected ascent step on the softmin-smoothed
    objective, using finite-difference gradients on the waypoint coordinates
    and iterated pairwise segment clipping to restore speed feasibility. Any
    step that lowers the true (hard-min) objective is rejected.

The inner objective is non-decreasing across accepted iterations by
construction, and every trajectory ever returned is speed-feasible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import TYPE_CHECKING, List, Optional, Tuple

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from .channel import LinkState, Position3D, path_gain, resolve_link_state
from .errors import ConfigurationError

if TYPE_CHECKING:  # pragma: no cover
    from .scenario import Scenario

SPEED_SLACK = 1e-9  # tolerance on ||waypoint step|| <= v_max * slot_duration
_LP_VALUE_SLACK = 1e-9  # relative slack when pinning the stage-1 LP value


@dataclass(frozen=True)
class TrajectoryConstraints:
    """Endpoint, altitude, speed and slot-length limits for one mission."""

    start: Position3D
    end: Position3D
    fixed_altitude: float
    v_max: float
    slot_duration: float

    def __post_init__(self):
        if not (self.v_max > 0):
            raise ValueError("v_max must be > 0")
        if not (self.slot_duration > 0):
            raise ValueError("slot_duration must be > 0")
        if self.start.z != self.fixed_altitude or self.end.z != self.fixed_altitude:
            raise ValueError("start and end must lie at the fixed altitude")

    @property
    def max_step(self) -> float:
        """Largest admissible waypoint-to-waypoint displacement."""
        return self.v_max * self.slot_duration


@dataclass(eq=False)
class Trajectory:
    """Discretized path: M+1 waypoints flown at one waypoint per slot."""

    waypoints: np.ndarray  # (M+1, 3)
    slot_duration: float

    def __post_init__(self):
        self.waypoints = np.asarray(self.waypoints, dtype=float)
        if self.waypoints.ndim != 2 or self.waypoints.shape[1] != 3:
            raise ValueError("waypoints must have shape (M+1, 3)")
        if self.waypoints.shape[0] < 2:
            raise ValueError("a trajectory needs at least one slot (two waypoints)")

    @property
    def num_slots(self) -> int:
        return self.waypoints.shape[0] - 1

    @property
    def mission_time(self) -> float:
        return self.num_slots * self.slot_duration

    def segment_lengths(self) -> np.ndarray:
        return np.linalg.norm(np.diff(self.waypoints, axis=0), axis=1)

    def max_segment_length(self) -> float:
        return float(self.segment_lengths().max())

    def is_speed_feasible(self, constraints: TrajectoryConstraints) -> bool:
        return self.max_segment_length() <= constraints.max_step + SPEED_SLACK

    def closest_approach(self, position: Position3D) -> float:
        """Smallest waypoint distance to a point (detour diagnostics)."""
        d = np.linalg.norm(self.waypoints - position.as_array(), axis=1)
        return float(d.min())


@dataclass(eq=False)
class Schedule:
    """TDMA time-sharing fractions, K nodes by M slots; column sums <= 1."""

    fractions: np.ndarray

    def __post_init__(self):
        self.fractions = np.asarray(self.fractions, dtype=float)
        if self.fractions.ndim != 2:
            raise ValueError("fractions must be a K x M matrix")
        if np.any(self.fractions < 0) or np.any(self.fractions > 1 + 1e-9):
            raise ValueError("fractions must lie in [0, 1]")
        col = self.fractions.sum(axis=0)
        if np.any(col > 1 + 1e-9):
            raise ValueError("per-slot fractions must sum to <= 1")


@dataclass(eq=False)
class CandidateProbe:
    """One evaluated mission duration during the outer bisection."""

    mission_time: float
    feasible: bool
    achieved_min_rate: float
    objective_history: List[float]  # scheduled min-throughput per accepted BCD iteration
    note: str = ""  # "speed" marks durations ruled out by the speed bound alone


@dataclass(eq=False)
class MissionResult:
    """Outcome of a minimum-time mission optimization.

    iterations counts accepted inner BCD iterations summed over every duration
    probed by the bisection. probes records each evaluated duration (including
    the sub-minimum duration ruled out by the speed constraint) so feasibility
    bookkeeping can be audited.
    """

    trajectory: Trajectory
    schedule: Schedule
    mission_time: float
    achieved_min_rate: float
    per_node_rates: np.ndarray
    node_ids: Tuple[str, ...]
    iterations: int
    converged: bool
    rate_target: float
    probes: List[CandidateProbe] = field(default_factory=list)


class _RateEvaluator:
    """Vectorized per-slot rate computation with static geometry precomputed.

    The surface-to-node leg and all link states are independent of the UAV
    position, so only the UAV-to-node and UAV-to-surface distances are
    evaluated per waypoint.
    """

    def __init__(self, scenario: "Scenario"):
        self.scenario = scenario
        constraints = scenario.experiment.constraints
        self.radio = scenario.radio
        self.nodes = scenario.sensor_nodes()
        if not self.nodes:
            raise ConfigurationError("trajectory scenario has no sensor nodes")
        self.node_ids = tuple(n.id for n in self.nodes)
        self.node_pos = np.array([n.position.as_array() for n in self.nodes])
        uav = scenario.uav_node()
        model_direct = scenario.path_loss("uav_sn")

        k = len(self.nodes)
        self._direct_blocked = np.zeros(k, dtype=bool)
        self._direct_exp = model_direct.exponent
        # Per node: serving surface index into self._surfaces, or -1.
        self._serving = np.full(k, -1, dtype=int)
        self._dst_amplitude = np.zeros(k)  # static surface->node per-element amplitude
        self._surfaces = []
        surf_index = {}

        for i, node in enumerate(self.nodes):
            rule = scenario.link_rules.rule_for(uav.id, node.id)
            state = resolve_link_state(
                (uav.id, node.id), constraints.fixed_altitude, rule
            )
            self._direct_blocked[i] = state is LinkState.BLOCKED

            surface = scenario.covering_surface(node.id)
            if surface is None or surface.num_elements == 0:
                continue
            leg_up = resolve_link_state(
                (uav.id, surface.id),
                constraints.fixed_altitude,
                scenario.link_rules.rule_for(uav.id, surface.id),
            )
            leg_down = resolve_link_state(
                (surface.id, node.id),
                surface.position.z,
                scenario.link_rules.rule_for(surface.id, node.id),
            )
            if leg_up is LinkState.BLOCKED or leg_down is LinkState.BLOCKED:
                continue
            if surface.id not in surf_index:
                surf_index[surface.id] = len(self._surfaces)
                self._surfaces.append(surface)
            self._serving[i] = surf_index[surface.id]
            d_down = surface.position.distance_to(node.position)
            self._dst_amplitude[i] = surface.num_elements * math.sqrt(
                path_gain(d_down, scenario.path_loss("irs_sn"), self.radio)
            )

        self._surf_pos = (
            np.array([s.position.as_array() for s in self._surfaces])
            if self._surfaces
            else np.zeros((0, 3))
        )
        self._uav_irs_exp = (
            scenario.path_loss("uav_irs").exponent if self._surfaces else None
        )

    def _amp_gain(self, dist: np.ndarray, exponent: float) -> np.ndarray:
        clamped = np.maximum(dist, self.radio.reference_distance)
        return math.sqrt(self.radio.ref_path_gain) * clamped ** (-exponent / 2.0)

    def rates(self, waypoints: np.ndarray) -> np.ndarray:
        """Rate matrix R[k, t] = log2(1 + SNR) at waypoints[t], t = 0..M-1."""
        wp = waypoints[:-1]
        d_direct = np.linalg.norm(self.node_pos[:, None, :] - wp[None, :, :], axis=2)
        amp = self._amp_gain(d_direct, self._direct_exp)
        amp[self._direct_blocked] = 0.0
        for j, surf in enumerate(self._surfaces):
            d_up = np.linalg.norm(wp - self._surf_pos[j], axis=1)
            a_up = self._amp_gain(d_up, self._uav_irs_exp)
            served = self._serving == j
            amp[served] += self._dst_amplitude[served, None] * a_up[None, :]
        snr = (self.radio.tx_power / self.radio.noise_power) * amp**2
        return np.log2(1.0 + snr)


def per_slot_rates(scenario: "Scenario", trajectory: Trajectory) -> np.ndarray:
    """Per-node, per-slot spectral efficiencies along a trajectory.

    Row order follows the scenario's sensor-node order; slot t is evaluated at
    waypoint t. The reflected path through a covering surface is combined
    coherently with the direct path; nodes colocated with a waypoint are
    handled by the 1 m reference-distance clamp.
    """
    constraints = scenario.experiment.constraints
    if not trajectory.is_speed_feasible(constraints):
        raise ValueError("trajectory violates the speed bound")
    return _RateEvaluator(scenario).rates(trajectory.waypoints)


def optimal_schedule(R: np.ndarray, slot_duration: float) -> Tuple[Schedule, float]:
    """Exact max-min TDMA allocation for a fixed rate matrix.

    Solves max m s.t. sum_t tau[k,t] * slot_duration * R[k,t] >= m for all k,
    sum_k tau[k,t] <= 1 for all t, 0 <= tau <= 1. A second LP minimizes total
    airtime at the optimal value so ties resolve deterministically. Returns
    the schedule and the min throughput it achieves (bps/Hz * s). A node with
    all-zero rates yields m = 0, not an error.
    """
    R = np.asarray(R, dtype=float)
    if R.ndim != 2:
        raise ValueError("R must be a K x M matrix")
    if np.any(R < 0):
        raise ValueError("rates must be >= 0")
    if not (slot_duration > 0):
        raise ValueError("slot_duration must be > 0")
    k, m_slots = R.shape
    n_tau = k * m_slots
    throughput = slot_duration * R  # per-slot contribution of tau[k,t]

    # Stage 1: maximize the min throughput.
    rows, cols, vals = [], [], []
    for i in range(k):
        rows.extend([i] * m_slots)
        cols.extend(range(i * m_slots, (i + 1) * m_slots))
        vals.extend(-throughput[i])
    for i in range(k):  # + m <= 0 on node rows
        rows.append(i)
        cols.append(n_tau)
        vals.append(1.0)
    for t in range(m_slots):  # slot rows: sum_k tau[k,t] <= 1
        for i in range(k):
            rows.append(k + t)
            cols.append(i * m_slots + t)
            vals.append(1.0)
    a_ub = sp.csr_matrix((vals, (rows, cols)), shape=(k + m_slots, n_tau + 1))
    b_ub = np.concatenate([np.zeros(k), np.ones(m_slots)])
    c = np.zeros(n_tau + 1)
    c[-1] = -1.0
    bounds = [(0.0, 1.0)] * n_tau + [(0.0, None)]
    res = linprog(c, A_ub=a_ub, b_ub=b_ub, bounds=bounds, method="highs")
    if not res.success:  # pragma: no cover - LP is always feasible/bounded
        raise RuntimeError(f"max-min schedule LP failed: {res.message}")
    m_star = float(res.x[-1])

    # Stage 2: minimize total airtime subject to keeping the optimal value.
    a2 = a_ub[:, :n_tau]
    b2 = b_ub.copy()
    b2[:k] = -m_star
    res2 = linprog(
        np.ones(n_tau), A_ub=a2, b_ub=b2, bounds=[(0.0, 1.0)] * n_tau, method="highs"
    )
    if not res2.success:  # exact pinning can be borderline infeasible; relax a hair
        b2[:k] = -(m_star - _LP_VALUE_SLACK * max(1.0, m_star))
        res2 = linprog(
            np.ones(n_tau), A_ub=a2, b_ub=b2, bounds=[(0.0, 1.0)] * n_tau, method="highs"
        )
    tau = res2.x if res2.success else res.x[:n_tau]
    tau = np.clip(tau.reshape(k, m_slots), 0.0, 1.0) + 0.0  # also clears -0.0
    col = tau.sum(axis=0)
    over = col > 1.0
    if np.any(over):
        tau[:, over] /= col[over]
    value = float((tau * throughput).sum(axis=1).min())
    return Schedule(tau), value


def _softmin(values: np.ndarray, temperature: float) -> float:
    v = values / temperature
    low = v.min()
    return -temperature * (math.log(np.exp(-(v - low)).sum()) - low)


def _softmin_weights(values: np.ndarray, temperature: float) -> np.ndarray:
    v = values / temperature
    w = np.exp(-(v - v.min()))
    return w / w.sum()


def _clip_pass(wp: np.ndarray, max_step: float, parity: int) -> None:
    """Contract every over-long segment of one parity class in place.

    Segments (t, t+1) of equal parity are vertex-disjoint, so they can be
    clipped simultaneously. Endpoints (waypoints 0 and M) never move.
    """
    m = wp.shape[0] - 1
    t = np.arange(parity, m, 2)
    if t.size == 0:
        return
    delta = wp[t + 1] - wp[t]
    lens = np.linalg.norm(delta, axis=1)
    over = lens > max_step
    if not np.any(over):
        return
    t = t[over]
    direction = delta[over] / lens[over, None]
    excess = (lens[over] - max_step)[:, None]
    movable_lo = (t != 0)[:, None]
    movable_hi = (t + 1 != m)[:, None]
    w_lo = np.where(movable_lo & movable_hi, 0.5, np.where(movable_lo, 1.0, 0.0))
    w_hi = np.where(movable_lo & movable_hi, 0.5, np.where(movable_hi, 1.0, 0.0))
    wp[t] += direction * excess * w_lo
    wp[t + 1] -= direction * excess * w_hi


def _project_speed(
    wp: np.ndarray, max_step: float, feasible_fallback: np.ndarray, max_sweeps: int = 400
) -> np.ndarray:
    """Restore speed feasibility by iterated pairwise segment clipping.

    Falls back to the largest feasible blend toward a known-feasible point if
    clipping has not converged after max_sweeps (the feasible set is convex,
    so the blend search always terminates feasible).
    """
    out = wp.copy()
    tol = max_step * (1.0 + 1e-12)
    for _ in range(max_sweeps):
        lens = np.linalg.norm(np.diff(out, axis=0), axis=1)
        if lens.max() <= tol:
            return out
        _clip_pass(out, max_step, 0)
        _clip_pass(out, max_step, 1)
    lo, hi = 0.0, 1.0  # fallback: bisect the blend factor toward feasibility
    best = feasible_fallback.copy()
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        cand = feasible_fallback + mid * (out - feasible_fallback)
        if np.linalg.norm(np.diff(cand, axis=0), axis=1).max() <= tol:
            best, lo = cand, mid
        else:
            hi = mid
    return best


def improve_trajectory(
    scenario: "Scenario",
    trajectory: Trajectory,
    schedule: Schedule,
    *,
    temperature: float = 0.05,
    fd_step: float = 1e-3,
    shrink: float = 0.5,
    max_backtracks: int = 30,
    _evaluator: Optional[_RateEvaluator] = None,
) -> Trajectory:
    """One projected ascent step on the interior waypoints for a fixed schedule.

    Ascends the softmin-smoothed scheduled throughput via central-difference
    gradients, backtracks the step size, projects onto the speed polytope, and
    rejects any candidate whose hard-min objective is below the input's. Worst
    case the input trajectory is returned unchanged. Endpoints and altitude
    stay fixed.
    """
    ev = _evaluator if _evaluator is not None else _RateEvaluator(scenario)
    constraints = scenario.experiment.constraints
    wp = trajectory.waypoints
    m = trajectory.num_slots
    tau = schedule.fractions
    if tau.shape != (len(ev.nodes), m):
        raise ValueError("schedule shape does not match scenario/trajectory")
    if m < 2:
        return trajectory

    # Objective over time-averaged rates (bps/Hz, matching the temperature's
    # unit); dividing by the fixed mission time rescales but never reorders.
    delta = trajectory.slot_duration
    horizon = m * delta
    s0 = (tau * ev.rates(wp)).sum(axis=1) * delta / horizon
    hard0 = float(s0.min())
    soft0 = _softmin(s0, temperature)
    weights = _softmin_weights(s0, temperature)

    # d(objective)/d(waypoint t) via column-local central differences: R[:, t]
    # depends on waypoint t only, so one shifted evaluation per axis suffices.
    grad = np.zeros_like(wp)
    for axis in (0, 1):
        shift = np.zeros(3)
        shift[axis] = fd_step
        d_rate = (ev.rates(wp + shift) - ev.rates(wp - shift)) / (2.0 * fd_step)
        grad[:m, axis] = (weights[:, None] * tau * (delta / horizon) * d_rate).sum(axis=0)
    grad[0] = 0.0  # endpoints pinned
    grad[m:] = 0.0

    largest = float(np.linalg.norm(grad, axis=1).max())
    if largest <= 0.0:
        return trajectory
    # Open the line search with a deliberately long step (many slots' worth of
    # displacement); projection restores feasibility and backtracking shrinks
    # until the candidate clears the Armijo sufficient-ascent bar without
    # lowering the hard minimum.
    step = 16.0 * constraints.max_step / largest
    grad_sq = float((grad * grad).sum())
    armijo = 1e-4
    for j in range(max_backtracks):
        scale = step * shrink**j
        cand = wp + scale * grad
        cand = _project_speed(cand, constraints.max_step, wp)
        s_new = (tau * ev.rates(cand)).sum(axis=1) * delta / horizon
        gain = _softmin(s_new, temperature) - soft0
        if float(s_new.min()) >= hard0 and gain >= armijo * scale * grad_sq:
            return Trajectory(cand, trajectory.slot_duration)
    return trajectory


def straight_line_trajectory(
    constraints: TrajectoryConstraints, num_slots: int
) -> Trajectory:
    """Uniformly spaced straight path from start to end with num_slots slots."""
    frac = np.linspace(0.0, 1.0, num_slots + 1)[:, None]
    a = constraints.start.as_array()
    b = constraints.end.as_array()
    return Trajectory(a[None, :] + frac * (b - a)[None, :], constraints.slot_duration)


def _resample(trajectory: Trajectory, num_slots: int) -> np.ndarray:
    """Time-linear resampling of a waypoint polyline to a new slot count."""
    old = trajectory.waypoints
    s_old = np.linspace(0.0, 1.0, old.shape[0])
    s_new = np.linspace(0.0, 1.0, num_slots + 1)
    return np.column_stack([np.interp(s_new, s_old, old[:, c]) for c in range(3)])


@dataclass(eq=False)
class _InnerSolution:
    trajectory: Trajectory
    schedule: Schedule
    throughput: float  # scheduled min throughput, bps/Hz * s
    history: List[float]


def _solve_fixed_time(
    scenario: "Scenario",
    ev: _RateEvaluator,
    initial: Trajectory,
    max_iterations: int,
    rel_tol: float,
) -> _InnerSolution:
    """Block-coordinate descent at a fixed mission duration (monotone)."""
    delta = initial.slot_duration
    traj = initial
    sched, value = optimal_schedule(ev.rates(traj.waypoints), delta)
    history = [value]
    for _ in range(max_iterations):
        cand = improve_trajectory(scenario, traj, sched, _evaluator=ev)
        sched_new, value_new = optimal_schedule(ev.rates(cand.waypoints), delta)
        if value_new < value:  # numerical guard; rejected updates end the descent
            break
        stalled = (value_new - value) <= rel_tol * max(1.0, value)
        traj, sched, value = cand, sched_new, value_new
        history.append(value)
        if stalled:
            break
    return _InnerSolution(traj, sched, value, history)


def min_time_mission(
    scenario: "Scenario",
    constraints: Optional[TrajectoryConstraints] = None,
    rate_target: Optional[float] = None,
    *,
    max_time: Optional[float] = None,
    max_iterations: int = 200,
    rel_tol: float = 1e-4,
) -> MissionResult:
    """Shortest discretized mission meeting a per-node average-rate target.

    Bisects the mission duration over multiples of the slot length, scoring
    each candidate with the inner block-coordinate descent (warm-started from
    the previously evaluated duration). A duration is feasible iff its
    achieved min rate reaches rate_target. If even max_time is infeasible the
    best-rate solution is returned with converged=False.
    """
    exp = scenario.experiment
    if constraints is not None or rate_target is not None or max_time is not None:
        exp = replace(
            exp,
            constraints=constraints if constraints is not None else exp.constraints,
            rate_target=rate_target if rate_target is not None else exp.rate_target,
            max_time=max_time if max_time is not None else exp.max_time,
        )
        scenario = scenario.with_experiment(exp)
    constraints = exp.constraints
    rate_target = exp.rate_target
    max_time = exp.max_time
    if not (rate_target > 0):
        raise ValueError("rate_target must be > 0")

    delta = constraints.slot_duration
    distance = constraints.start.distance_to(constraints.end)
    m_min = max(1, math.ceil(distance / constraints.max_step - 1e-9))
    m_max = math.floor(max_time / delta + 1e-9)
    if m_max < m_min:
        raise ValueError(
            f"max_time {max_time} s cannot cover the straight {distance:.1f} m flight"
        )

    ev = _RateEvaluator(scenario)
    probes: List[CandidateProbe] = []
    solutions = {}
    iterations = 0
    last: Optional[Trajectory] = None

    def evaluate(m: int) -> bool:
        nonlocal iterations, last
        if last is None:
            initial = straight_line_trajectory(constraints, m)
        else:
            wp = _resample(last, m)
            wp = _project_speed(
                wp, constraints.max_step, straight_line_trajectory(constraints, m).waypoints
            )
            initial = Trajectory(wp, delta)
        sol = _solve_fixed_time(scenario, ev, initial, max_iterations, rel_tol)
        solutions[m] = sol
        last = sol.trajectory
        iterations += len(sol.history) - 1
        rate = sol.throughput / (m * delta)
        feasible = rate >= rate_target - 1e-9
        probes.append(CandidateProbe(m * delta, feasible, rate, sol.history))
        return feasible

    def result_for(m: int, converged: bool) -> MissionResult:
        sol = solutions[m]
        per_node = (sol.schedule.fractions * ev.rates(sol.trajectory.waypoints)).sum(
            axis=1
        ) * delta / (m * delta)
        return MissionResult(
            trajectory=sol.trajectory,
            schedule=sol.schedule,
            mission_time=m * delta,
            achieved_min_rate=float(per_node.min()),
            per_node_rates=per_node,
            node_ids=ev.node_ids,
            iterations=iterations,
            converged=converged,
            rate_target=rate_target,
            probes=probes,
        )

    if evaluate(m_min):
        # The predecessor duration cannot even reach the end point.
        probes.insert(
            0,
            CandidateProbe((m_min - 1) * delta, False, 0.0, [], note="speed"),
        )
        return result_for(m_min, converged=True)
    if m_max == m_min or not evaluate(m_max):
        best = max(
            (m for m in solutions), key=lambda m: solutions[m].throughput / (m * delta)
        )
        return result_for(best, converged=False)

    lo, hi = m_min, m_max  # invariant: lo infeasible, hi feasible
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if evaluate(mid):
            hi = mid
        else:
            lo = mid
    return result_for(hi, converged=True)
