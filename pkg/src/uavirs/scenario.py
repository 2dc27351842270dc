"""Scenario files: strict YAML schema, validation, and round-trip emission.

A scenario is a single YAML document holding the nodes, surfaces, radio
constants, per-link-class path-loss exponents, link-state rules, and exactly
one experiment block (trajectory or deployment). Unknown keys are rejected;
every validation error names the offending field. All defaults from the
design ledger are applied at load time and echoed into the loaded object, so
dumping and reloading a scenario reproduces it exactly.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path
from typing import Dict, Optional, Tuple, Union

import yaml

from .channel import (
    LinkRuleSet,
    LinkState,
    LinkStateRule,
    Node,
    NodeRole,
    PathLossModel,
    Position3D,
    RadioParams,
    resolve_link_state,
)
from .deployment import DeploymentStrategy
from .errors import ConfigurationError, ScenarioError
from .irs import IrsSurface, SurfaceKind, covers
from .trajectory import TrajectoryConstraints

DEFAULT_SLOT_DURATION = 0.1
DEFAULT_MAX_TIME = 60.0


@dataclass(frozen=True)
class TrajectoryExperiment:
    constraints: TrajectoryConstraints
    rate_target: float
    max_time: float = DEFAULT_MAX_TIME


@dataclass(frozen=True)
class DeploymentExperiment:
    n_budget: int
    strategies: Tuple[DeploymentStrategy, ...] = (
        DeploymentStrategy.USER_SIDE,
        DeploymentStrategy.BS_SIDE,
        DeploymentStrategy.HYBRID,
    )


Experiment = Union[TrajectoryExperiment, DeploymentExperiment]


@dataclass(frozen=True)
class Scenario:
    """A fully validated experiment description."""

    name: str
    nodes: Tuple[Node, ...]
    surfaces: Tuple[IrsSurface, ...]
    radio: RadioParams
    path_loss_classes: Dict[str, PathLossModel]
    link_rules: LinkRuleSet
    experiment: Experiment
    description: str = ""

    def node(self, node_id: str) -> Node:
        for n in self.nodes:
            if n.id == node_id:
                return n
        raise ConfigurationError(f"unknown node {node_id!r}")

    def _by_role(self, role: NodeRole) -> Tuple[Node, ...]:
        return tuple(n for n in self.nodes if n.role is role)

    def uav_node(self) -> Node:
        (uav,) = self._by_role(NodeRole.UAV)
        return uav

    def bs_node(self) -> Node:
        (bs,) = self._by_role(NodeRole.BS)
        return bs

    def sensor_nodes(self) -> Tuple[Node, ...]:
        return self._by_role(NodeRole.SENSOR)

    def user_nodes(self) -> Tuple[Node, ...]:
        return self._by_role(NodeRole.USER)

    def path_loss(self, link_class: str) -> PathLossModel:
        try:
            return self.path_loss_classes[link_class]
        except KeyError:
            raise ConfigurationError(f"no path-loss model for link class {link_class!r}")

    def covering_surface(self, node_id: str) -> Optional[IrsSurface]:
        """The unique surface covering a node, or None (validated at load)."""
        node = self.node(node_id)
        for surface in self.surfaces:
            if self._surface_covers(surface, node):
                return surface
        return None

    def _surface_covers(self, surface: IrsSurface, node: Node) -> bool:
        state = None
        if surface.kind is SurfaceKind.AERIAL_MOUNTED:
            state = resolve_link_state(
                (surface.id, node.id),
                surface.position.z,
                self.link_rules.rule_for(surface.id, node.id),
            )
        return covers(surface, node.position, link_state=state, node_id=node.id)

    def with_experiment(self, experiment: Experiment) -> "Scenario":
        return replace(self, experiment=experiment)

    def without_irs(self) -> "Scenario":
        """Variant with every surface stripped to zero reflecting elements."""
        return replace(
            self, surfaces=tuple(s.with_elements(0) for s in self.surfaces)
        )


def scenario_digest(text: Union[str, bytes]) -> str:
    """Content hash (sha256 hex) of a scenario file's bytes."""
    data = text.encode("utf-8") if isinstance(text, str) else text
    return hashlib.sha256(data).hexdigest()


def scenario_path(name: str) -> Path:
    """Filesystem path of a shipped scenario file, e.g. scenario_path("fig4")."""
    base = resources.files("uavirs") / "scenarios" / f"{name}.scenario"
    return Path(str(base))


# ---------------------------------------------------------------------------
# Parsing helpers: every reader names the field it is validating.


def _fail(field: str, message: str):
    raise ScenarioError(message, field=field)


def _check_keys(mapping: dict, allowed: set, where: str) -> None:
    unknown = set(mapping) - allowed
    if unknown:
        name = sorted(unknown)[0]
        _fail(f"{where}{name}", "unknown key")


def _require(mapping: dict, key: str, where: str):
    if key not in mapping:
        _fail(f"{where}{key}", "missing required key")
    return mapping[key]


def _as_str(value, field: str) -> str:
    if not isinstance(value, str) or not value:
        _fail(field, f"expected a non-empty string, got {value!r}")
    return value


def _as_float(value, field: str, allow_inf: bool = False) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        _fail(field, f"expected a number, got {value!r}")
    out = float(value)
    if math.isnan(out) or (not allow_inf and math.isinf(out)):
        _fail(field, f"expected a finite number, got {value!r}")
    return out


def _as_int(value, field: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        _fail(field, f"expected an integer, got {value!r}")
    return value


def _as_position(value, field: str) -> Position3D:
    if not isinstance(value, (list, tuple)) or len(value) != 3:
        _fail(field, f"expected [x, y, z], got {value!r}")
    coords = [_as_float(v, f"{field}[{i}]") for i, v in enumerate(value)]
    try:
        return Position3D(*coords)
    except ValueError as exc:
        _fail(field, str(exc))


def _as_vector(value, field: str) -> Tuple[float, float, float]:
    if not isinstance(value, (list, tuple)) or len(value) != 3:
        _fail(field, f"expected a 3-vector, got {value!r}")
    return tuple(_as_float(v, f"{field}[{i}]") for i, v in enumerate(value))


_ROLES = {r.value: r for r in NodeRole}
_KINDS = {k.value: k for k in SurfaceKind}
_FALLBACKS = {"nlos": LinkState.NLOS, "blocked": LinkState.BLOCKED}
_STRATEGIES = {s.value: s for s in DeploymentStrategy}


def _parse_node(entry, where: str) -> Node:
    if not isinstance(entry, dict):
        _fail(where, "node entries must be mappings")
    _check_keys(entry, {"id", "role", "position"}, f"{where}.")
    node_id = _as_str(_require(entry, "id", f"{where}."), f"{where}.id")
    role_raw = _as_str(_require(entry, "role", f"{where}."), f"{where}.role")
    if role_raw not in _ROLES:
        _fail(f"{where}.role", f"expected one of {sorted(_ROLES)}, got {role_raw!r}")
    position = _as_position(_require(entry, "position", f"{where}."), f"{where}.position")
    return Node(node_id, _ROLES[role_raw], position)


def _parse_surface(entry, where: str) -> IrsSurface:
    if not isinstance(entry, dict):
        _fail(where, "surface entries must be mappings")
    allowed = {
        "id",
        "kind",
        "position",
        "num_elements",
        "facing_normal",
        "coverage_radius",
        "covered_node_ids",
    }
    _check_keys(entry, allowed, f"{where}.")
    surf_id = _as_str(_require(entry, "id", f"{where}."), f"{where}.id")
    kind_raw = _as_str(_require(entry, "kind", f"{where}."), f"{where}.kind")
    if kind_raw not in _KINDS:
        _fail(f"{where}.kind", f"expected one of {sorted(_KINDS)}, got {kind_raw!r}")
    kind = _KINDS[kind_raw]
    position = _as_position(_require(entry, "position", f"{where}."), f"{where}.position")
    num_elements = _as_int(entry.get("num_elements", 0), f"{where}.num_elements")
    if num_elements < 0:
        _fail(f"{where}.num_elements", "must be >= 0")
    normal = None
    if "facing_normal" in entry:
        normal = _as_vector(entry["facing_normal"], f"{where}.facing_normal")
        if all(c == 0 for c in normal):
            _fail(f"{where}.facing_normal", "must not be the zero vector")
    elif kind is SurfaceKind.TERRESTRIAL:
        _fail(f"{where}.facing_normal", "terrestrial surfaces require a facing_normal")
    radius = None
    if "coverage_radius" in entry and entry["coverage_radius"] is not None:
        radius = _as_float(entry["coverage_radius"], f"{where}.coverage_radius")
        if radius <= 0:
            _fail(f"{where}.coverage_radius", "must be > 0")
    covered = None
    if "covered_node_ids" in entry and entry["covered_node_ids"] is not None:
        raw = entry["covered_node_ids"]
        if not isinstance(raw, list):
            _fail(f"{where}.covered_node_ids", "expected a list of node ids")
        covered = frozenset(
            _as_str(v, f"{where}.covered_node_ids[{i}]") for i, v in enumerate(raw)
        )
    return IrsSurface(
        id=surf_id,
        kind=kind,
        position=position,
        num_elements=num_elements,
        facing_normal=normal,
        coverage_radius=radius,
        covered_node_ids=covered,
    )


def _parse_rule(entry, where: str) -> LinkStateRule:
    if not isinstance(entry, dict):
        _fail(where, "link-state rules must be mappings")
    _check_keys(entry, {"endpoints", "min_altitude_for_los", "fallback"}, f"{where}.")
    raw = _require(entry, "endpoints", f"{where}.")
    if not isinstance(raw, list) or len(raw) != 2:
        _fail(f"{where}.endpoints", f"expected a pair of ids, got {raw!r}")
    endpoints = (
        _as_str(raw[0], f"{where}.endpoints[0]"),
        _as_str(raw[1], f"{where}.endpoints[1]"),
    )
    threshold = _as_float(
        entry.get("min_altitude_for_los", 0.0),
        f"{where}.min_altitude_for_los",
        allow_inf=True,
    )
    if threshold < 0:
        _fail(f"{where}.min_altitude_for_los", "must be >= 0")
    fallback_raw = entry.get("fallback", "nlos")
    if fallback_raw not in _FALLBACKS:
        _fail(f"{where}.fallback", f"expected one of {sorted(_FALLBACKS)}, got {fallback_raw!r}")
    try:
        return LinkStateRule(endpoints, threshold, _FALLBACKS[fallback_raw])
    except ValueError as exc:
        _fail(where, str(exc))


def _parse_radio(entry, where: str) -> RadioParams:
    if entry is None:
        return RadioParams()
    if not isinstance(entry, dict):
        _fail(where, "radio must be a mapping")
    _check_keys(
        entry, {"tx_power_w", "noise_power_w", "ref_path_gain_db"}, f"{where}."
    )
    try:
        return RadioParams(
            tx_power=_as_float(entry.get("tx_power_w", 0.1), f"{where}.tx_power_w"),
            noise_power=_as_float(
                entry.get("noise_power_w", 1e-11), f"{where}.noise_power_w"
            ),
            ref_path_gain_db=_as_float(
                entry.get("ref_path_gain_db", -30.0), f"{where}.ref_path_gain_db"
            ),
        )
    except ValueError as exc:
        _fail(where, str(exc))


def _parse_experiment(entry, where: str) -> Experiment:
    if not isinstance(entry, dict):
        _fail(where, "experiment must be a mapping")
    kind = _as_str(_require(entry, "kind", f"{where}."), f"{where}.kind")
    if kind == "trajectory":
        allowed = {
            "kind",
            "start",
            "end",
            "fixed_altitude",
            "v_max",
            "slot_duration",
            "rate_target",
            "max_time",
        }
        _check_keys(entry, allowed, f"{where}.")
        start = _as_position(_require(entry, "start", f"{where}."), f"{where}.start")
        end = _as_position(_require(entry, "end", f"{where}."), f"{where}.end")
        altitude = _as_float(
            _require(entry, "fixed_altitude", f"{where}."), f"{where}.fixed_altitude"
        )
        v_max = _as_float(_require(entry, "v_max", f"{where}."), f"{where}.v_max")
        slot = _as_float(
            entry.get("slot_duration", DEFAULT_SLOT_DURATION), f"{where}.slot_duration"
        )
        target = _as_float(
            _require(entry, "rate_target", f"{where}."), f"{where}.rate_target"
        )
        max_time = _as_float(entry.get("max_time", DEFAULT_MAX_TIME), f"{where}.max_time")
        if target <= 0:
            _fail(f"{where}.rate_target", "must be > 0")
        if max_time < slot:
            _fail(f"{where}.max_time", "must cover at least one slot")
        try:
            constraints = TrajectoryConstraints(start, end, altitude, v_max, slot)
        except ValueError as exc:
            _fail(where, str(exc))
        return TrajectoryExperiment(constraints, target, max_time)
    if kind == "deployment":
        _check_keys(entry, {"kind", "n_budget", "strategies"}, f"{where}.")
        n_budget = _as_int(_require(entry, "n_budget", f"{where}."), f"{where}.n_budget")
        if n_budget < 0:
            _fail(f"{where}.n_budget", "must be >= 0")
        raw = entry.get("strategies", ["user", "bs", "hybrid"])
        if raw == "all":
            raw = ["user", "bs", "hybrid"]
        if not isinstance(raw, list) or not raw:
            _fail(f"{where}.strategies", f"expected a non-empty list, got {raw!r}")
        strategies = []
        for i, s in enumerate(raw):
            if s not in _STRATEGIES:
                _fail(
                    f"{where}.strategies[{i}]",
                    f"expected one of {sorted(_STRATEGIES)}, got {s!r}",
                )
            strategies.append(_STRATEGIES[s])
        if len(set(strategies)) != len(strategies):
            _fail(f"{where}.strategies", "strategies must be unique")
        return DeploymentExperiment(n_budget, tuple(strategies))
    _fail(f"{where}.kind", f"expected 'trajectory' or 'deployment', got {kind!r}")


def _validate_semantics(scenario: Scenario) -> None:
    ids = [n.id for n in scenario.nodes]
    if len(set(ids)) != len(ids):
        _fail("nodes", "node ids must be unique")
    surf_ids = [s.id for s in scenario.surfaces]
    if len(set(surf_ids)) != len(surf_ids) or set(surf_ids) & set(ids):
        _fail("surfaces", "surface ids must be unique and distinct from node ids")
    known = set(ids) | set(surf_ids)
    for i, a in enumerate(scenario.nodes):
        for b in scenario.nodes[i + 1 :]:
            if a.position == b.position:
                _fail("nodes", f"nodes {a.id!r} and {b.id!r} share a position")
    for s in scenario.surfaces:
        if s.covered_node_ids is not None:
            for nid in sorted(s.covered_node_ids):
                if nid not in ids:
                    _fail("surfaces", f"surface {s.id!r} covers unknown node {nid!r}")
    for rule in scenario.link_rules:
        for endpoint in rule.endpoints:
            if endpoint not in known:
                _fail("link_state_rules", f"unknown endpoint {endpoint!r}")

    exp = scenario.experiment
    if isinstance(exp, TrajectoryExperiment):
        if len(scenario._by_role(NodeRole.UAV)) != 1:
            _fail("nodes", "trajectory scenarios need exactly one UAV node")
        if not scenario.sensor_nodes():
            _fail("nodes", "trajectory scenarios need at least one sensor node")
        required = {"uav_sn"} | ({"uav_irs", "irs_sn"} if scenario.surfaces else set())
        for cls in sorted(required):
            if cls not in scenario.path_loss_classes:
                _fail("path_loss_classes", f"missing required link class {cls!r}")
        for node in scenario.sensor_nodes():
            covering = [
                s.id for s in scenario.surfaces if scenario._surface_covers(s, node)
            ]
            if len(covering) > 1:
                _fail(
                    "surfaces",
                    f"node {node.id!r} is covered by multiple surfaces {covering}",
                )
    else:
        if len(scenario._by_role(NodeRole.BS)) != 1:
            _fail("nodes", "deployment scenarios need exactly one BS node")
        if not scenario.user_nodes():
            _fail("nodes", "deployment scenarios need at least one user node")
        aerial = [s for s in scenario.surfaces if s.kind is SurfaceKind.AERIAL_MOUNTED]
        terrestrial = [s for s in scenario.surfaces if s.kind is SurfaceKind.TERRESTRIAL]
        if len(aerial) != 1 or len(terrestrial) != 1:
            _fail(
                "surfaces",
                "deployment scenarios need exactly one aerial and one terrestrial surface",
            )
        for cls in ("los", "nlos"):
            if cls not in scenario.path_loss_classes:
                _fail("path_loss_classes", f"missing required link class {cls!r}")


_TOP_KEYS = {
    "name",
    "description",
    "nodes",
    "surfaces",
    "radio",
    "path_loss_classes",
    "link_state_rules",
    "experiment",
}


def loads_scenario(text: str) -> Scenario:
    """Parse and validate a scenario document from YAML text."""
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        if mark is not None:
            raise ScenarioError(
                f"parse error at line {mark.line + 1}, column {mark.column + 1}: "
                f"{getattr(exc, 'problem', exc)}"
            )
        raise ScenarioError(f"parse error: {exc}")
    if not isinstance(doc, dict):
        raise ScenarioError("scenario document must be a mapping")
    _check_keys(doc, _TOP_KEYS, "")

    name = _as_str(doc.get("name", "unnamed"), "name")
    description = doc.get("description", "")
    if not isinstance(description, str):
        _fail("description", "expected a string")

    raw_nodes = _require(doc, "nodes", "")
    if not isinstance(raw_nodes, list) or not raw_nodes:
        _fail("nodes", "expected a non-empty list")
    nodes = tuple(_parse_node(n, f"nodes[{i}]") for i, n in enumerate(raw_nodes))

    raw_surfaces = doc.get("surfaces", [])
    if raw_surfaces is None:
        raw_surfaces = []
    if not isinstance(raw_surfaces, list):
        _fail("surfaces", "expected a list")
    surfaces = tuple(
        _parse_surface(s, f"surfaces[{i}]") for i, s in enumerate(raw_surfaces)
    )

    radio = _parse_radio(doc.get("radio"), "radio")

    raw_classes = _require(doc, "path_loss_classes", "")
    if not isinstance(raw_classes, dict) or not raw_classes:
        _fail("path_loss_classes", "expected a non-empty mapping")
    classes = {}
    for key, value in raw_classes.items():
        key = _as_str(key, "path_loss_classes")
        exponent = _as_float(value, f"path_loss_classes.{key}")
        try:
            classes[key] = PathLossModel(exponent)
        except ValueError as exc:
            _fail(f"path_loss_classes.{key}", str(exc))

    raw_rules = doc.get("link_state_rules", [])
    if raw_rules is None:
        raw_rules = []
    if not isinstance(raw_rules, list):
        _fail("link_state_rules", "expected a list")
    rules = [
        _parse_rule(r, f"link_state_rules[{i}]") for i, r in enumerate(raw_rules)
    ]
    try:
        rule_set = LinkRuleSet(rules, default_to_los=True)
    except ConfigurationError as exc:
        _fail("link_state_rules", str(exc))

    experiment = _parse_experiment(_require(doc, "experiment", ""), "experiment")

    scenario = Scenario(
        name=name,
        nodes=nodes,
        surfaces=surfaces,
        radio=radio,
        path_loss_classes=classes,
        link_rules=rule_set,
        experiment=experiment,
        description=description,
    )
    _validate_semantics(scenario)
    return scenario


def load_scenario(path) -> Scenario:
    """Load and validate a scenario file."""
    file_path = Path(path)
    if not file_path.exists():
        raise ScenarioError(f"scenario file not found: {file_path}")
    return loads_scenario(file_path.read_text(encoding="utf-8"))


def _position_list(p: Position3D) -> list:
    return [p.x, p.y, p.z]


def dump_scenario(scenario: Scenario) -> str:
    """Serialize a scenario back to YAML; loads_scenario(dump(s)) == s."""
    doc = {"name": scenario.name}
    if scenario.description:
        doc["description"] = scenario.description
    doc["nodes"] = [
        {"id": n.id, "role": n.role.value, "position": _position_list(n.position)}
        for n in scenario.nodes
    ]
    if scenario.surfaces:
        doc["surfaces"] = []
        for s in scenario.surfaces:
            entry = {
                "id": s.id,
                "kind": s.kind.value,
                "position": _position_list(s.position),
                "num_elements": s.num_elements,
            }
            if s.facing_normal is not None:
                entry["facing_normal"] = list(s.facing_normal)
            if s.coverage_radius is not None:
                entry["coverage_radius"] = s.coverage_radius
            if s.covered_node_ids is not None:
                entry["covered_node_ids"] = sorted(s.covered_node_ids)
            doc["surfaces"].append(entry)
    doc["radio"] = {
        "tx_power_w": scenario.radio.tx_power,
        "noise_power_w": scenario.radio.noise_power,
        "ref_path_gain_db": scenario.radio.ref_path_gain_db,
    }
    doc["path_loss_classes"] = {
        key: model.exponent for key, model in scenario.path_loss_classes.items()
    }
    if len(scenario.link_rules):
        doc["link_state_rules"] = [
            {
                "endpoints": list(rule.endpoints),
                "min_altitude_for_los": rule.min_altitude_for_los,
                "fallback": rule.fallback_state.value,
            }
            for rule in scenario.link_rules
        ]
    exp = scenario.experiment
    if isinstance(exp, TrajectoryExperiment):
        doc["experiment"] = {
            "kind": "trajectory",
            "start": _position_list(exp.constraints.start),
            "end": _position_list(exp.constraints.end),
            "fixed_altitude": exp.constraints.fixed_altitude,
            "v_max": exp.constraints.v_max,
            "slot_duration": exp.constraints.slot_duration,
            "rate_target": exp.rate_target,
            "max_time": exp.max_time,
        }
    else:
        doc["experiment"] = {
            "kind": "deployment",
            "n_budget": exp.n_budget,
            "strategies": [s.value for s in exp.strategies],
        }
    return yaml.safe_dump(doc, sort_keys=False, default_flow_style=None)
