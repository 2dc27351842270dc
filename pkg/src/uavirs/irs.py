"""Reflecting surfaces, their coverage rules, and the cascaded reflected channel.

Two surface kinds exist. A terrestrial surface is wall-mounted: it serves only
nodes in its front half-space ((node - surface) . facing_normal > 0), further
limited by an optional coverage radius. A UAV-mounted surface reflects
panoramically and serves any node whose link to it resolves LoS. An explicit
covered-node set on either kind overrides the geometric rule.

Reflection is ideal passive beamforming: continuous phases, unit amplitude,
perfect alignment, so the reflected path contributes N identical per-element
amplitudes that add coherently with the direct path (N**2 power scaling). The
per-element amplitude obeys the product-distance law: it is the product of the
amplitude gains of the two legs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Iterable, Mapping, Optional, Tuple, Union

import numpy as np

from .channel import (
    LinkState,
    LinkStateRule,
    PathLossModel,
    Position3D,
    RadioParams,
    path_gain,
)
from .errors import ConfigurationError

ArrayLike = Union[float, np.ndarray]


class SurfaceKind(Enum):
    TERRESTRIAL = "terrestrial"
    AERIAL_MOUNTED = "aerial"


@dataclass(frozen=True)
class IrsSurface:
    """One reflecting surface; num_elements = 0 contributes no reflected path."""

    id: str
    kind: SurfaceKind
    position: Position3D
    num_elements: int = 0
    facing_normal: Optional[Tuple[float, float, float]] = None
    coverage_radius: Optional[float] = None
    covered_node_ids: Optional[frozenset] = None

    def __post_init__(self):
        if self.num_elements < 0:
            raise ValueError("num_elements must be >= 0")
        if self.kind is SurfaceKind.TERRESTRIAL and self.facing_normal is None:
            raise ConfigurationError(
                f"terrestrial surface {self.id!r} requires a facing_normal"
            )
        if self.coverage_radius is not None and self.coverage_radius <= 0:
            raise ValueError("coverage_radius must be > 0 when set")
        if self.covered_node_ids is not None:
            object.__setattr__(self, "covered_node_ids", frozenset(self.covered_node_ids))

    def at_altitude(self, altitude: float) -> "IrsSurface":
        """Copy of an aerial surface moved to a new altitude."""
        if self.kind is not SurfaceKind.AERIAL_MOUNTED:
            raise ConfigurationError(f"surface {self.id!r} is not aerial; altitude is fixed")
        pos = Position3D(self.position.x, self.position.y, float(altitude))
        return replace(self, position=pos)

    def with_elements(self, n: int) -> "IrsSurface":
        return replace(self, num_elements=int(n))


@dataclass(frozen=True)
class CascadedLink:
    """Transmitter -> surface -> receiver reflected path (product-distance law)."""

    src_distance: float
    dst_distance: float
    src_model: PathLossModel
    dst_model: PathLossModel
    elements: int

    def per_element_amplitude(self, radio: RadioParams) -> float:
        """Amplitude gain of one element: sqrt(gain_src) * sqrt(gain_dst)."""
        g_src = path_gain(self.src_distance, self.src_model, radio)
        g_dst = path_gain(self.dst_distance, self.dst_model, radio)
        return math.sqrt(g_src) * math.sqrt(g_dst)


def covers(
    surface: IrsSurface,
    node_pos: Position3D,
    link_state: Optional[LinkState] = None,
    node_id: Optional[str] = None,
) -> bool:
    """Whether `surface` can serve a node.

    An explicit covered_node_ids set decides alone (node_id required then).
    Otherwise terrestrial surfaces apply the front-half-space test plus the
    optional radius; aerial surfaces require the node's link state to be LoS.
    """
    if surface.covered_node_ids is not None:
        if node_id is None:
            raise ConfigurationError(
                f"surface {surface.id!r} has an explicit covered set; node_id is required"
            )
        return node_id in surface.covered_node_ids

    if surface.kind is SurfaceKind.TERRESTRIAL:
        normal = np.asarray(surface.facing_normal, dtype=float)
        norm = np.linalg.norm(normal)
        if norm == 0.0:
            raise ConfigurationError(f"surface {surface.id!r} has a zero-length facing_normal")
        offset = node_pos.as_array() - surface.position.as_array()
        if float(offset @ normal) <= 0.0:
            return False
        if surface.coverage_radius is not None:
            return float(np.linalg.norm(offset)) <= surface.coverage_radius
        return True

    # Aerial: panoramic reflection, needs line of sight only.
    return link_state is LinkState.LOS


def effective_snr(
    direct_gain: float,
    cascaded: Optional[CascadedLink],
    radio: RadioParams,
) -> float:
    """Linear SNR of the coherently combined direct + reflected channel.

    Amplitude A = sqrt(direct_gain) + N * per-element cascaded amplitude, and
    SNR = tx_power * A**2 / noise_power. Pass cascaded=None when no surface
    covers the node; a blocked direct link is direct_gain = 0.
    """
    if direct_gain < 0:
        raise ValueError("direct_gain must be >= 0")
    amplitude = math.sqrt(direct_gain)
    if cascaded is not None and cascaded.elements > 0:
        amplitude += cascaded.elements * cascaded.per_element_amplitude(radio)
    return radio.tx_power * amplitude**2 / radio.noise_power


def combined_amplitude(
    direct_gain: ArrayLike, per_element_amplitude: ArrayLike, elements: int
) -> ArrayLike:
    """Vectorized helper: sqrt(direct_gain) + N * per-element amplitude."""
    return np.sqrt(np.asarray(direct_gain, dtype=float)) + elements * np.asarray(
        per_element_amplitude, dtype=float
    )


def min_serving_altitude(
    surface: IrsSurface,
    required_los_nodes: Iterable[str],
    rules: Mapping[str, LinkStateRule] | "object",
) -> float:
    """Lowest altitude at which an aerial surface has LoS to every required node.

    `rules` maps node id -> LinkStateRule for the (surface, node) pair, or is a
    LinkRuleSet. Returns 0 for an empty required set.
    """
    if surface.kind is not SurfaceKind.AERIAL_MOUNTED:
        raise ConfigurationError(f"surface {surface.id!r} is not aerial")
    required = list(required_los_nodes)
    if not required:
        return 0.0
    altitude = 0.0
    for node_id in required:
        if hasattr(rules, "rule_for"):
            rule = rules.rule_for(surface.id, node_id)
        else:
            rule = rules.get(node_id)
        if rule is None:
            raise ConfigurationError(
                f"no link-state rule between surface {surface.id!r} and node {node_id!r}"
            )
        altitude = max(altitude, rule.min_altitude_for_los)
    return altitude
