"""Geometry, large-scale path loss, link-state resolution and spectral efficiency.

All channels are deterministic LoS-amplitude models: the power gain of a link
of length d is g0 * d**(-alpha) with g0 the linear gain at the 1 m reference
distance. Link states are a binary LoS/NLoS switch (plus Blocked for links
that carry exactly zero gain), resolved from the aerial endpoint's altitude.

Everything here is a pure function of its arguments; there is no module-level
mutable state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Optional, Tuple, Union

import numpy as np

from .errors import ConfigurationError

ArrayLike = Union[float, np.ndarray]


@dataclass(frozen=True)
class Position3D:
    """A point in meters; z is altitude and must be non-negative."""

    x: float
    y: float
    z: float

    def __post_init__(self):
        for name in ("x", "y", "z"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValueError(f"Position3D.{name} must be finite, got {v!r}")
        if self.z < 0:
            raise ValueError(f"altitude must be >= 0, got z={self.z}")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=float)

    def distance_to(self, other: "Position3D") -> float:
        return math.dist((self.x, self.y, self.z), (other.x, other.y, other.z))


@dataclass(frozen=True)
class RadioParams:
    """Transmit power, noise power (both watts) and the reference path gain.

    ref_path_gain_db is the path gain at the 1 m reference distance, in dB;
    it must be <= 0 (an attenuation).
    """

    tx_power: float = 0.1
    noise_power: float = 1e-11
    ref_path_gain_db: float = -30.0
    reference_distance: float = 1.0

    def __post_init__(self):
        if not (self.tx_power > 0):
            raise ValueError(f"tx_power must be > 0, got {self.tx_power}")
        if not (self.noise_power > 0):
            raise ValueError(f"noise_power must be > 0, got {self.noise_power}")
        if self.ref_path_gain_db > 0:
            raise ValueError(
                f"ref_path_gain_db must be <= 0 (attenuation), got {self.ref_path_gain_db}"
            )

    @property
    def ref_path_gain(self) -> float:
        """Linear power gain at the reference distance."""
        return 10.0 ** (self.ref_path_gain_db / 10.0)


@dataclass(frozen=True)
class PathLossModel:
    """Distance-power law: gain(d) = g0 * d**(-exponent)."""

    exponent: float

    def __post_init__(self):
        if not (self.exponent >= 1.0):
            raise ValueError(f"path-loss exponent must be >= 1, got {self.exponent}")


class LinkState(Enum):
    LOS = "los"
    NLOS = "nlos"
    BLOCKED = "blocked"


class NodeRole(Enum):
    UAV = "uav"
    BS = "bs"
    SENSOR = "sensor"
    USER = "user"


@dataclass(frozen=True)
class Node:
    """A configured network node: identity, role and fixed position."""

    id: str
    role: NodeRole
    position: Position3D


@dataclass(frozen=True)
class LinkStateRule:
    """Binary link-state rule for one endpoint pair.

    The link resolves LoS iff the aerial endpoint's altitude is at least
    min_altitude_for_los, otherwise it takes fallback_state. A threshold of 0
    means always-LoS; a threshold of inf means the fallback always applies.
    """

    endpoints: Tuple[str, str]
    min_altitude_for_los: float = 0.0
    fallback_state: LinkState = LinkState.NLOS

    def __post_init__(self):
        if self.min_altitude_for_los < 0:
            raise ValueError("min_altitude_for_los must be >= 0")
        if self.fallback_state is LinkState.LOS:
            raise ValueError("fallback_state must be NLoS or Blocked")
        object.__setattr__(self, "endpoints", _normalize_pair(self.endpoints))

    def matches(self, pair: Tuple[str, str]) -> bool:
        return self.endpoints == _normalize_pair(pair)


def _normalize_pair(pair: Iterable[str]) -> Tuple[str, str]:
    a, b = pair
    if a == b:
        raise ValueError(f"link endpoints must differ, got ({a!r}, {b!r})")
    return (a, b) if a <= b else (b, a)


class LinkRuleSet:
    """Lookup table of link-state rules keyed by unordered endpoint pair.

    When constructed with default_to_los=True (the loader's behavior), pairs
    without an explicit rule resolve through the default always-LoS rule;
    otherwise a missing rule is a configuration error.
    """

    def __init__(self, rules: Iterable[LinkStateRule] = (), default_to_los: bool = True):
        self._rules = {}
        for rule in rules:
            if rule.endpoints in self._rules:
                raise ConfigurationError(
                    f"duplicate link-state rule for pair {rule.endpoints}"
                )
            self._rules[rule.endpoints] = rule
        self._default_to_los = default_to_los

    def get(self, a: str, b: str) -> Optional[LinkStateRule]:
        return self._rules.get(_normalize_pair((a, b)))

    def rule_for(self, a: str, b: str) -> LinkStateRule:
        rule = self.get(a, b)
        if rule is not None:
            return rule
        if self._default_to_los:
            return LinkStateRule((a, b), min_altitude_for_los=0.0)
        raise ConfigurationError(f"no link-state rule configured for pair ({a!r}, {b!r})")

    def __iter__(self):
        return iter(sorted(self._rules.values(), key=lambda r: r.endpoints))

    def __len__(self):
        return len(self._rules)

    def __eq__(self, other):
        if not isinstance(other, LinkRuleSet):
            return NotImplemented
        return (
            self._rules == other._rules and self._default_to_los == other._default_to_los
        )


def path_gain(d: ArrayLike, model: PathLossModel, radio: RadioParams) -> ArrayLike:
    """Linear power gain g0 * d**(-alpha) of a link of length d meters.

    Distances below the 1 m reference are clamped up to 1 m. Accepts scalars
    or arrays; negative or non-finite distances raise ValueError.
    """
    arr = np.asarray(d, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError("distance must be finite")
    if np.any(arr < 0):
        raise ValueError("distance must be >= 0")
    clamped = np.maximum(arr, radio.reference_distance)
    gain = radio.ref_path_gain * clamped ** (-model.exponent)
    if np.isscalar(d) or arr.ndim == 0:
        return float(gain)
    return gain


def resolve_link_state(
    pair: Tuple[str, str], aerial_altitude: float, rule: Optional[LinkStateRule]
) -> LinkState:
    """Resolve the binary link state of `pair` at the aerial endpoint's altitude.

    LoS iff altitude >= rule.min_altitude_for_los, else the rule's fallback.
    A missing rule (None) or a rule for a different pair is a configuration
    error: every configured link must carry exactly one rule.
    """
    if rule is None:
        raise ConfigurationError(f"no link-state rule for pair {pair}")
    if not rule.matches(pair):
        raise ConfigurationError(
            f"rule for {rule.endpoints} does not apply to pair {_normalize_pair(pair)}"
        )
    if aerial_altitude >= rule.min_altitude_for_los:
        return LinkState.LOS
    return rule.fallback_state


def rate_bps_hz(snr: ArrayLike, time_fraction: ArrayLike = 1.0) -> ArrayLike:
    """Shannon spectral efficiency: time_fraction * log2(1 + snr), in bps/Hz."""
    snr_arr = np.asarray(snr, dtype=float)
    frac_arr = np.asarray(time_fraction, dtype=float)
    if np.any(snr_arr < 0):
        raise ValueError("snr must be >= 0")
    if np.any((frac_arr < 0) | (frac_arr > 1)):
        raise ValueError("time_fraction must lie in [0, 1]")
    rate = frac_arr * np.log2(1.0 + snr_arr)
    if np.isscalar(snr) and np.isscalar(time_fraction):
        return float(rate)
    return rate
