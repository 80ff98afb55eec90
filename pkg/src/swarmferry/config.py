"""Scenario configuration: defaults, validation, and flat-JSON round-tripping.

A scenario file is one flat JSON object whose keys are exactly the
ScenarioConfig field names.  Unknown keys are an error, missing keys take
the defaults below.  `mobility_source` accepts either a bare kind string
("RWP") or an object {"kind": ..., <params>}; it is always written back
in the full object form so dump(load(x)) is a fixed point.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields
from enum import Enum
from typing import Any


class ConfigError(ValueError):
    """Raised for malformed or inconsistent scenario configuration."""


class RotationMode(str, Enum):
    TSP = "TSP"
    BINARY_JUMPING = "BinaryJumping"
    CIRCULAR = "Circular"
    RWP_HEURISTIC = "RWPHeuristic"
    NO_UAV = "NoUAV"


@dataclass(frozen=True)
class RwpSource:
    """Random-waypoint ground users."""

    v_min: float = 1.0
    v_max: float = 5.0
    max_pause: float = 1800.0

    kind = "RWP"


@dataclass(frozen=True)
class GaussianClustersSource:
    """Users in Gaussian blobs around centers on a circle, optionally rotating."""

    n_clusters: int = 8
    sigma: float = 200.0
    angular_speed: float = 0.0  # rad/s of the center carousel
    center_radius: float = 3000.0

    kind = "GaussianClusters"


@dataclass(frozen=True)
class TraceSource:
    """Positions replayed from a waypoint trace file."""

    path: str = ""
    shift_x: float = -4000.0
    shift_y: float = -4000.0

    kind = "TraceFile"


MobilitySource = RwpSource | GaussianClustersSource | TraceSource

_SOURCE_KINDS = {
    "RWP": RwpSource,
    "GaussianClusters": GaussianClustersSource,
    "TraceFile": TraceSource,
}


def _source_from_json(value: Any) -> MobilitySource:
    if isinstance(value, str):
        if value not in _SOURCE_KINDS:
            raise ConfigError(f"unknown mobility_source kind {value!r}")
        if value == "TraceFile":
            raise ConfigError("TraceFile mobility_source requires a path")
        return _SOURCE_KINDS[value]()
    if isinstance(value, dict):
        d = dict(value)
        kind = d.pop("kind", None)
        if kind not in _SOURCE_KINDS:
            raise ConfigError(f"unknown mobility_source kind {kind!r}")
        cls = _SOURCE_KINDS[kind]
        allowed = {f.name for f in fields(cls)}
        unknown = set(d) - allowed
        if unknown:
            raise ConfigError(f"unknown mobility_source keys {sorted(unknown)}")
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc
    raise ConfigError("mobility_source must be a kind string or an object")


def _source_to_json(src: MobilitySource) -> dict:
    out = {"kind": src.kind}
    out.update(asdict(src))
    return out


@dataclass
class ScenarioConfig:
    """Everything a run needs; defaults reproduce the reference desk scenario."""

    area_half_width: float = 4000.0
    uav_speed: float = 20.0
    step: int = 10
    rotation_interval: int = 60
    total_time: int = 43200
    n_uavs: int = 10
    n_users: int = 100
    uav_capacity: int = 13
    cell_range: float = 1000.0
    am_iterations: int = 4
    ga_iterations: int = 100
    ga_population: int = 100
    ga_crossover_prob: float = 0.8
    ga_mutation_prob: float = 0.4
    dtn_range: float = 100.0
    dtn_speed: int = 6570 * 1024
    dtn_buffer: int = 20 * 1024 * 1024
    dtn_msg_interval: int = 10
    dtn_msg_size: int = 25 * 1024
    dtn_ttl: int = 18000
    rotation_mode: RotationMode = RotationMode.TSP
    mobility_source: MobilitySource = field(default_factory=RwpSource)
    idealized_clusters: bool = False
    seed: int = 0

    @property
    def capacity_ratio(self) -> float:
        return self.n_uavs * self.uav_capacity / self.n_users

    @property
    def n_epochs(self) -> int:
        return self.total_time // self.step

    def validate(self) -> None:
        c = self
        positive = [
            ("area_half_width", c.area_half_width), ("uav_speed", c.uav_speed),
            ("step", c.step), ("rotation_interval", c.rotation_interval),
            ("total_time", c.total_time), ("n_uavs", c.n_uavs),
            ("n_users", c.n_users), ("uav_capacity", c.uav_capacity),
            ("cell_range", c.cell_range), ("am_iterations", c.am_iterations),
            ("ga_iterations", c.ga_iterations), ("ga_population", c.ga_population),
            ("dtn_range", c.dtn_range), ("dtn_speed", c.dtn_speed),
            ("dtn_buffer", c.dtn_buffer), ("dtn_msg_interval", c.dtn_msg_interval),
            ("dtn_msg_size", c.dtn_msg_size), ("dtn_ttl", c.dtn_ttl),
        ]
        for name, value in positive:
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                raise ConfigError(f"{name} must be a positive finite number, got {value!r}")
        for name in ("step", "rotation_interval", "total_time", "n_uavs", "n_users",
                     "uav_capacity", "am_iterations", "ga_iterations", "ga_population",
                     "dtn_msg_interval", "dtn_ttl"):
            if not isinstance(getattr(c, name), int):
                raise ConfigError(f"{name} must be an integer")
        for name, value in [("ga_crossover_prob", c.ga_crossover_prob),
                            ("ga_mutation_prob", c.ga_mutation_prob)]:
            if not (0.0 <= value <= 1.0):
                raise ConfigError(f"{name} must be in [0, 1], got {value!r}")
        if c.rotation_interval % c.step != 0:
            raise ConfigError("rotation_interval must be a multiple of step")
        if c.total_time % c.step != 0:
            raise ConfigError("total_time must be a multiple of step")
        if c.ga_population % 2 != 0:
            raise ConfigError("ga_population must be even")
        if not isinstance(c.rotation_mode, RotationMode):
            raise ConfigError(f"bad rotation_mode {c.rotation_mode!r}")
        if not isinstance(c.mobility_source, (RwpSource, GaussianClustersSource, TraceSource)):
            raise ConfigError("bad mobility_source")
        if isinstance(c.mobility_source, TraceSource) and not c.mobility_source.path:
            raise ConfigError("TraceFile mobility_source requires a path")
        if not isinstance(c.seed, int):
            raise ConfigError("seed must be an integer")

    # -- JSON round trip ---------------------------------------------------

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        kwargs = dict(data)
        if "rotation_mode" in kwargs:
            try:
                kwargs["rotation_mode"] = RotationMode(kwargs["rotation_mode"])
            except ValueError as exc:
                raise ConfigError(str(exc)) from exc
        if "mobility_source" in kwargs:
            kwargs["mobility_source"] = _source_from_json(kwargs["mobility_source"])
        cfg = cls(**kwargs)
        cfg.validate()
        return cfg

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            value = getattr(self, f.name)
            if f.name == "rotation_mode":
                value = value.value
            elif f.name == "mobility_source":
                value = _source_to_json(value)
            out[f.name] = value
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "ScenarioConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_dict(data)

    @classmethod
    def load(cls, path: str) -> "ScenarioConfig":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_json(fh.read())


def apply_override(data: dict, key: str, raw: str) -> None:
    """Apply one --set key=value override onto a config dict in place.

    Values parse as JSON when possible, else as bare strings.  Keys of the
    form mobility_source.<field> reach into the source object; setting
    mobility_source.kind resets the other source fields to that kind's
    defaults.
    """
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    if key.startswith("mobility_source."):
        sub = key.split(".", 1)[1]
        src = data.get("mobility_source", "RWP")
        src = _source_to_json(_source_from_json(src))
        if sub == "kind":
            if value not in _SOURCE_KINDS:
                raise ConfigError(f"unknown mobility_source kind {value!r}")
            src = {"kind": value}
            src.update(asdict(_SOURCE_KINDS[value]()))
        else:
            src[sub] = value
        data["mobility_source"] = src
    else:
        data[key] = value
