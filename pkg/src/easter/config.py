"""Scenario and planner configuration, loaded from JSON.

Validation errors are raised as ``ConfigError`` carrying the JSON path of the
offending field and, when it can be located, the line it sits on.
"""
from __future__ import annotations

import json
import math
import re
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Any, Optional

from .cost import CostWeights
from .errors import ConfigError

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class IdmParams:
    v0: float = 15.0
    a: float = 1.0
    b: float = 1.5
    T: float = 1.5
    s0: float = 2.0
    delta: float = 4.0
    b_max: float = 9.0  # emergency deceleration bound

    def __post_init__(self):
        for name in ("v0", "a", "b", "T", "s0", "b_max"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"idm.{name} must be > 0")
        if self.delta < 1:
            raise ConfigError("idm.delta must be >= 1")


@dataclass(frozen=True)
class MobilParams:
    politeness: float = 0.5
    accel_threshold: float = 0.1
    safe_decel: float = 4.0

    def __post_init__(self):
        if not 0.0 <= self.politeness <= 1.0:
            raise ConfigError("mobil.politeness must be in [0, 1]")
        if self.accel_threshold < 0 or self.safe_decel < 0:
            raise ConfigError("mobil thresholds must be >= 0")


@dataclass(frozen=True)
class PlannerConfig:
    horizon: int = 10
    plan_dt: float = 1.0
    v_floor: float = 1.0
    history_len: int = 10
    lattice_speed: str = "current"  # or "desired"
    slowdown_reference: str = "desired"  # speed a slower front vehicle is compared against

    def __post_init__(self):
        if self.horizon < 1:
            raise ConfigError("planner.horizon must be >= 1")
        if not self.plan_dt > 0 or not self.v_floor > 0:
            raise ConfigError("planner.plan_dt and planner.v_floor must be > 0")
        for name in ("lattice_speed", "slowdown_reference"):
            if getattr(self, name) not in ("current", "desired"):
                raise ConfigError(f"planner.{name} must be 'current' or 'desired'")


@dataclass(frozen=True)
class LaneTraffic:
    mean_speed: float
    density: float  # vehicles per 100 m
    mean_headway: float  # bumper-to-bumper gap, m
    speed_std: float = 0.5
    headway_std: float = 5.0
    volatile_fraction: float = 0.0
    volatility: float = 2.5  # half-range of the random acceleration of volatile vehicles


@dataclass(frozen=True)
class EgoSpawn:
    lane: int = 2
    speed: float = 5.0
    desired_speed: float = 15.0
    x: float = 0.0


@dataclass(frozen=True)
class PlacedVehicle:
    """Explicitly placed background vehicle (snapshot scenarios)."""

    lane: int
    x: float
    v: float
    v0: Optional[float] = None
    volatility: float = 0.0
    accel_history: tuple[float, ...] = ()


@dataclass(frozen=True)
class ScenarioConfig:
    n_lanes: int = 3
    lane_width: float = 3.5
    route_length: float = 230.0
    road_angle: float = 0.0
    exit_distance: float = 100_000.0
    lanes: tuple[LaneTraffic, ...] = ()
    ego: EgoSpawn = EgoSpawn()
    seed: int = 0
    dt: float = 0.1
    idm: IdmParams = IdmParams()
    mobil: MobilParams = MobilParams()
    weights: CostWeights = CostWeights()
    planner: PlannerConfig = PlannerConfig()
    vehicles: Optional[tuple[PlacedVehicle, ...]] = None
    name: str = "scenario"
    timeout: float = 300.0
    vehicle_length: float = 5.0
    lateral_rate: float = 1.17
    sensor_range: float = 100.0
    spawn_behind: float = 100.0
    spawn_ahead: float = 400.0
    ego_clearance: float = 12.0

    def __post_init__(self):
        if self.n_lanes < 1:
            raise ConfigError("n_lanes must be >= 1")
        if not self.lane_width > 0:
            raise ConfigError("lane_width must be > 0")
        if not self.route_length > 0:
            raise ConfigError("route_length must be > 0")
        if not self.dt > 0:
            raise ConfigError("dt must be > 0")
        if not 1 <= self.ego.lane <= self.n_lanes:
            raise ConfigError(f"ego.lane must be in 1..{self.n_lanes}")
        if self.vehicles is None and len(self.lanes) != self.n_lanes:
            raise ConfigError(f"lanes must list one traffic spec per lane ({self.n_lanes})")
        for j, lt in enumerate(self.lanes, start=1):
            _check_lane(j, lt, self.vehicle_length, self.idm.s0)
        for i, pv in enumerate(self.vehicles or ()):
            if not 1 <= pv.lane <= self.n_lanes:
                raise ConfigError(f"vehicles[{i}].lane must be in 1..{self.n_lanes}")
            if pv.v < 0:
                raise ConfigError(f"vehicles[{i}].v must be >= 0")

    def with_seed(self, seed: int) -> "ScenarioConfig":
        return replace(self, seed=seed)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["schema_version"] = SCHEMA_VERSION
        return d


def _check_lane(j: int, lt: LaneTraffic, length: float, s0: float) -> None:
    where = f"lanes[{j - 1}]"
    if lt.mean_speed < 0 or lt.density < 0 or lt.mean_headway < 0:
        raise ConfigError(f"{where}: speed, density and headway must be >= 0")
    if lt.speed_std < 0 or lt.headway_std < 0:
        raise ConfigError(f"{where}: standard deviations must be >= 0")
    if not 0.0 <= lt.volatile_fraction <= 1.0:
        raise ConfigError(f"{where}: volatile_fraction must be in [0, 1]")
    if lt.density == 0:
        return
    if lt.mean_headway < s0:
        raise ConfigError(f"{where}: mean_headway {lt.mean_headway} below the minimum gap {s0}")
    spacing = 100.0 / lt.density
    implied = lt.mean_headway + length
    if abs(spacing - implied) > 0.2 * spacing:
        raise ConfigError(
            f"{where}: density {lt.density} veh/100 m implies {spacing:.1f} m spacing, but headway "
            f"{lt.mean_headway} m + vehicle length {length} m gives {implied:.1f} m (more than 20% apart)"
        )


# -- JSON loading -------------------------------------------------------------

_SECTIONS = {
    "ego": EgoSpawn,
    "idm": IdmParams,
    "mobil": MobilParams,
    "planner": PlannerConfig,
}


def _build(cls, data: Any, path: str):
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected an object")
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"{path}: unknown field(s) {unknown}")
    try:
        return cls(**data)
    except TypeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def config_from_dict(data: dict) -> ScenarioConfig:
    if not isinstance(data, dict):
        raise ConfigError("scenario: top level must be an object")
    data = dict(data)
    version = data.pop("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigError(f"schema_version: unsupported version {version} (expected {SCHEMA_VERSION})")
    kwargs: dict[str, Any] = {}
    for key, val in data.items():
        if key in _SECTIONS:
            kwargs[key] = _build(_SECTIONS[key], val, key)
        elif key == "weights":
            try:
                kwargs[key] = CostWeights.from_dict(val)
            except (ConfigError, TypeError) as exc:
                raise ConfigError(f"weights: {exc}") from None
        elif key == "lanes":
            if not isinstance(val, list):
                raise ConfigError("lanes: expected a list")
            kwargs[key] = tuple(_build(LaneTraffic, v, f"lanes[{i}]") for i, v in enumerate(val))
        elif key == "vehicles":
            if val is None:
                continue
            if not isinstance(val, list):
                raise ConfigError("vehicles: expected a list")
            vehs = []
            for i, v in enumerate(val):
                v = dict(v) if isinstance(v, dict) else v
                if isinstance(v, dict) and "accel_history" in v:
                    v["accel_history"] = tuple(float(a) for a in v["accel_history"])
                vehs.append(_build(PlacedVehicle, v, f"vehicles[{i}]"))
            kwargs[key] = tuple(vehs)
        else:
            kwargs[key] = val
    known = {f.name for f in fields(ScenarioConfig)}
    unknown = sorted(set(kwargs) - known)
    if unknown:
        raise ConfigError(f"scenario: unknown field(s) {unknown}")
    for key, val in kwargs.items():
        if key in ("name",):
            continue
        if isinstance(val, (int, float)) and not isinstance(val, bool) and not math.isfinite(val):
            raise ConfigError(f"{key}: must be finite")
    return ScenarioConfig(**kwargs)


def _locate(text: str, message: str) -> Optional[int]:
    """Best-effort line number of the field named at the start of ``message``."""
    m = re.match(r"([A-Za-z_]+)(?:\[(\d+)\])?(?:\.([A-Za-z_0-9]+))?", message)
    if not m:
        return None
    key = m.group(3) or m.group(1)
    hit = re.search(r'"%s"\s*:' % re.escape(key), text)
    if not hit:
        return None
    return text.count("\n", 0, hit.start()) + 1


def load_config(path: str | Path) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read scenario ({exc.strerror})") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}") from None
    try:
        cfg = config_from_dict(data)
    except ConfigError as exc:
        line = _locate(text, str(exc))
        where = f"{path}:{line}" if line else str(path)
        raise ConfigError(f"{where}: {exc}") from None
    if cfg.name == "scenario":
        cfg = replace(cfg, name=path.stem)
    return cfg


def packaged_scenario(name: str) -> Path:
    """Path of a scenario file shipped with the package."""
    p = Path(__file__).parent / "scenarios" / f"{name}.json"
    if not p.exists():
        raise ConfigError(f"no packaged scenario named {name!r}")
    return p


__all__ = [
    "SCHEMA_VERSION", "IdmParams", "MobilParams", "PlannerConfig", "LaneTraffic", "EgoSpawn",
    "PlacedVehicle", "ScenarioConfig", "config_from_dict", "load_config", "packaged_scenario",
]
