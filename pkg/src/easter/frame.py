"""World-frame to lane-relative projection.

Positions are rotated so the road runs Eastbound, shifted so the ego sits at
longitudinal zero, and the ego's lateral position is snapped to its nearest
lane center.  Other vehicles keep a continuous lateral coordinate.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

from .errors import ConfigError


@dataclass(frozen=True)
class VehicleState:
    id: int
    x: float
    y: float
    v: float
    heading: float = 0.0  # relative to the road angle, positive toward increasing projected lateral
    accel: float = 0.0

    def __post_init__(self):
        if not self.v >= 0.0:
            raise ConfigError(f"vehicle {self.id}: speed must be >= 0, got {self.v}")
        if not math.isfinite(self.heading):
            raise ConfigError(f"vehicle {self.id}: heading must be finite")


@dataclass(frozen=True)
class LaneGeometry:
    """Lane center offsets in the rotated frame, leftmost lane first."""

    centerline_offsets: tuple[float, ...]
    width: Optional[float] = None  # only needed for a single-lane road

    def __post_init__(self):
        offs = tuple(float(o) for o in self.centerline_offsets)
        object.__setattr__(self, "centerline_offsets", offs)
        if not offs:
            raise ConfigError("lane geometry needs at least one lane")
        if len(offs) > 1:
            steps = [b - a for a, b in zip(offs, offs[1:])]
            if min(steps) <= 0:
                raise ConfigError("lane offsets must be strictly increasing")
            if max(steps) - min(steps) > 1e-9 * max(1.0, abs(steps[0])):
                raise ConfigError("lane offsets must be uniformly spaced")

    @classmethod
    def uniform(cls, n_lanes: int, lane_width: float, first: float = 0.0) -> "LaneGeometry":
        if n_lanes < 1 or lane_width <= 0:
            raise ConfigError("need n_lanes >= 1 and lane_width > 0")
        return cls(tuple(first + j * lane_width for j in range(n_lanes)), lane_width)

    @property
    def n_lanes(self) -> int:
        return len(self.centerline_offsets)

    @property
    def lane_width(self) -> float:
        offs = self.centerline_offsets
        if len(offs) > 1:
            return offs[1] - offs[0]
        return 3.5 if self.width is None else self.width


@dataclass(frozen=True)
class WorldState:
    ego: VehicleState
    others: tuple[VehicleState, ...]
    lanes: LaneGeometry
    road_angle: float
    goal: tuple[float, float]
    time_now: float = 0.0


@dataclass(frozen=True)
class ProjectedVehicle:
    id: int
    x: float  # meters ahead of the ego
    y_lanes: float  # lane widths from the leftmost lane center
    v: float
    heading: float
    accel: float
    lane_width: float

    @property
    def y(self) -> float:
        """Lateral position in meters from the leftmost lane center."""
        return self.y_lanes * self.lane_width


@dataclass(frozen=True)
class ProjectedScene:
    ego_lat: float
    ego_lane_index: int
    ego_offset_delta: float
    others: tuple[ProjectedVehicle, ...]
    lane_count: int
    lane_width: float
    ego_speed: float = 0.0
    ego_rotated: tuple[float, float] = (0.0, 0.0)
    goal: tuple[float, float] = (math.inf, 0.0)
    prev_target_lat: Optional[float] = None  # projected lateral of the previous target lane
    time_now: float = 0.0
    lane1_offset: float = 0.0  # rotated-frame lateral of the leftmost lane center

    @property
    def ego_lateral_exact(self) -> float:
        """Unsnapped ego lateral position in meters from the leftmost lane center."""
        return self.ego_rotated[1] - self.lane1_offset


def rotate(x: float, y: float, psi: float) -> tuple[float, float]:
    """Map a world position into the Eastbound road frame.

    The transform is its own inverse, so it also maps road-frame points back to
    the world.  Its lateral axis points to the right of the direction of travel.
    """
    c, s = math.cos(psi), math.sin(psi)
    return x * c + y * s, x * s - y * c


def nearest_lane(y_r: float, lane_offsets: Sequence[float]) -> int:
    """1-based index of the lane center closest to ``y_r``; ties go left."""
    if len(lane_offsets) == 0:
        raise ConfigError("empty lane list")
    best, best_d = 1, abs(lane_offsets[0] - y_r)
    for j, off in enumerate(lane_offsets[1:], start=2):
        d = abs(off - y_r)
        if d < best_d:
            best, best_d = j, d
    return best


def project_scene(world: WorldState, prev_target_lat: Optional[float] = None) -> ProjectedScene:
    """Project a world snapshot into the lane-relative search frame.

    ``prev_target_lat`` is the rotated-frame lateral offset of the lane chosen in
    the previous planning cycle, or None on the first cycle.
    """
    psi = world.road_angle
    offsets = world.lanes.centerline_offsets
    lane1 = offsets[0]
    width = world.lanes.lane_width

    ex, ey = rotate(world.ego.x, world.ego.y, psi)
    j_star = nearest_lane(ey, offsets)
    ego_lat = offsets[j_star - 1] - lane1

    others = []
    for veh in world.others:
        xr, yr = rotate(veh.x, veh.y, psi)
        others.append(
            ProjectedVehicle(
                id=veh.id,
                x=xr - ex,
                y_lanes=(yr - lane1) / width,
                v=veh.v,
                heading=veh.heading,
                accel=veh.accel,
                lane_width=width,
            )
        )

    gx, gy = rotate(world.goal[0], world.goal[1], psi)
    delta = 0.0 if prev_target_lat is None else ey - prev_target_lat
    return ProjectedScene(
        ego_lat=ego_lat,
        ego_lane_index=j_star,
        ego_offset_delta=delta,
        others=tuple(others),
        lane_count=len(offsets),
        lane_width=width,
        ego_speed=world.ego.v,
        ego_rotated=(ex, ey),
        goal=(gx - ex, gy - lane1),
        prev_target_lat=None if prev_target_lat is None else prev_target_lat - lane1,
        time_now=world.time_now,
        lane1_offset=lane1,
    )
