"""Speed-scaled lane lattice the search runs on."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

from .errors import ConfigError
from .frame import ProjectedScene

DEFAULT_HORIZON = 10
DEFAULT_DT = 1.0
V_FLOOR = 1.0


class Node(NamedTuple):
    column: int
    lane: int  # 1-based, leftmost lane first


@dataclass(frozen=True)
class Lattice:
    n_lanes: int
    n_columns: int
    dx: float
    lane_width: float
    start: Node

    def __post_init__(self):
        if self.n_lanes < 1 or self.n_columns < 1:
            raise ConfigError("lattice needs at least one lane and one column")
        if not self.dx > 0:
            raise ConfigError("lattice step must be positive")

    def position(self, n: Node) -> tuple[float, float]:
        """Projected (longitudinal, lateral) position of a node in meters."""
        return n.column * self.dx, (n.lane - 1) * self.lane_width

    def distance(self, a: Node, b: Node) -> float:
        ax, ay = self.position(a)
        bx, by = self.position(b)
        return math.hypot(bx - ax, by - ay)

    def contains(self, n: Node) -> bool:
        return 0 <= n.column <= self.n_columns and 1 <= n.lane <= self.n_lanes

    def nodes(self):
        for c in range(self.n_columns + 1):
            for j in range(1, self.n_lanes + 1):
                yield Node(c, j)


def build_lattice(
    scene: ProjectedScene,
    ego_speed: float,
    dt: float = DEFAULT_DT,
    horizon: int = DEFAULT_HORIZON,
    v_floor: float = V_FLOOR,
) -> Lattice:
    if horizon < 1:
        raise ConfigError(f"horizon must be >= 1, got {horizon}")
    if not dt > 0:
        raise ConfigError(f"dt must be > 0, got {dt}")
    # every surrogate goal must be reachable with one lateral move per column
    horizon = max(horizon, scene.lane_count - 1)
    return Lattice(
        n_lanes=scene.lane_count,
        n_columns=horizon,
        dx=max(ego_speed, v_floor) * dt,
        lane_width=scene.lane_width,
        start=Node(0, scene.ego_lane_index),
    )


def successors(lattice: Lattice, n: Node) -> list[Node]:
    """Left change, keep, right change -- clipped to the road; none from the last column."""
    if n.column >= lattice.n_columns:
        return []
    c = n.column + 1
    return [Node(c, j) for j in (n.lane - 1, n.lane, n.lane + 1) if 1 <= j <= lattice.n_lanes]


def surrogate_goals(lattice: Lattice) -> frozenset[Node]:
    return frozenset(Node(lattice.n_columns, j) for j in range(1, lattice.n_lanes + 1))
