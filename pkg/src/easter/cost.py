"""Edge costs for the lane lattice: control effort, travel time, risk, switching, goal distance.

All risk terms are evaluated against predicted positions of the surrounding
vehicles at the transition time of the node being entered.
"""
from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, fields, replace
from typing import Mapping, NamedTuple, Optional

from .errors import ConfigError
from .frame import ProjectedScene
from .graph import V_FLOOR, Lattice, Node
from .prediction import ConstantVelocity, Observation, PredictionModel, TrajectoryHistory

log = logging.getLogger(__name__)

SLOWDOWN_MODELS = ("literal", "time_loss")


@dataclass(frozen=True)
class CostWeights:
    lambda_lng: float = 1.0
    lambda_lat: float = 15.0
    lambda_time: float = 20.0
    lambda_adj: float = 6.0
    lambda_uncert: float = 6.0
    lambda_switch: float = 7.0
    lambda_goal_scale: float = 10.0
    d_floor: float = 10.0
    d_clamp: float = 0.5
    detection_range: float = 50.0
    slowdown_model: str = "literal"

    def __post_init__(self):
        for f in fields(self):
            val = getattr(self, f.name)
            if f.name == "slowdown_model":
                if val not in SLOWDOWN_MODELS:
                    raise ConfigError(f"slowdown_model must be one of {SLOWDOWN_MODELS}, got {val!r}")
            elif not (isinstance(val, (int, float)) and math.isfinite(val) and val >= 0):
                raise ConfigError(f"weight {f.name} must be a finite number >= 0, got {val!r}")
        if self.d_floor <= 0 or self.d_clamp <= 0:
            raise ConfigError("d_floor and d_clamp must be > 0")
        if self.lambda_lat <= self.lambda_lng and self.lambda_lat > 0:
            log.warning("lambda_lat (%g) <= lambda_lng (%g): lane changes are cheap", self.lambda_lat, self.lambda_lng)

    @classmethod
    def from_dict(cls, d: Mapping) -> "CostWeights":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown weight field(s): {sorted(unknown)}")
        return cls(**d)

    def to_dict(self) -> dict:
        return asdict(self)

    def scaled(self, k: float) -> "CostWeights":
        """Every cost weight multiplied by ``k`` (geometry parameters untouched)."""
        names = ("lambda_lng", "lambda_lat", "lambda_time", "lambda_adj", "lambda_uncert",
                 "lambda_switch", "lambda_goal_scale")
        return replace(self, **{n: getattr(self, n) * k for n in names})


class CostBreakdown(NamedTuple):
    control: float = 0.0
    time: float = 0.0
    risk_adjacency: float = 0.0
    risk_uncertainty: float = 0.0
    switching: float = 0.0
    goal_distance: float = 0.0
    heuristic: float = 0.0  # reported alongside, not part of the step cost

    @property
    def total(self) -> float:
        return (self.control + self.time + self.risk_adjacency + self.risk_uncertainty
                + self.switching + self.goal_distance)


# -- individual terms ---------------------------------------------------------

def control_cost(lattice: Lattice, n0: Node, n: Node, weights: CostWeights) -> float:
    d = lattice.distance(n0, n)
    theta = math.atan(lattice.lane_width / d) if n.lane != n0.lane else 0.0
    return weights.lambda_lng * abs(d * math.cos(theta)) + weights.lambda_lat * abs(d * math.sin(theta))


def travel_time(lattice: Lattice, n0: Node, n: Node, v: float) -> float:
    return lattice.distance(n0, n) / v


def additional_time(d: float, v: float, v_front: Optional[float], model: str = "literal") -> float:
    """Delay charged for a slower vehicle ahead over a transition of length ``d``.

    ``literal`` charges (v - v_front)+ / d; ``time_loss`` charges the extra seconds
    needed to cover ``d`` at the front vehicle's speed.
    """
    if v_front is None or v_front >= v:
        return 0.0
    if model == "literal":
        return (v - v_front) / d
    return d * (1.0 / max(v_front, V_FLOOR) - 1.0 / v)


def time_cost(t: float, t_add: float, weights: CostWeights) -> float:
    return weights.lambda_time * (t + t_add)


def _inv_sq(d2: float, d_clamp: float) -> float:
    return 1.0 / max(d2, d_clamp * d_clamp)


def adjacency_risk(node_xy: tuple[float, float], same_lane: list, weights: CostWeights) -> float:
    """``same_lane`` holds predicted (x, y, v, entropy) tuples of vehicles in the node's lane."""
    nx, ny = node_xy
    s = 0.0
    for x, y, _, _ in same_lane:
        s += _inv_sq((x - nx) ** 2 + (y - ny) ** 2, weights.d_clamp)
    return weights.lambda_adj * s


def uncertainty_risk(node_xy: tuple[float, float], same_lane: list, weights: CostWeights) -> float:
    nx, ny = node_xy
    s = 0.0
    for x, y, _, h in same_lane:
        s += h * _inv_sq((x - nx) ** 2 + (y - ny) ** 2, weights.d_clamp)
    return weights.lambda_uncert * s


def front_vehicle_speed(node_x: float, same_lane: list, detection_range: float) -> Optional[float]:
    """Speed of the nearest predicted vehicle strictly ahead of the node within range."""
    best, best_gap = None, detection_range
    for x, _, v, _ in same_lane:
        gap = x - node_x
        if 0.0 < gap <= best_gap:
            best, best_gap = v, gap
    return best


def switching_cost(node_lat: float, prev_target_lat: Optional[float], delta: float,
                   lane_width: float, weights: CostWeights) -> float:
    if prev_target_lat is None:
        return 0.0
    dyn_weight = weights.lambda_switch * abs(delta) / lane_width
    return dyn_weight * abs(node_lat - prev_target_lat)


def goal_weight(ego_xy: tuple[float, float], goal: tuple[float, float], weights: CostWeights) -> float:
    d = math.hypot(goal[0] - ego_xy[0], goal[1] - ego_xy[1])
    return weights.lambda_goal_scale / max(d, weights.d_floor)


def heuristic(node_xy: tuple[float, float], goal: tuple[float, float], lambda_goal: float) -> float:
    if lambda_goal == 0.0:
        return 0.0
    return lambda_goal * math.hypot(goal[0] - node_xy[0], goal[1] - node_xy[1])


# -- predicted traffic --------------------------------------------------------

class PredictedTraffic:
    """Surrounding vehicles predicted at arbitrary times, bucketed by lane.

    Lane membership snaps the predicted lateral position to the nearest lane
    center (ties to the left).  Results are memoized per query time.  Predicted
    positions are reported relative to ``origin``, so histories kept in another
    frame need not be copied.
    """

    def __init__(self, histories: Mapping[int, TrajectoryHistory], entropies: Mapping[int, float],
                 n_lanes: int, lane_width: float, predictor: Optional[PredictionModel] = None,
                 origin: tuple[float, float] = (0.0, 0.0)):
        self.histories = dict(histories)
        self.origin = origin
        self.entropies = {vid: entropies.get(vid, 0.0) for vid in self.histories}
        self.n_lanes = n_lanes
        self.lane_width = lane_width
        self.predictor = predictor if predictor is not None else ConstantVelocity()
        self._cache: dict[float, list[list]] = {}
        self._linear: Optional[list] = None

    @classmethod
    def from_scene(cls, scene: ProjectedScene, entropies: Mapping[int, float] | None = None,
                   predictor: Optional[PredictionModel] = None) -> "PredictedTraffic":
        hist = {
            o.id: TrajectoryHistory.single(Observation(scene.time_now, o.x, o.y, o.v, o.heading, o.accel))
            for o in scene.others
        }
        return cls(hist, entropies or {}, scene.lane_count, scene.lane_width, predictor)

    def lane_of(self, y: float) -> int:
        k = math.ceil(y / self.lane_width - 0.5)
        return min(max(k, 0), self.n_lanes - 1) + 1

    def _build_linear(self) -> None:
        # vehicles without lateral motion never change lane, so bucket them once
        ox, oy = self.origin
        static: dict[int, list] = {}
        moving = []
        for vid, hist in self.histories.items():
            ob = hist.latest
            vx, vy = ob.v * math.cos(ob.heading), ob.v * math.sin(ob.heading)
            x0, y0, h = ob.x - ox, ob.y - oy, self.entropies[vid]
            if vy == 0.0:
                static.setdefault(self.lane_of(y0), []).append((x0, y0, vx, ob.v, h))
            else:
                moving.append((x0, y0, vx, vy, ob.v, h))
        self._linear = (sorted(static.items()), moving)

    def at(self, t: float) -> list[list]:
        """Index ``[lane]`` (1-based; slot 0 unused) -> list of (x, y, v, entropy)."""
        hit = self._cache.get(t)
        if hit is not None:
            return hit
        lanes: list[list] = [[] for _ in range(self.n_lanes + 1)]
        if isinstance(self.predictor, ConstantVelocity):
            if t < 0:
                raise ValueError(f"prediction time must be >= 0, got {t}")
            if self._linear is None:
                self._build_linear()
            static, moving = self._linear
            for k, members in static:
                lanes[k] = [(x0 + vx * t, y0, v, h) for x0, y0, vx, v, h in members]
            w, top = self.lane_width, self.n_lanes - 1
            for x0, y0, vx, vy, v, h in moving:
                y = y0 + vy * t
                k = math.ceil(y / w - 0.5)
                k = 0 if k < 0 else (top if k > top else k)
                lanes[k + 1].append((x0 + vx * t, y, v, h))
        else:
            predict = self.predictor.predict
            ox, oy = self.origin
            for vid, hist in self.histories.items():
                x, y = predict(hist, t)
                x, y = x - ox, y - oy
                lanes[self.lane_of(y)].append((x, y, hist.latest.v, self.entropies[vid]))
        self._cache[t] = lanes
        return lanes


# -- composed step cost -------------------------------------------------------

class CostModel:
    """Step cost g(n | n0) and heuristic h(n) for one planning cycle.

    ``v_travel`` is the speed the lattice was built with and sets transition
    times; ``v_desired`` is the speed the ego would like to hold and is what a
    slower front vehicle is compared against.
    """

    def __init__(self, lattice: Lattice, scene: ProjectedScene, traffic: PredictedTraffic,
                 weights: CostWeights, v_travel: float, v_desired: Optional[float] = None,
                 lambda_goal: Optional[float] = None):
        self.lattice = lattice
        self.scene = scene
        self.traffic = traffic
        self.weights = weights
        self.v_travel = max(v_travel, V_FLOOR)
        self.v_desired = self.v_travel if v_desired is None else v_desired
        self.goal = scene.goal
        start_xy = lattice.position(lattice.start)
        self.lambda_goal = goal_weight(start_xy, self.goal, weights) if lambda_goal is None else lambda_goal
        self._t_keep = lattice.dx / self.v_travel
        self._t_change = math.hypot(lattice.dx, lattice.lane_width) / self.v_travel
        # per-edge geometry depends only on whether the lane changes
        keep, change = Node(0, 1), Node(1, 2)
        self._edge = {
            False: (lattice.dx, control_cost(lattice, keep, Node(1, 1), weights)),
            True: (math.hypot(lattice.dx, lattice.lane_width), control_cost(lattice, keep, change, weights)),
        }
        self._h: dict[Node, float] = {}
        self._switch: dict[int, float] = {}  # switching cost depends only on the lane entered

    def h(self, n: Node) -> float:
        val = self._h.get(n)
        if val is None:
            val = self._h[n] = heuristic(self.lattice.position(n), self.goal, self.lambda_goal)
        return val

    def arrival_time(self, column: int, lane_changes: int) -> float:
        """Transition time to a node ``column`` steps ahead reached with ``lane_changes`` changes.

        Equals the running sum of edge travel times along any such path; computing
        it in closed form gives every path with the same count the same float.
        """
        return (column - lane_changes) * self._t_keep + lane_changes * self._t_change

    def step(self, n0: Node, n: Node, t0: float, t_n: Optional[float] = None) -> tuple[float, CostBreakdown, float]:
        """Cost of entering ``n`` from ``n0`` when ``n0`` was reached at ``t0``.

        ``t_n`` may be passed when the arrival time at ``n`` is already known.
        Returns (cost, breakdown, t_n).  Same result as composing the module-level
        term functions, with the vehicle scans fused into one loop.
        """
        lat, w = self.lattice, self.weights
        d, control = self._edge[n.lane != n0.lane]
        t = d / self.v_travel
        if t_n is None:
            t_n = t0 + t
        nx, ny = n.column * lat.dx, (n.lane - 1) * lat.lane_width

        clamp2 = w.d_clamp * w.d_clamp
        adj = unc = 0.0
        v_front, best_gap = None, w.detection_range
        lanes = self.traffic._cache.get(t_n)
        if lanes is None:
            lanes = self.traffic.at(t_n)
        for x, y, v, ent in lanes[n.lane]:
            dx = x - nx
            d2 = dx * dx + (y - ny) ** 2
            inv = 1.0 / (d2 if d2 > clamp2 else clamp2)
            adj += inv
            unc += ent * inv
            if 0.0 < dx <= best_gap:
                v_front, best_gap = v, dx
        t_add = additional_time(d, self.v_desired, v_front, w.slowdown_model)
        h = self.h(n)
        switch = self._switch.get(n.lane)
        if switch is None:
            switch = self._switch[n.lane] = switching_cost(
                ny, self.scene.prev_target_lat, self.scene.ego_offset_delta, lat.lane_width, w)

        br = CostBreakdown(
            control,
            w.lambda_time * (t + t_add),
            w.lambda_adj * adj,
            w.lambda_uncert * unc,
            switch,
            h,
            h,
        )
        return br.total, br, t_n
