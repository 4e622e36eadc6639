"""Replanning loop: observe, project, search, pick the next target lane."""
from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from typing import Mapping, Optional

from .config import PlannerConfig
from .cost import CostModel, CostWeights, PredictedTraffic
from .frame import ProjectedScene, WorldState, project_scene, rotate
from .graph import build_lattice
from .prediction import (
    AccelerationBelief,
    ConstantVelocity,
    Observation,
    PredictionModel,
    TrajectoryHistory,
    entropy,
    update_belief,
)
from .search import Path, extended_astar


@dataclass(frozen=True)
class SelectorState:
    prev_target_lat: Optional[float] = None  # rotated-frame lateral of the last chosen lane center
    beliefs: Mapping[int, AccelerationBelief] = field(default_factory=dict)
    history: Mapping[int, TrajectoryHistory] = field(default_factory=dict)


@dataclass(frozen=True)
class LaneDecision:
    target_lane_index: int
    target_lane_lat: float
    path: Optional[Path]
    planning_time: float  # seconds, wall clock
    current_lane: int
    delta: float = 0.0


def target_from_path(path: Path, current_lane: Optional[int] = None) -> int:
    if len(path.nodes) < 2:
        return path.nodes[0].lane if current_lane is None else current_lane
    return path.nodes[1].lane


def observe(world: WorldState, state: SelectorState, history_len: int = 10) -> SelectorState:
    """Fold one snapshot of the surrounding vehicles into histories and beliefs.

    Histories are kept in the road frame (longitudinal, meters right of the
    leftmost lane center) so they stay valid as the ego moves.  Accelerations are
    finite differences of consecutive observed speeds.
    """
    psi = world.road_angle
    lane1 = world.lanes.centerline_offsets[0]
    beliefs = dict(state.beliefs)
    history = {}
    for veh in world.others:
        xr, yr = rotate(veh.x, veh.y, psi)
        prev = state.history.get(veh.id)
        ob = Observation(world.time_now, xr, yr - lane1, veh.v, veh.heading, veh.accel)
        if prev is not None and len(prev) and prev.latest.t >= world.time_now:
            history[veh.id] = prev
            continue
        if prev is not None and len(prev):
            last = prev.latest
            accel = (veh.v - last.v) / (world.time_now - last.t)
            ob = ob._replace(accel=accel)
            beliefs[veh.id] = update_belief(beliefs.get(veh.id) or AccelerationBelief.prior(), accel)
            history[veh.id] = prev.extended(ob) if prev.n_past == history_len else TrajectoryHistory(history_len, [*prev, ob])
        else:
            if veh.id not in beliefs:
                beliefs[veh.id] = AccelerationBelief.prior()
            history[veh.id] = TrajectoryHistory.single(ob, history_len)
    return replace(state, beliefs=beliefs, history=history)


def plan(world: WorldState, state: SelectorState, weights: CostWeights, config: PlannerConfig,
         desired_speed: float, predictor: Optional[PredictionModel] = None):
    """Project and search without touching selector state.  Returns (scene, lattice, cost model, path)."""
    scene = project_scene(world, state.prev_target_lat)
    v_plan = scene.ego_speed if config.lattice_speed == "current" else desired_speed
    lattice = build_lattice(scene, v_plan, config.plan_dt, config.horizon, config.v_floor)

    # histories live in the road frame; predictions are read relative to the ego
    ex = scene.ego_rotated[0]
    ids = {veh.id for veh in world.others}
    hist = {vid: h for vid, h in state.history.items() if vid in ids and len(h)}
    for o in scene.others:
        if o.id not in hist:
            hist[o.id] = TrajectoryHistory.single(Observation(world.time_now, o.x + ex, o.y, o.v, o.heading, o.accel))
    prior_h = entropy(AccelerationBelief.prior())
    ent = {vid: entropy(state.beliefs[vid]) if vid in state.beliefs else prior_h for vid in hist}
    traffic = PredictedTraffic(hist, ent, scene.lane_count, scene.lane_width, predictor or ConstantVelocity(),
                               origin=(ex, 0.0))

    v_ref = desired_speed if config.slowdown_reference == "desired" else max(v_plan, config.v_floor)
    cost_model = CostModel(lattice, scene, traffic, weights, v_travel=max(v_plan, config.v_floor), v_desired=v_ref)
    return scene, lattice, cost_model, extended_astar(lattice, cost_model)


def select_lane(world: WorldState, state: SelectorState, weights: CostWeights,
                config: PlannerConfig = PlannerConfig(), desired_speed: float = 15.0,
                predictor: Optional[PredictionModel] = None) -> tuple[LaneDecision, SelectorState]:
    t0 = time.perf_counter()
    state = observe(world, state, config.history_len)
    scene, _, _, path = plan(world, state, weights, config, desired_speed, predictor)
    target = target_from_path(path, scene.ego_lane_index)
    target_lat = world.lanes.centerline_offsets[target - 1]
    decision = LaneDecision(
        target_lane_index=target,
        target_lane_lat=target_lat,
        path=path,
        planning_time=time.perf_counter() - t0,
        current_lane=scene.ego_lane_index,
        delta=scene.ego_offset_delta,
    )
    return decision, replace(state, prev_target_lat=target_lat)


class LaneSelector:
    """Stateful wrapper owning one ego's switching memory, histories and beliefs."""

    name = "easter"

    def __init__(self, weights: CostWeights = CostWeights(), config: PlannerConfig = PlannerConfig(),
                 desired_speed: float = 15.0, predictor: Optional[PredictionModel] = None,
                 beliefs: Optional[Mapping[int, AccelerationBelief]] = None):
        self.weights = weights
        self.config = config
        self.desired_speed = desired_speed
        self.predictor = predictor
        self.state = SelectorState(beliefs=dict(beliefs or {}))

    def decide(self, world: WorldState) -> LaneDecision:
        decision, self.state = select_lane(world, self.state, self.weights, self.config,
                                           self.desired_speed, self.predictor)
        return decision
