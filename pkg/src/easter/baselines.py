"""Reference lane-selection policies: MOBIL and never changing lanes."""
from __future__ import annotations

import time
from dataclasses import replace
from typing import Optional

from .config import IdmParams, MobilParams
from .frame import ProjectedScene, WorldState, project_scene
from .selector import LaneDecision
from .sim import idm_accel, lane_of

VEHICLE_LENGTH = 5.0


def _lane_neighbors(scene: ProjectedScene, lane: int):
    """(leader, follower) around the ego's longitudinal position in ``lane``; None when absent."""
    leader = follower = None
    for o in scene.others:
        if _lane_of(scene, o.y) != lane:
            continue
        if o.x >= 0.0:
            if leader is None or o.x < leader.x:
                leader = o
        elif follower is None or o.x > follower.x:
            follower = o
    return leader, follower


def _lane_of(scene: ProjectedScene, y: float) -> int:
    return lane_of(y, scene.lane_width, scene.lane_count)


def _accel(v: float, leader_v: Optional[float], gap: Optional[float], p: IdmParams) -> float:
    if leader_v is None:
        return idm_accel(v, None, 0.0, p)
    return idm_accel(v, leader_v, gap, p)


def _follower_params(idm: IdmParams, v: float) -> IdmParams:
    # the ego cannot observe other drivers' desired speeds; assume they are content with their own
    return replace(idm, v0=max(v, 1.0))


def mobil_incentive(scene: ProjectedScene, target: int, idm: IdmParams, mobil: MobilParams,
                    length: float = VEHICLE_LENGTH) -> Optional[float]:
    """Politeness-weighted acceleration advantage of moving to ``target``; None if unsafe."""
    cur = scene.ego_lane_index
    ve = scene.ego_speed
    old_lead, old_fol = _lane_neighbors(scene, cur)
    new_lead, new_fol = _lane_neighbors(scene, target)

    def gap_ahead(lead, x_from=0.0):
        return None if lead is None else lead.x - x_from - length

    a_c = _accel(ve, old_lead and old_lead.v, gap_ahead(old_lead), idm)
    a_c_new = _accel(ve, new_lead and new_lead.v, gap_ahead(new_lead), idm)

    gain_n = 0.0
    if new_fol is not None:
        pf = _follower_params(idm, new_fol.v)
        a_n = _accel(new_fol.v, new_lead and new_lead.v, gap_ahead(new_lead, new_fol.x), pf)
        a_n_new = _accel(new_fol.v, ve, -new_fol.x - length, pf)
        if a_n_new < -mobil.safe_decel:
            return None
        gain_n = a_n_new - a_n
    if new_lead is not None and gap_ahead(new_lead) <= 0:
        return None  # would merge into a vehicle alongside

    gain_o = 0.0
    if old_fol is not None:
        pf = _follower_params(idm, old_fol.v)
        a_o = _accel(old_fol.v, ve, -old_fol.x - length, pf)
        a_o_new = _accel(old_fol.v, old_lead and old_lead.v, gap_ahead(old_lead, old_fol.x), pf)
        gain_o = a_o_new - a_o

    return a_c_new - a_c + mobil.politeness * (gain_n + gain_o)


def mobil_decide(scene: ProjectedScene, idm: IdmParams, mobil: MobilParams,
                 length: float = VEHICLE_LENGTH) -> int:
    """Adjacent lane with the largest incentive above threshold, else the current lane."""
    cur = scene.ego_lane_index
    best, best_gain = cur, mobil.accel_threshold
    for target in (cur - 1, cur + 1):  # left first so an exact tie goes left
        if not 1 <= target <= scene.lane_count:
            continue
        gain = mobil_incentive(scene, target, idm, mobil, length)
        if gain is not None and gain > best_gain:
            best, best_gain = target, gain
    return best


def nochange_decide(scene: ProjectedScene) -> int:
    return scene.ego_lane_index


class MobilPolicy:
    """MOBIL with a commitment: a started lane change is held until the ego is settled."""

    name = "mobil"

    def __init__(self, idm: IdmParams, mobil: MobilParams = MobilParams(), length: float = VEHICLE_LENGTH):
        self.idm = idm
        self.mobil = mobil
        self.length = length
        self._target: Optional[int] = None

    def decide(self, world: WorldState) -> LaneDecision:
        t0 = time.perf_counter()
        scene = project_scene(world)
        offsets = world.lanes.centerline_offsets
        lane = scene.ego_lane_index
        if self._target is not None:
            off_center = abs(scene.ego_lateral_exact - (self._target - 1) * scene.lane_width)
            if off_center >= 0.1 * scene.lane_width:
                lane = self._target
            else:
                self._target = None
        if self._target is None:
            lane = mobil_decide(scene, self.idm, self.mobil, self.length)
            if lane != scene.ego_lane_index:
                self._target = lane
        return LaneDecision(lane, offsets[lane - 1], None, time.perf_counter() - t0, scene.ego_lane_index)


class NoChangePolicy:
    name = "nochange"

    def decide(self, world: WorldState) -> LaneDecision:
        t0 = time.perf_counter()
        scene = project_scene(world)
        lane = nochange_decide(scene)
        return LaneDecision(lane, world.lanes.centerline_offsets[lane - 1], None,
                            time.perf_counter() - t0, lane)
