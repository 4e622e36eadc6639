"""Deterministic kinematic highway simulator.

Straight multi-lane road; background vehicles follow IDM in their own lane and
never change lanes.  The ego follows IDM longitudinally and slides toward the
commanded lane center at a fixed lateral rate.  Integration is semi-implicit
Euler (speed first, then position).
"""
from __future__ import annotations

import csv
import json
import math
import random
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import NamedTuple, Optional, Union

from .config import SCHEMA_VERSION, IdmParams, ScenarioConfig
from .frame import LaneGeometry, VehicleState, WorldState, rotate
from .prediction import AccelerationBelief, update_belief

CSV_HEADER = ("t", "x", "y_lat", "lane", "v", "headway", "decision_lane", "plan_ms")
NOISE_HOLD = 1.0  # seconds a volatile vehicle keeps one random acceleration


def idm_accel(v: float, v_lead: Optional[float], gap: float, p: IdmParams) -> float:
    """IDM acceleration, bounded below by the emergency deceleration ``p.b_max``."""
    free = 1.0 - (v / p.v0) ** p.delta
    if v_lead is None:
        return max(p.a * free, -p.b_max)
    if gap <= 0.0:
        return -p.b_max
    s_star = p.s0 + v * p.T + v * (v - v_lead) / (2.0 * math.sqrt(p.a * p.b))
    return max(p.a * (free - (s_star / gap) ** 2), -p.b_max)


def equilibrium_gap(v: float, p: IdmParams) -> float:
    """Gap at which a follower matching its leader's speed ``v`` (< v0) has zero acceleration."""
    if not 0.0 <= v < p.v0:
        raise ValueError("equilibrium needs 0 <= v < v0")
    return (p.s0 + v * p.T) / math.sqrt(1.0 - (v / p.v0) ** p.delta)


class Car(NamedTuple):
    id: int
    lane: int
    s: float  # along-road position of the vehicle's front, m
    v: float
    v0: float
    accel: float = 0.0
    volatility: float = 0.0
    noise: float = 0.0
    noise_until: float = 0.0


class Ego(NamedTuple):
    s: float
    lat: float  # meters right of the leftmost lane center
    v: float
    desired_speed: float
    target_lane: int
    accel: float = 0.0


@dataclass(frozen=True)
class SimState:
    clock: float
    ego: Ego
    others: tuple[Car, ...]
    done: bool = False
    finish_time: Optional[float] = None
    min_background_gap: float = math.inf


# -- geometry helpers ---------------------------------------------------------

def lane_of(lat: float, lane_width: float, n_lanes: int) -> int:
    """Nearest lane (1-based) to a lateral offset; ties go left."""
    k = math.ceil(lat / lane_width - 0.5)
    return min(max(k, 0), n_lanes - 1) + 1


def ego_lanes(ego: Ego, cfg: ScenarioConfig) -> set[int]:
    """Lanes the ego body overlaps (a 1.8 m wide car)."""
    reach = cfg.lane_width / 2.0 + 0.9
    return {j for j in range(1, cfg.n_lanes + 1) if abs(ego.lat - (j - 1) * cfg.lane_width) < reach}


def _front_in_lane(s: float, lane: int, cars, length: float):
    best = None
    for c in cars:
        if c.lane == lane and c.s > s and (best is None or c.s < best.s):
            best = c
    return best


def headway(state: SimState, cfg: ScenarioConfig) -> float:
    """Bumper gap to the nearest vehicle ahead in the ego's current lane, capped at the detection range."""
    cap = cfg.weights.detection_range
    lane = lane_of(state.ego.lat, cfg.lane_width, cfg.n_lanes)
    front = _front_in_lane(state.ego.s, lane, state.others, cfg.vehicle_length)
    if front is None:
        return cap
    return min(max(front.s - state.ego.s - cfg.vehicle_length, 0.0), cap)


# -- spawning -----------------------------------------------------------------

def spawn_traffic(cfg: ScenarioConfig, rng: random.Random) -> SimState:
    ego = Ego(s=cfg.ego.x, lat=(cfg.ego.lane - 1) * cfg.lane_width, v=cfg.ego.speed,
              desired_speed=cfg.ego.desired_speed, target_lane=cfg.ego.lane)
    cars: list[Car] = []
    if cfg.vehicles is not None:
        for i, pv in enumerate(cfg.vehicles, start=1):
            v0 = max(pv.v, 0.1) if pv.v0 is None else pv.v0
            cars.append(Car(i, pv.lane, pv.x, pv.v, v0, volatility=pv.volatility))
        return SimState(0.0, ego, tuple(cars))

    length, s0 = cfg.vehicle_length, cfg.idm.s0
    lo, hi = ego.s - cfg.spawn_behind, ego.s + cfg.route_length + cfg.spawn_ahead
    next_id = 1
    for lane, lt in enumerate(cfg.lanes, start=1):
        if lt.density == 0:
            continue
        s = lo + rng.uniform(0.0, lt.mean_headway + length)
        while s < hi:
            v = max(0.0, rng.gauss(lt.mean_speed, lt.speed_std))
            vol = lt.volatility if rng.random() < lt.volatile_fraction else 0.0
            clear = lane == cfg.ego.lane and abs(s - ego.s) < cfg.ego_clearance + length
            if not clear:
                cars.append(Car(next_id, lane, s, v, max(lt.mean_speed, 0.1), volatility=vol))
                next_id += 1
            s += length + max(s0, rng.gauss(lt.mean_headway, lt.headway_std))
    return SimState(0.0, ego, tuple(cars))


def initial_beliefs(cfg: ScenarioConfig) -> dict[int, AccelerationBelief]:
    """Beliefs primed from the acceleration histories of placed vehicles."""
    out = {}
    for i, pv in enumerate(cfg.vehicles or (), start=1):
        b = AccelerationBelief.prior()
        for a in pv.accel_history:
            b = update_belief(b, a)
        out[i] = b
    return out


# -- integration --------------------------------------------------------------

def step(state: SimState, target_lane: int, cfg: ScenarioConfig, rng: random.Random) -> SimState:
    dt, length, idm = cfg.dt, cfg.vehicle_length, cfg.idm
    ego = state.ego
    occupied = ego_lanes(ego, cfg)

    by_lane: dict[int, list[Car]] = {}
    for c in state.others:
        by_lane.setdefault(c.lane, []).append(c)
    for cars in by_lane.values():
        cars.sort(key=lambda c: c.s)

    # IDM inlined with per-tick constants; idm_accel is the reference form
    a_max, b_max, T, s0, delta = idm.a, idm.b_max, idm.T, idm.s0, idm.delta
    two_sqrt_ab = 2.0 * math.sqrt(idm.a * idm.b)
    hold = 2.0  # volatile cars only add positive noise beyond this many equilibrium gaps
    new_cars: list[Car] = []
    min_gap = state.min_background_gap
    ego_s, ego_v = ego.s, ego.v
    for lane, cars in by_lane.items():
        near_ego = lane in occupied
        last = len(cars) - 1
        for i, c in enumerate(cars):
            v = c.v
            lead_v, gap = None, math.inf
            if i < last:
                lead = cars[i + 1]
                lead_v, gap = lead.v, lead.s - c.s - length
                if gap < min_gap:
                    min_gap = gap
            if near_ego and c.s < ego_s and ego_s - c.s - length < gap:
                lead_v, gap = ego_v, ego_s - c.s - length
            free = 1.0 - (v / c.v0) ** delta
            if lead_v is None:
                a = a_max * free
            elif gap <= 0.0:
                a = -b_max
            else:
                s_star = s0 + v * T + v * (v - lead_v) / two_sqrt_ab
                a = a_max * (free - (s_star / gap) ** 2)
            if a < -b_max:
                a = -b_max
            noise, until = c.noise, c.noise_until
            if c.volatility > 0.0:
                if state.clock >= until:
                    noise, until = rng.uniform(-c.volatility, c.volatility), state.clock + NOISE_HOLD
                # never accelerate into a close leader
                boost = noise if (noise < 0.0 or gap > hold * (s0 + v * T)) else 0.0
                a = max(a + boost, -b_max)
            v_new = v + a * dt
            v_new = 0.0 if v_new < 0.0 else min(v_new, 1.5 * c.v0)
            new_cars.append(Car(c.id, lane, c.s + v_new * dt, v_new, c.v0, (v_new - v) / dt,
                                c.volatility, noise, until))
    new_cars.sort(key=lambda c: c.id)

    # ego: follow the closest constraint among the lanes its body overlaps
    pe = replace(idm, v0=ego.desired_speed)
    a_e = idm_accel(ego.v, None, 0.0, pe)
    for lane in sorted(occupied):
        front = _front_in_lane(ego.s, lane, state.others, length)
        if front is not None:
            a_e = min(a_e, idm_accel(ego.v, front.v, front.s - ego.s - length, pe))
    v_e = max(ego.v + a_e * dt, 0.0)
    a_e = (v_e - ego.v) / dt
    s_e = ego.s + v_e * dt
    goal_lat = (target_lane - 1) * cfg.lane_width
    move = cfg.lateral_rate * dt
    lat = goal_lat if abs(goal_lat - ego.lat) <= move else ego.lat + math.copysign(move, goal_lat - ego.lat)
    new_ego = Ego(s_e, lat, v_e, ego.desired_speed, target_lane, a_e)

    clock = state.clock + dt
    done, finish = state.done, state.finish_time
    finish_line = cfg.ego.x + cfg.route_length
    if not done and s_e >= finish_line:
        done = True
        finish = state.clock + dt * (finish_line - ego.s) / (s_e - ego.s)
    return SimState(clock, new_ego, tuple(new_cars), done, finish, min_gap)


# -- observation for policies -------------------------------------------------

def lane_geometry(cfg: ScenarioConfig) -> LaneGeometry:
    return LaneGeometry.uniform(cfg.n_lanes, cfg.lane_width)


def world_view(state: SimState, cfg: ScenarioConfig) -> WorldState:
    """What the ego perceives: road-frame positions mapped into the world frame at the road angle."""
    psi = cfg.road_angle
    ego = state.ego
    ex, ey = rotate(ego.s, ego.lat, psi)
    others = []
    for c in state.others:
        if abs(c.s - ego.s) > cfg.sensor_range:
            continue
        x, y = rotate(c.s, (c.lane - 1) * cfg.lane_width, psi)
        others.append(VehicleState(c.id, x, y, c.v, 0.0, c.accel))
    goal = rotate(cfg.ego.x + cfg.exit_distance, (cfg.n_lanes - 1) * cfg.lane_width, psi)
    return WorldState(
        ego=VehicleState(0, ex, ey, ego.v, 0.0, ego.accel),
        others=tuple(others),
        lanes=lane_geometry(cfg),
        road_angle=psi,
        goal=goal,
        time_now=state.clock,
    )


# -- metrics ------------------------------------------------------------------

class Row(NamedTuple):
    t: float
    x: float
    y_lat: float
    lane: int
    v: float
    headway: float
    decision_lane: int
    plan_ms: float


@dataclass
class MetricsLog:
    policy: str
    scenario: str
    seed: int
    rows: list[Row] = field(default_factory=list)
    completed: bool = False
    travel_time: Optional[float] = None
    min_distance: float = math.inf
    min_background_gap: float = math.inf

    @property
    def mean_headway(self) -> float:
        return sum(r.headway for r in self.rows) / len(self.rows) if self.rows else float("nan")

    @property
    def lane_changes(self) -> int:
        return sum(1 for a, b in zip(self.rows, self.rows[1:]) if a.lane != b.lane)

    @property
    def lanes(self) -> list[int]:
        return [r.lane for r in self.rows]

    def plan_ms_stats(self) -> tuple[float, float]:
        ms = sorted(r.plan_ms for r in self.rows)
        if not ms:
            return 0.0, 0.0
        p99 = ms[min(len(ms) - 1, math.ceil(0.99 * len(ms)) - 1)]
        return sum(ms) / len(ms), p99

    def summary(self) -> dict:
        mean_ms, p99_ms = self.plan_ms_stats()
        return {
            "schema_version": SCHEMA_VERSION,
            "policy": self.policy,
            "scenario": self.scenario,
            "seed": self.seed,
            "status": "complete" if self.completed else "timeout",
            "completed": self.completed,
            "travel_time": self.travel_time,
            "mean_headway": self.mean_headway,
            "min_distance": self.min_distance,
            "min_background_gap": self.min_background_gap,
            "lane_changes": self.lane_changes,
            "final_lane": self.rows[-1].lane if self.rows else None,
            "ticks": len(self.rows),
            "plan_ms_mean": mean_ms,
            "plan_ms_p99": p99_ms,
        }

    def write_csv(self, path: Union[str, Path]) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_HEADER)
            for r in self.rows:
                w.writerow([f"{r.t:.3f}", f"{r.x:.6f}", f"{r.y_lat:.6f}", r.lane, f"{r.v:.6f}",
                            f"{r.headway:.6f}", r.decision_lane, f"{r.plan_ms:.4f}"])

    def write_summary(self, path: Union[str, Path]) -> None:
        with open(path, "w") as fh:
            json.dump(self.summary(), fh, indent=2, sort_keys=True)
            fh.write("\n")


# -- driver -------------------------------------------------------------------

def make_policy(name: str, cfg: ScenarioConfig):
    from .baselines import MobilPolicy, NoChangePolicy
    from .selector import LaneSelector

    if name == "easter":
        return LaneSelector(cfg.weights, cfg.planner, cfg.ego.desired_speed, beliefs=initial_beliefs(cfg))
    if name == "mobil":
        return MobilPolicy(replace(cfg.idm, v0=cfg.ego.desired_speed), cfg.mobil, cfg.vehicle_length)
    if name == "nochange":
        return NoChangePolicy()
    raise ValueError(f"unknown policy {name!r}")


POLICIES = ("easter", "mobil", "nochange")


def run(cfg: ScenarioConfig, policy: Union[str, object], timing: bool = True,
        state: Optional[SimState] = None) -> MetricsLog:
    rng = random.Random(cfg.seed)
    if state is None:
        state = spawn_traffic(cfg, rng)
    pol = make_policy(policy, cfg) if isinstance(policy, str) else policy
    log = MetricsLog(getattr(pol, "name", str(policy)), cfg.name, cfg.seed)
    n_max = int(round(cfg.timeout / cfg.dt))

    def record(st: SimState, decision_lane: int, plan_s: float):
        ego = st.ego
        best = log.min_distance
        for c in st.others:
            if abs(c.s - ego.s) < best:
                best = min(best, math.hypot(c.s - ego.s, (c.lane - 1) * cfg.lane_width - ego.lat))
        log.min_distance = best
        log.rows.append(Row(st.clock, ego.s - cfg.ego.x, ego.lat, lane_of(ego.lat, cfg.lane_width, cfg.n_lanes),
                            ego.v, headway(st, cfg), decision_lane, plan_s * 1e3 if timing else 0.0))

    for _ in range(n_max):
        decision = pol.decide(world_view(state, cfg))
        record(state, decision.target_lane_index, decision.planning_time)
        state = step(state, decision.target_lane_index, cfg, rng)
        if state.done:
            break
    log.completed = state.done
    log.travel_time = state.finish_time
    log.min_background_gap = state.min_background_gap
    return log
