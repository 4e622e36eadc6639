"""Random scene generators and brute-force oracles shared by the test modules."""
from __future__ import annotations

import math
import random

from easter import cost as C
from easter.cost import CostModel, CostWeights, PredictedTraffic
from easter.frame import ProjectedScene, ProjectedVehicle
from easter.graph import Lattice, Node, successors
from easter.prediction import AccelerationBelief, entropy, predict_constant_velocity

LANE_W = 3.5


def random_scene(rng: random.Random, n_lanes=3, max_vehicles=8, lane_width=LANE_W):
    n_veh = rng.randint(0, max_vehicles)
    others = []
    for i in range(n_veh):
        y_m = rng.uniform(-0.4, n_lanes - 0.6) * lane_width
        others.append(ProjectedVehicle(
            id=i, x=rng.uniform(-20.0, 80.0), y_lanes=y_m / lane_width,
            v=rng.uniform(0.0, 15.0), heading=rng.uniform(-0.05, 0.05), accel=0.0,
            lane_width=lane_width))
    ego_lane = rng.randint(1, n_lanes)
    has_prev = rng.random() < 0.5
    prev = (rng.randint(1, n_lanes) - 1) * lane_width if has_prev else None
    delta = rng.uniform(-lane_width, lane_width) if has_prev else 0.0
    goal = (rng.uniform(20.0, 2000.0), rng.uniform(0, (n_lanes - 1) * lane_width))
    return ProjectedScene(
        ego_lat=(ego_lane - 1) * lane_width, ego_lane_index=ego_lane, ego_offset_delta=delta,
        others=tuple(others), lane_count=n_lanes, lane_width=lane_width,
        ego_speed=rng.uniform(2.0, 15.0), goal=goal, prev_target_lat=prev)


def random_entropies(rng: random.Random, scene: ProjectedScene) -> dict:
    out = {}
    for o in scene.others:
        b = AccelerationBelief.prior()
        counts = [1.0 + rng.randint(0, 20) for _ in range(b.n_bins)]
        out[o.id] = entropy(AccelerationBelief(b.edges, tuple(counts)))
    return out


def make_problem(scene: ProjectedScene, entropies=None, weights=None, horizon=5, dt=1.0, v_desired=15.0):
    weights = weights or CostWeights()
    v = max(scene.ego_speed, 1.0)
    lattice = Lattice(n_lanes=scene.lane_count, n_columns=horizon, dx=v * dt,
                      lane_width=scene.lane_width, start=Node(0, scene.ego_lane_index))
    traffic = PredictedTraffic.from_scene(scene, entropies or {})
    return lattice, CostModel(lattice, scene, traffic, weights, v_travel=v, v_desired=v_desired)


def reference_step(cm: CostModel, n0: Node, n: Node, t0: float):
    """Step cost composed from the standalone term functions; independent of the fused loop."""
    lat, w, scene = cm.lattice, cm.weights, cm.scene
    t = C.travel_time(lat, n0, n, cm.v_travel)
    t_n = t0 + t
    node_xy = lat.position(n)
    same_lane = []
    for o in scene.others:
        x, y = predict_constant_velocity(o, t_n)
        lane = min(max(math.ceil(y / lat.lane_width - 0.5), 0), lat.n_lanes - 1) + 1
        if lane == n.lane:
            same_lane.append((x, y, o.v, cm.traffic.entropies.get(o.id, 0.0)))
    v_front = C.front_vehicle_speed(node_xy[0], same_lane, w.detection_range)
    d = lat.distance(n0, n)
    terms = (
        C.control_cost(lat, n0, n, w),
        C.time_cost(t, C.additional_time(d, cm.v_desired, v_front, w.slowdown_model), w),
        C.adjacency_risk(node_xy, same_lane, w),
        C.uncertainty_risk(node_xy, same_lane, w),
        C.switching_cost(node_xy[1], scene.prev_target_lat, scene.ego_offset_delta, lat.lane_width, w),
        C.heuristic(node_xy, cm.goal, cm.lambda_goal),
    )
    return sum(terms), terms, t_n


def enumerate_min(lattice: Lattice, cost_model: CostModel, step=None):
    """Minimum total step cost over every start-to-last-column path, by exhaustive DFS.

    Arrival times are running sums of edge travel times.  ``step`` defaults to
    ``reference_step``.
    """
    step = step or (lambda n0, n, t: reference_step(cost_model, n0, n, t))
    best = [math.inf, None]

    def dfs(node, t, g, path):
        succ = successors(lattice, node)
        if not succ:
            if g < best[0]:
                best[0], best[1] = g, tuple(path)
            return
        for m in succ:
            c, _, t_m = step(node, m, t)
            path.append(m)
            dfs(m, t_m, g + c, path)
            path.pop()

    dfs(lattice.start, 0.0, 0.0, [lattice.start])
    return best[0], best[1]


def path_cost(cm: CostModel, nodes) -> float:
    """Accumulated step cost of a node sequence under canonical arrival times."""
    total, k = 0.0, 0
    for n0, n in zip(nodes, nodes[1:]):
        t0 = cm.arrival_time(n0.column, k)
        k += n.lane != n0.lane
        total += cm.step(n0, n, t0, cm.arrival_time(n.column, k))[0]
    return total
