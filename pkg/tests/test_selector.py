import math
import random
from dataclasses import replace

import pytest

from easter.config import PlannerConfig, load_config, packaged_scenario
from easter.cost import CostWeights
from easter.frame import LaneGeometry, VehicleState, WorldState
from easter.graph import Node
from easter.search import Path
from easter.selector import LaneSelector, SelectorState, observe, select_lane, target_from_path
from easter.sim import run, spawn_traffic, step, world_view

LANES = LaneGeometry.uniform(3, 3.5)


def world(ego_lat=3.5, others=(), t=0.0, v=15.0):
    # world y is the negated road lateral at zero road angle
    return WorldState(VehicleState(0, 0.0, -ego_lat, v), tuple(others), LANES, 0.0, (5000.0, -3.5), t)


def path(*lanes):
    nodes = tuple(Node(i, l) for i, l in enumerate(lanes))
    return Path(nodes, 0.0, (), (0.0,) * len(lanes), nodes[-1])


def test_target_from_path():
    assert target_from_path(path(2, 1, 1)) == 1
    assert target_from_path(path(2, 2, 2)) == 2
    assert target_from_path(path(2, 3, 3)) == 3
    assert target_from_path(path(2), current_lane=2) == 2


def test_empty_road_keeps_lane_and_records_target():
    d, st = select_lane(world(), SelectorState(), CostWeights())
    assert d.target_lane_index == 2 and d.current_lane == 2
    assert [n.lane for n in d.path.nodes] == [2] * 11
    assert st.prev_target_lat == 3.5
    assert d.planning_time > 0.0


def test_blocked_lane_changes_one_lane_per_cycle():
    stopped = [VehicleState(i, 15.0 * i, -3.5, 0.0) for i in range(1, 6)]
    d, _ = select_lane(world(others=stopped), SelectorState(), CostWeights())
    assert abs(d.target_lane_index - 2) == 1


def test_observe_updates_beliefs_and_histories():
    a = VehicleState(7, 20.0, 0.0, 5.0)
    st = observe(world(others=[a], t=0.0), SelectorState())
    assert len(st.history[7]) == 1
    assert sum(st.beliefs[7].counts) == 7.0
    b = VehicleState(7, 20.5, 0.0, 5.2)
    st2 = observe(world(others=[b], t=0.1), st)
    assert len(st2.history[7]) == 2
    assert sum(st2.beliefs[7].counts) == 8.0
    assert st2.history[7].latest.accel == pytest.approx(2.0)
    # a repeated timestamp is ignored
    st3 = observe(world(others=[b], t=0.1), st2)
    assert st3.beliefs[7].counts == st2.beliefs[7].counts


def test_vanished_vehicles_are_dropped_from_history():
    st = observe(world(others=[VehicleState(1, 20.0, 0.0, 5.0)]), SelectorState())
    st = observe(world(t=0.1), st)
    assert 1 not in st.history


def test_belief_counts_never_decrease():
    cfg = load_config(packaged_scenario("table1")).with_seed(2)
    sel = LaneSelector(cfg.weights, cfg.planner, cfg.ego.desired_speed)
    rng = random.Random(cfg.seed)
    state = spawn_traffic(cfg, rng)
    prev = {}
    for _ in range(50):
        d = sel.decide(world_view(state, cfg))
        for vid, b in sel.state.beliefs.items():
            if vid in prev:
                assert all(x >= y for x, y in zip(b.counts, prev[vid]))
            prev[vid] = b.counts
        for h in sel.state.history.values():
            ts = [ob.t for ob in h]
            assert all(x < y for x, y in zip(ts, ts[1:]))
        state = step(state, d.target_lane_index, cfg, rng)


def test_scene1_first_decision_goes_left():
    cfg = load_config(packaged_scenario("scene1"))
    log = run(cfg, "easter", timing=False)
    first = next(r.decision_lane for r in log.rows if r.decision_lane != r.lane)
    assert first == 1


def test_scene3_double_lane_change():
    cfg = load_config(packaged_scenario("scene3"))
    log = run(cfg, "easter", timing=False)
    seq = [log.rows[0].lane]
    for r in log.rows:
        if r.lane != seq[-1]:
            seq.append(r.lane)
    assert seq[:3] == [1, 2, 3]
    assert set(run(cfg, "mobil", timing=False).lanes) == {1}


def test_rotated_road_gives_same_decisions():
    cfg = load_config(packaged_scenario("scene1"))
    a = run(cfg, "easter", timing=False)
    b = run(replace(cfg, road_angle=math.radians(30)), "easter", timing=False)
    assert [r.decision_lane for r in a.rows] == [r.decision_lane for r in b.rows]


def test_selector_config_is_used():
    sel = LaneSelector(CostWeights(), PlannerConfig(horizon=4))
    d = sel.decide(world())
    assert len(d.path.nodes) == 5
