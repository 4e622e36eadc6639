import math

import pytest

from easter.errors import ConfigError
from easter.frame import (
    LaneGeometry,
    VehicleState,
    WorldState,
    nearest_lane,
    project_scene,
    rotate,
)

LANES = LaneGeometry.uniform(3, 3.5)


def world(ego_xy, others=(), psi=0.0, lanes=LANES, goal=(1000.0, 0.0)):
    ego = VehicleState(0, *ego_xy, v=10.0)
    return WorldState(ego, tuple(others), lanes, psi, goal)


@pytest.mark.parametrize("xy, psi, expected", [
    ((1.0, 0.0), 0.0, (1.0, 0.0)),
    ((0.0, 1.0), 0.0, (0.0, -1.0)),
    ((3.0, 4.0), math.pi / 2, (4.0, 3.0)),
])
def test_rotate_examples(xy, psi, expected):
    assert rotate(*xy, psi) == pytest.approx(expected, abs=1e-12)


def test_rotate_is_an_involution():
    for psi in (0.0, 0.3, 1.2, -2.0):
        x, y = rotate(*rotate(12.5, -3.0, psi), psi)
        assert (x, y) == pytest.approx((12.5, -3.0), abs=1e-12)


@pytest.mark.parametrize("y, offsets, lane", [
    (3.3, [0.0, 3.5, 7.0], 2),
    (1.75, [0.0, 3.5], 1),
    (-5.0, [0.0, 3.5, 7.0], 1),
    (50.0, [0.0, 3.5, 7.0], 3),
])
def test_nearest_lane(y, offsets, lane):
    assert nearest_lane(y, offsets) == lane


def test_nearest_lane_rejects_empty_list():
    with pytest.raises(ConfigError):
        nearest_lane(0.0, [])


def test_projection_snaps_ego_and_shifts_others():
    # world y is the negated rotated lateral at psi = 0
    w = world((100.0, -3.3), [VehicleState(5, 130.0, -5.25, 8.0)])
    sc = project_scene(w)
    assert sc.ego_lane_index == 2
    assert sc.ego_lat == 3.5
    (o,) = sc.others
    assert o.x == pytest.approx(30.0)
    assert o.y_lanes == pytest.approx(1.5)
    assert o.y == pytest.approx(5.25)


def test_offset_delta_zero_without_previous_target():
    sc = project_scene(world((0.0, -3.5)))
    assert sc.ego_offset_delta == 0.0
    assert sc.prev_target_lat is None


def test_offset_delta_is_signed_distance_to_previous_target():
    sc = project_scene(world((0.0, -2.0)), prev_target_lat=3.5)
    assert sc.ego_offset_delta == pytest.approx(-1.5)
    assert sc.prev_target_lat == pytest.approx(3.5)


def test_snap_bound_and_gap_preservation():
    others = [VehicleState(i, 10.0 * i - 40.0, -1.3 * i, 5.0) for i in range(8)]
    for ey in (-0.2, -1.7, -1.8, -4.9, -6.9):
        sc = project_scene(world((37.0, ey), others))
        assert abs(-ey - sc.ego_lat) <= 3.5 / 2 + 1e-12
        xs = [o.x for o in sc.others]
        assert all(b - a == pytest.approx(10.0) for a, b in zip(xs, xs[1:]))


def test_goal_is_relative_to_ego_and_leftmost_lane():
    lanes = LaneGeometry.uniform(3, 3.5, first=2.0)
    sc = project_scene(world((50.0, -2.0), lanes=lanes, goal=(550.0, -9.0)))
    assert sc.goal == pytest.approx((500.0, 7.0))
    assert sc.ego_lane_index == 1


def test_invalid_inputs_are_config_errors():
    with pytest.raises(ConfigError):
        VehicleState(1, 0.0, 0.0, -1.0)
    with pytest.raises(ConfigError):
        LaneGeometry((0.0, 3.5, 3.5))
    with pytest.raises(ConfigError):
        LaneGeometry((0.0, 3.5, 8.0))
