import pytest

from easter.errors import ConfigError
from easter.frame import ProjectedScene
from easter.graph import Lattice, Node, build_lattice, successors, surrogate_goals


def scene(n_lanes=3, lane=2):
    return ProjectedScene(ego_lat=(lane - 1) * 3.5, ego_lane_index=lane, ego_offset_delta=0.0,
                          others=(), lane_count=n_lanes, lane_width=3.5)


def test_build_lattice_default_geometry():
    lat = build_lattice(scene(), 15.0, dt=1.0, horizon=10)
    assert lat.dx == 15.0
    assert lat.n_columns == 10
    assert lat.start == Node(0, 2)


def test_speed_floor_applies_at_standstill():
    assert build_lattice(scene(), 0.0, dt=1.0).dx == 1.0


def test_horizon_stretched_so_every_goal_is_reachable():
    assert build_lattice(scene(n_lanes=5, lane=1), 10.0, horizon=2).n_columns == 4


@pytest.mark.parametrize("kw", [{"horizon": 0}, {"dt": 0.0}, {"dt": -1.0}])
def test_bad_lattice_parameters(kw):
    with pytest.raises(ConfigError):
        build_lattice(scene(), 10.0, **kw)


def test_successors():
    lat = build_lattice(scene(), 15.0, horizon=10)
    assert successors(lat, Node(0, 2)) == [Node(1, 1), Node(1, 2), Node(1, 3)]
    assert successors(lat, Node(0, 1)) == [Node(1, 1), Node(1, 2)]
    assert successors(lat, Node(10, 3)) == []


def test_successor_counts_and_monotone_columns():
    lat = build_lattice(scene(), 15.0, horizon=6)
    for n in lat.nodes():
        succ = successors(lat, n)
        assert len(succ) in (0, 2, 3)
        assert all(m.column == n.column + 1 and abs(m.lane - n.lane) <= 1 for m in succ)


def test_surrogate_goals():
    lat = build_lattice(scene(), 15.0, horizon=10)
    assert surrogate_goals(lat) == {Node(10, 1), Node(10, 2), Node(10, 3)}
    single = Lattice(1, 4, 5.0, 3.5, Node(0, 1))
    assert surrogate_goals(single) == {Node(4, 1)}


def test_every_goal_reachable_from_start():
    lat = build_lattice(scene(n_lanes=4, lane=1), 5.0, horizon=3)
    frontier = {lat.start}
    for _ in range(lat.n_columns):
        frontier = {m for n in frontier for m in successors(lat, n)}
    assert frontier == surrogate_goals(lat)


def test_node_geometry():
    lat = Lattice(3, 10, 15.0, 3.5, Node(0, 2))
    assert lat.position(Node(2, 3)) == (30.0, 7.0)
    assert lat.distance(Node(0, 2), Node(1, 1)) == pytest.approx((15.0 ** 2 + 3.5 ** 2) ** 0.5)
