import math

import pytest

from easter.frame import VehicleState
from easter.prediction import (
    AccelerationBelief,
    ConstantVelocity,
    Observation,
    TrajectoryHistory,
    entropy,
    predict_constant_velocity,
    update_belief,
)


@pytest.mark.parametrize("v, psi, t, expected", [
    (5.0, 0.0, 2.0, (10.0, 0.0)),
    (7.0, 0.4, 0.0, (0.0, 0.0)),
    (2.0, math.pi / 2, 3.0, (0.0, 6.0)),
])
def test_constant_velocity(v, psi, t, expected):
    s = VehicleState(1, 0.0, 0.0, v, psi)
    assert predict_constant_velocity(s, t) == pytest.approx(expected, abs=1e-12)


def test_negative_prediction_time_rejected():
    with pytest.raises(ValueError):
        predict_constant_velocity(VehicleState(1, 0.0, 0.0, 1.0), -0.1)


def test_predictor_interface_uses_latest_observation():
    h = TrajectoryHistory(3, [Observation(0.0, 0.0, 0.0, 4.0, 0.0, 0.0),
                              Observation(0.1, 0.4, 1.0, 5.0, 0.0, 0.0)])
    assert ConstantVelocity().predict(h, 0.0) == (0.4, 1.0)
    assert ConstantVelocity().predict(h, 2.0) == pytest.approx((10.4, 1.0))


def test_history_capacity_and_ordering():
    h = TrajectoryHistory(2)
    for i in range(5):
        h.append(Observation(float(i), 0.0, 0.0, 0.0, 0.0, 0.0))
    assert len(h) == 3
    assert [ob.t for ob in h] == [2.0, 3.0, 4.0]
    with pytest.raises(ValueError):
        h.append(Observation(4.0, 0.0, 0.0, 0.0, 0.0, 0.0))


def test_update_increments_one_bin():
    b = AccelerationBelief((-1.0, 1.0), (1.0, 1.0, 1.0))
    assert update_belief(b, 0.2).counts == (1.0, 2.0, 1.0)
    assert update_belief(b, -50.0).counts == (2.0, 1.0, 1.0)
    assert update_belief(b, 50.0).counts == (1.0, 1.0, 2.0)
    assert update_belief(b, 1.0).counts == (1.0, 1.0, 2.0)  # bins are [lo, hi)


def test_update_rejects_non_finite():
    with pytest.raises(ValueError):
        update_belief(AccelerationBelief.prior(), math.nan)


def test_repeated_observations_concentrate():
    b = AccelerationBelief.prior()
    last, last_h = b.probabilities()[3], entropy(b)
    for _ in range(30):
        b = update_belief(b, 0.0)
        p, h = b.probabilities()[3], entropy(b)
        assert p > last and h < last_h
        last, last_h = p, h
    # counts (1, 1, 1, 31, 1, 1, 1)
    assert entropy(b) == pytest.approx(-(6 / 37) * math.log(1 / 37) - (31 / 37) * math.log(31 / 37))


def test_one_observation_per_bin_keeps_uniform():
    b = AccelerationBelief.prior()
    for a in (-5.0, -2.0, -1.0, 0.0, 1.0, 2.0, 5.0):
        b = update_belief(b, a)
    assert set(b.counts) == {2.0}
    assert entropy(b) == pytest.approx(math.log(7))


def test_entropy_examples():
    assert entropy(AccelerationBelief.prior()) == pytest.approx(1.9459101090932196)
    assert entropy(AccelerationBelief((0.0,), (2.0, 2.0))) == pytest.approx(math.log(2))
    assert entropy(AccelerationBelief((0.0, 1.0), (1e-9, 1e6, 1e-9))) < 1e-12


def test_belief_validation():
    with pytest.raises(ValueError):
        AccelerationBelief((0.0,), (1.0, 0.0))
    with pytest.raises(ValueError):
        AccelerationBelief((1.0, 0.0), (1.0, 1.0, 1.0))
