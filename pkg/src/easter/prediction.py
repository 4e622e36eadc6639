"""Motion prediction for surrounding vehicles and their acceleration beliefs.

Any object with a ``predict(history, t)`` method can drive the search; the
constant-velocity model is the one shipped.  Beliefs are Dirichlet pseudo-counts
over acceleration bins, and their entropy feeds the uncertainty risk.
"""
from __future__ import annotations

import bisect
import math
from collections import deque
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Protocol

from .frame import VehicleState

# interior edges; the two outer bins are open-ended
DEFAULT_ACCEL_EDGES = (-3.0, -1.5, -0.5, 0.5, 1.5, 3.0)
DEFAULT_HISTORY = 10


class Observation(NamedTuple):
    t: float
    x: float
    y: float  # meters
    v: float
    heading: float
    accel: float


class TrajectoryHistory:
    """Most recent observations of one vehicle, oldest first.

    Holds at most ``n_past + 1`` entries, i.e. the samples at t_-N ... t_0.
    """

    def __init__(self, n_past: int = DEFAULT_HISTORY, observations: Iterable[Observation] = ()):
        if n_past < 0:
            raise ValueError("n_past must be >= 0")
        self.n_past = n_past
        self._obs: deque[Observation] = deque(maxlen=n_past + 1)
        for ob in observations:
            self.append(ob)

    def append(self, ob: Observation) -> None:
        if self._obs and not ob.t > self._obs[-1].t:
            raise ValueError(f"timestamps must increase: {ob.t} after {self._obs[-1].t}")
        self._obs.append(ob)

    @property
    def latest(self) -> Observation:
        if not self._obs:
            raise IndexError("empty trajectory history")
        return self._obs[-1]

    def __len__(self) -> int:
        return len(self._obs)

    def __iter__(self):
        return iter(self._obs)

    def extended(self, ob: Observation) -> "TrajectoryHistory":
        """Copy with ``ob`` appended; the original is left untouched."""
        out = TrajectoryHistory(self.n_past)
        out._obs.extend(self._obs)  # already ordered
        out.append(ob)
        return out

    @classmethod
    def single(cls, ob: Observation, n_past: int = DEFAULT_HISTORY) -> "TrajectoryHistory":
        return cls(n_past, [ob])


class PredictionModel(Protocol):
    def predict(self, history: TrajectoryHistory, t: float) -> tuple[float, float]:
        """Position ``t`` seconds after the latest observation; ``t == 0`` returns it unchanged."""
        ...


def predict_constant_velocity(state: VehicleState | Observation, t: float) -> tuple[float, float]:
    if t < 0:
        raise ValueError(f"prediction time must be >= 0, got {t}")
    return (
        state.x + state.v * math.cos(state.heading) * t,
        state.y + state.v * math.sin(state.heading) * t,
    )


class ConstantVelocity:
    """Straight-line extrapolation from the newest observation."""

    def predict(self, history: TrajectoryHistory, t: float) -> tuple[float, float]:
        return predict_constant_velocity(history.latest, t)


@dataclass(frozen=True)
class AccelerationBelief:
    edges: tuple[float, ...]
    counts: tuple[float, ...]

    def __post_init__(self):
        if len(self.counts) != len(self.edges) + 1:
            raise ValueError("need one more count than interior edges")
        if any(b <= a for a, b in zip(self.edges, self.edges[1:])):
            raise ValueError("bin edges must be strictly increasing")
        if any(not c > 0 for c in self.counts):
            raise ValueError("pseudo-counts must be positive")

    @classmethod
    def prior(cls, edges=DEFAULT_ACCEL_EDGES, pseudo_count: float = 1.0) -> "AccelerationBelief":
        return cls(tuple(edges), (float(pseudo_count),) * (len(edges) + 1))

    @property
    def n_bins(self) -> int:
        return len(self.counts)

    def bin_index(self, accel: float) -> int:
        """0-based bin holding ``accel``; bins are [lo, hi)."""
        return bisect.bisect_right(self.edges, accel)

    def probabilities(self) -> tuple[float, ...]:
        total = sum(self.counts)
        return tuple(c / total for c in self.counts)


def update_belief(b: AccelerationBelief, observed_accel: float) -> AccelerationBelief:
    """Conjugate Dirichlet-multinomial update with a single observation."""
    if not math.isfinite(observed_accel):
        raise ValueError("observed acceleration must be finite")
    k = b.bin_index(observed_accel)
    counts = list(b.counts)
    counts[k] += 1.0
    # adding to a valid belief keeps it valid, so skip re-validation
    out = object.__new__(AccelerationBelief)
    object.__setattr__(out, "edges", b.edges)
    object.__setattr__(out, "counts", tuple(counts))
    return out


def entropy(b: AccelerationBelief) -> float:
    """Shannon entropy of the posterior mean, in nats."""
    h = 0.0
    for p in b.probabilities():
        if p > 0:
            h -= p * math.log(p)
    return max(h, 0.0)
