"""Best-first search over the lane lattice with per-node transition times.

Every node carries ``t_n``, the time the ego needs to reach it from the current
measurement; costs of entering a node are evaluated against predictions at that
time.  The search stops as soon as any surrogate goal (one per lane at the last
column) is closed.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import Optional

from .cost import CostBreakdown, CostModel
from .errors import InvariantViolation
from .graph import Lattice, Node, successors, surrogate_goals


@dataclass
class SearchRecord:
    node: Node
    g: float
    h: float
    t_n: float
    parent: Optional[tuple] = None  # record key of the parent: (node, lane changes)
    breakdown: CostBreakdown = field(default_factory=CostBreakdown)
    lane_changes: int = 0

    @property
    def f(self) -> float:
        return self.g + self.h


@dataclass(frozen=True)
class Path:
    nodes: tuple[Node, ...]
    total_cost: float
    breakdowns: tuple[CostBreakdown, ...]  # one per node; the start node's is all zeros
    times: tuple[float, ...]
    goal: Node
    expansions: int = 0
    records: dict = field(default_factory=dict, repr=False, compare=False)  # every search state touched

    def __len__(self) -> int:
        return len(self.nodes)


def _goal_aware_h(cost_model: CostModel, goals: frozenset):
    # surrogate goals connect to a zero-cost pseudo goal, so their cost-to-go is exactly 0
    def h(n: Node) -> float:
        return 0.0 if n in goals else cost_model.h(n)
    return h


def _priority(rec: SearchRecord) -> tuple:
    # ties: lower h, then keep-lane over lane change, then lower lane index
    lane_change = rec.parent is not None and rec.parent[0].lane != rec.node.lane
    return (rec.f, rec.h, lane_change, rec.node.lane, rec.node.column, rec.lane_changes)


def extended_astar(lattice: Lattice, cost_model: CostModel, time_augmented: bool = True) -> Path:
    """Minimum-cost path from the start node to any surrogate goal.

    The step cost into a node depends on when the node is reached, and the arrival
    time depends on how many lane changes precede it.  With ``time_augmented`` the
    search state is (node, lane changes so far), which makes the result exactly
    optimal.  Without it, one record is kept per lattice node and a cheaper
    arrival overwrites a dearer one; that variant can lose the optimum when an
    earlier arrival would have paid off later.
    """
    goals = surrogate_goals(lattice)
    h = _goal_aware_h(cost_model, goals)

    def key(n: Node, k: int):
        return (n, k) if time_augmented else (n, 0)

    start = lattice.start
    s0 = key(start, 0)
    records: dict[tuple, SearchRecord] = {s0: SearchRecord(start, 0.0, h(start), 0.0)}
    open_heap = [(_priority(records[s0]), 0.0, s0)]
    closed: set[tuple] = set()
    expansions = 0

    while open_heap:
        _, g_entry, s = heapq.heappop(open_heap)
        if s in closed or g_entry != records[s].g:
            continue  # stale entry left behind by a decrease-key
        closed.add(s)
        rec0 = records[s]
        n0 = rec0.node
        if n0 in goals:
            return reconstruct(records, s, expansions)
        expansions += 1

        for n in successors(lattice, n0):
            k = rec0.lane_changes + (n.lane != n0.lane)
            sn = key(n, k)
            if sn in closed:
                continue
            g_step, br, t_n = cost_model.step(n0, n, rec0.t_n, cost_model.arrival_time(n.column, k))
            g = rec0.g + g_step
            rec = records.get(sn)
            if rec is None:
                rec = records[sn] = SearchRecord(n, g, h(n), t_n, s, br, k)
            elif g < rec.g:
                rec.g, rec.t_n, rec.parent, rec.breakdown, rec.lane_changes = g, t_n, s, br, k
            else:
                continue
            heapq.heappush(open_heap, (_priority(rec), g, sn))

    raise InvariantViolation("open list exhausted before any surrogate goal was closed")


def reconstruct(records: dict, goal, expansions: int = 0) -> Path:
    """Walk parent links back from ``goal`` (a record key) to the start."""
    chain = []
    s = goal
    seen = set()
    while s is not None:
        if s in seen or s not in records:
            raise InvariantViolation(f"broken parent chain at {s}")
        seen.add(s)
        chain.append(records[s])
        s = records[s].parent
    chain.reverse()
    if chain[0].g != 0.0 or chain[0].t_n != 0.0:
        raise InvariantViolation("parent chain does not end at the start node")
    return Path(
        nodes=tuple(r.node for r in chain),
        total_cost=records[goal].g,
        breakdowns=tuple(r.breakdown for r in chain),
        times=tuple(r.t_n for r in chain),
        goal=chain[-1].node,
        expansions=expansions,
        records=records,
    )


# -- admissibility audit ------------------------------------------------------

@dataclass(frozen=True)
class Violation:
    node: Node
    lane_changes_before: int  # arrival-time class the cost-to-go was computed for
    heuristic: float
    cost_to_go: float
    term: str = "lambda_goal"

    @property
    def excess(self) -> float:
        return self.heuristic - self.cost_to_go


@dataclass(frozen=True)
class AdmissibilityReport:
    violations: tuple[Violation, ...]
    states_checked: int

    @property
    def ok(self) -> bool:
        return not self.violations


def cost_to_go(lattice: Lattice, cost_model: CostModel) -> dict[tuple[Node, int], float]:
    """Optimal remaining cost from every reachable (node, lane changes so far) state.

    Arrival time depends only on how many lane changes precede a node, so a
    backward recursion over these states is exact.
    """
    goals = surrogate_goals(lattice)
    arrival = cost_model.arrival_time
    reachable = _reachable_states(lattice)
    out: dict[tuple[Node, int], float] = {}
    for col in range(lattice.n_columns, -1, -1):
        for (n, k) in (s for s in reachable if s[0].column == col):
            if n in goals:
                out[(n, k)] = 0.0
                continue
            best = float("inf")
            for m in successors(lattice, n):
                k2 = k + (m.lane != n.lane)
                c, _, _ = cost_model.step(n, m, arrival(col, k), arrival(col + 1, k2))
                best = min(best, c + out[(m, k2)])
            out[(n, k)] = best
    return out


def verify_admissibility(lattice: Lattice, cost_model: CostModel, tol: float = 1e-9) -> AdmissibilityReport:
    """Check h(n) <= optimal cost-to-go for every reachable (node, arrival time)."""
    h = _goal_aware_h(cost_model, surrogate_goals(lattice))
    ctg = cost_to_go(lattice, cost_model)
    violations = []
    for (n, k), c in sorted(ctg.items()):
        hv = h(n)
        if hv > c + tol:
            violations.append(Violation(n, k, hv, c))
    return AdmissibilityReport(tuple(violations), len(ctg))


def _reachable_states(lattice: Lattice) -> set[tuple[Node, int]]:
    frontier = {(lattice.start, 0)}
    states = set(frontier)
    for _ in range(lattice.n_columns):
        nxt = set()
        for n, k in frontier:
            for m in successors(lattice, n):
                nxt.add((m, k + (m.lane != n.lane)))
        states |= nxt
        frontier = nxt
    return states
