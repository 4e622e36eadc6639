"""Discretionary lane selection by time-extended A* search over a lane lattice."""
from .cost import CostBreakdown, CostModel, CostWeights
from .errors import ConfigError, InvariantViolation
from .frame import LaneGeometry, ProjectedScene, VehicleState, WorldState, project_scene
from .graph import Lattice, Node, build_lattice
from .search import Path, extended_astar, verify_admissibility
from .selector import LaneDecision, LaneSelector, SelectorState, select_lane

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "CostBreakdown", "CostModel", "CostWeights", "InvariantViolation", "LaneDecision",
    "LaneGeometry", "LaneSelector", "Lattice", "Node", "Path", "ProjectedScene", "SelectorState",
    "VehicleState", "WorldState", "build_lattice", "extended_astar", "project_scene", "select_lane",
    "verify_admissibility",
]
