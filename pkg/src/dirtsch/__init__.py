"""Directional-antenna slotframe scheduling for convergecast trees, with an
omni-directional baseline and a slot-stepped simulator."""

from .antenna import BeamConfig, Mode, beam_of, covers, directional_conflict, opposite_beam
from .kernels import BACKEND
from .link_model import LinkModelParams
from .schedule import Cell, ConflictError, Schedule, schedule_length
from .scheduler import PeriodPlanner, TimerPolicy, omni_baseline, run_scheduling_period, schedule_period
from .sim import MetricsReport, SimConfig, collect_metrics, generate_traffic, run, simulate
from .topology import Topology, Tree, build_topology, build_tree, load_topology, neighbors

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "BeamConfig", "Cell", "ConflictError", "LinkModelParams", "MetricsReport",
    "Mode", "PeriodPlanner", "Schedule", "SimConfig", "TimerPolicy", "Topology", "Tree",
    "beam_of", "build_topology", "build_tree", "collect_metrics", "covers",
    "directional_conflict", "generate_traffic", "load_topology", "neighbors", "omni_baseline",
    "opposite_beam", "run", "run_scheduling_period", "schedule_length", "schedule_period",
    "simulate",
]
