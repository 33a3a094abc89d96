"""Simulation-driven safety verification of hybrid systems over timed transition graphs."""
from __future__ import annotations

__version__ = "0.1.0"

from .boxes import Box
from .discrepancy import (
    DiscrepancyFn,
    fit_separator,
    learn_global_discrepancy,
    learn_piecewise_discrepancy,
    pac_sample_size,
    validate_discrepancy,
)
from .graph import (
    TransitionGraph,
    build_graph,
    check_forward_simulation,
    compose_power,
    enumerate_traces,
    parse_graph,
    sequential_compose,
    traces_contained,
)
from .reach import ReachOptions, ReachResult, Reachtube, graph_reach, reach_comp
from .reasoning import certify_reach_containment, certify_unbounded_composition, decompose_reach
from .scenario import Scenario, load_scenario, loads_scenario, dumps_scenario
from .sim import SimTrace, make_simulator, simulate, simulate_many
from .system import HybridSystem, UnsafeSet, make_unsafe_set
from .verify import SAFE, UNKNOWN, UNSAFE, Budget, VerdictReport, random_falsify, verify_safety

__all__ = [
    "Box", "DiscrepancyFn", "fit_separator", "learn_global_discrepancy", "learn_piecewise_discrepancy",
    "pac_sample_size", "validate_discrepancy", "TransitionGraph", "build_graph", "check_forward_simulation",
    "compose_power", "enumerate_traces", "parse_graph", "sequential_compose", "traces_contained",
    "ReachOptions", "ReachResult", "Reachtube", "graph_reach", "reach_comp", "certify_reach_containment",
    "certify_unbounded_composition", "decompose_reach", "Scenario", "load_scenario", "loads_scenario",
    "dumps_scenario", "SimTrace", "make_simulator", "simulate", "simulate_many", "HybridSystem", "UnsafeSet",
    "make_unsafe_set", "SAFE", "UNKNOWN", "UNSAFE", "Budget", "VerdictReport", "random_falsify", "verify_safety",
]
