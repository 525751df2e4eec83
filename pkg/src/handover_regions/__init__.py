"""Distributed self-organization of handover regions.

A deterministic discrete-event simulator in which cells and MME/AMF
instances negotiate the cell to region association from observed handover
flows, together with geographic and random baselines and an exact
capacity-constrained min-cut oracle.
"""
from .agents import (TOMBSTONE, AssignmentDecision, AssignmentRequest, AttractionTable,
                     CellAgent, MmeAgent, Verdict, attraction)
from .assignment import AssignmentState
from .engine import Engine, RegionDirectory, RunResult, init_assignment, run
from .errors import (HandoverRegionError, ConfigError, MalformedSpec, DisconnectedGraph,
                     UnknownCell, ParseError, NonAdjacentHandover, UnassignedCell,
                     RetiredRegion, NoData, NoCandidate, EmptyRegionOverflow, NotAssigned,
                     InsufficientCapacity, LastRegion, Infeasible, TooLarge, NotConverged)
from .metrics import (WindowMetrics, compute_window_metrics, convergence_time, jain_index,
                      steady_state_ratio)
from .mobility import HandoverEvent, MobilityModel, generate_handovers, load_trace
from .partition import (Partition, cut_value, oracle_partition, random_partition,
                        static_partition)
from .protocol import HandoverClass, SignalingCostModel, classify_handover, derive_source_region
from .scenario import AgentParams, ScaleEvent, Scenario, load_scenario
from .topology import Topology, build_topology

__all__ = [
    "TOMBSTONE",
    "AssignmentDecision",
    "AssignmentRequest",
    "AttractionTable",
    "CellAgent",
    "MmeAgent",
    "Verdict",
    "attraction",
    "AssignmentState",
    "Engine",
    "RegionDirectory",
    "RunResult",
    "init_assignment",
    "run",
    "HandoverRegionError",
    "ConfigError",
    "MalformedSpec",
    "DisconnectedGraph",
    "UnknownCell",
    "ParseError",
    "NonAdjacentHandover",
    "UnassignedCell",
    "RetiredRegion",
    "NoData",
    "NoCandidate",
    "EmptyRegionOverflow",
    "NotAssigned",
    "InsufficientCapacity",
    "LastRegion",
    "Infeasible",
    "TooLarge",
    "NotConverged",
    "WindowMetrics",
    "compute_window_metrics",
    "convergence_time",
    "jain_index",
    "steady_state_ratio",
    "HandoverEvent",
    "MobilityModel",
    "generate_handovers",
    "load_trace",
    "Partition",
    "cut_value",
    "oracle_partition",
    "random_partition",
    "static_partition",
    "HandoverClass",
    "SignalingCostModel",
    "classify_handover",
    "derive_source_region",
    "AgentParams",
    "ScaleEvent",
    "Scenario",
    "load_scenario",
    "Topology",
    "build_topology",
]

__version__ = "0.1.0"
