"""Black-hole search by mobile agents on always-connected dynamic graphs."""

from .engine import Action, Observation, Outcome, ProtocolViolation, VerificationError, run
from .harness import Scenario, generate_graph, parse_config, run_scenario, verify_trace
from .tvg import Footprint, GraphError, IllegalAdversary, Snapshot, make_footprint

__all__ = [
    "Action",
    "Footprint",
    "GraphError",
    "IllegalAdversary",
    "Observation",
    "Outcome",
    "ProtocolViolation",
    "Scenario",
    "Snapshot",
    "VerificationError",
    "generate_graph",
    "make_footprint",
    "parse_config",
    "run",
    "run_scenario",
    "verify_trace",
]
