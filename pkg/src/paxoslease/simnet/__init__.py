"""Deterministic fault-injecting simulator, oracles, scripted proof
scenarios, liveness measurement, and the bounded small-model explorer."""

from .engine import Simulator, Trace, run_scenario
from .faults import CrashEvent, DeliveryRule, FaultPlan, Partition
from .oracle import (
    Verdict,
    check_alternation,
    check_ballot_monotonic_per_proposer,
    check_promise_monotonic,
    check_proposal_lifetime,
    check_safety,
    ownership_intervals,
)
from .scenario import (
    BUILTINS,
    Command,
    Mission,
    Scenario,
    ScenarioError,
    builtin,
    parse_scenario,
)

__all__ = [
    "BUILTINS",
    "Command",
    "CrashEvent",
    "DeliveryRule",
    "FaultPlan",
    "Mission",
    "Partition",
    "Scenario",
    "ScenarioError",
    "Simulator",
    "Trace",
    "Verdict",
    "builtin",
    "check_alternation",
    "check_ballot_monotonic_per_proposer",
    "check_promise_monotonic",
    "check_proposal_lifetime",
    "check_safety",
    "ownership_intervals",
    "parse_scenario",
    "run_scenario",
]
