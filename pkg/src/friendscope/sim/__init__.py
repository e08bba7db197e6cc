"""Deterministic simulation harness: scenarios in, reports out."""

from .network import Direction, NetworkModel, NetworkSampler
from .scenario import Event, Scenario, ScenarioError, load_scenario, parse_scenario
from .report import Metrics, SimReport, compute_metrics, verify_report
from .reference import reference_run
from .engine import run_scenario

__all__ = [
    "run_scenario",
    "Direction",
    "NetworkModel",
    "NetworkSampler",
    "Event",
    "Scenario",
    "ScenarioError",
    "load_scenario",
    "parse_scenario",
    "Metrics",
    "SimReport",
    "compute_metrics",
    "verify_report",
    "reference_run",
]
