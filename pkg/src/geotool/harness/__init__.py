"""Scenario configuration, batch runs, metrics and export."""

from .export import COLUMNS, export, read_csv, read_json
from .runner import RunMetrics, compute_metrics, critical_point_report, run, simulate_scenario
from .scenario import Contract, Scenario, builtin_names, load_scenario

__all__ = [
    "COLUMNS", "Contract", "RunMetrics", "Scenario", "builtin_names", "compute_metrics",
    "critical_point_report", "export", "load_scenario", "read_csv", "read_json", "run",
    "simulate_scenario",
]
