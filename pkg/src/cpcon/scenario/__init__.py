"""Scripted scenarios, fault injection, metrics, and the CLI entry point."""

from cpcon.scenario.harness import (
    SCENARIOS,
    ScenarioOptions,
    ScenarioReport,
    inject_fault,
    run_scenario,
)
from cpcon.scenario.metrics import emit_metrics, fit_linear

__all__ = [
    "SCENARIOS",
    "ScenarioOptions",
    "ScenarioReport",
    "emit_metrics",
    "fit_linear",
    "inject_fault",
    "run_scenario",
]
