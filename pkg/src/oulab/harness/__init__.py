"""Scenario configs, task runners, reports and the command-line interface."""
from .config import SCENARIO_SCHEMA, apply_overrides, bundled_scenarios, load_config, validate_config
from .report import REPORT_SCHEMA, run_scenario, strip_timing, write_report
from .tasks import SWEEP_COLUMNS, check

__all__ = [
    "SCENARIO_SCHEMA",
    "REPORT_SCHEMA",
    "SWEEP_COLUMNS",
    "apply_overrides",
    "bundled_scenarios",
    "check",
    "load_config",
    "run_scenario",
    "strip_timing",
    "validate_config",
    "write_report",
]
