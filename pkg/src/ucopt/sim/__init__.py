"""Reduced-order closed-loop microgrid simulation."""

from .bus import (
    BusMode,
    BusModel,
    BusState,
    bus_step,
    bus_voltage,
    injection_current,
    interface_step,
    quiescent_state,
)
from .runner import ComparisonReport, compare, compare_dicts, compute_metrics, run_many, run_scenario
from .scenario import (
    Controller,
    CriticConfig,
    EdotSource,
    Metrics,
    RunRecord,
    Scenario,
    case_one,
    case_two,
    scenario_to_dict,
    validate_scenario,
)

__all__ = [
    "BusMode",
    "BusModel",
    "BusState",
    "bus_step",
    "bus_voltage",
    "injection_current",
    "interface_step",
    "quiescent_state",
    "ComparisonReport",
    "compare",
    "compare_dicts",
    "compute_metrics",
    "run_many",
    "run_scenario",
    "Controller",
    "CriticConfig",
    "EdotSource",
    "Metrics",
    "RunRecord",
    "Scenario",
    "case_one",
    "case_two",
    "scenario_to_dict",
    "validate_scenario",
]
