"""Scenario model, closed-loop engine, calibration and runs."""

from .calibration import CalibrationResult, calibrate
from .engine import ClosedLoop, SimulationResult, StepResult, Trace, simulate
from .runner import RunResult, resolve_bounds, run
from .scenario import (
    LEADER_BUILTINS,
    SCENARIO_DIR,
    Scenario,
    build_attacks,
    build_basis,
    build_dynamics,
    build_formation,
    build_gains,
    build_graph,
    dump_scenario,
    load_scenario,
    parse_scenario,
    resolve_scenario_path,
    scenario_to_dict,
)
from .signals import DisturbanceModel, disturbance_eval, leader_step

__all__ = [
    "CalibrationResult",
    "ClosedLoop",
    "DisturbanceModel",
    "LEADER_BUILTINS",
    "RunResult",
    "SCENARIO_DIR",
    "Scenario",
    "SimulationResult",
    "StepResult",
    "Trace",
    "build_attacks",
    "build_basis",
    "build_dynamics",
    "build_formation",
    "build_gains",
    "build_graph",
    "calibrate",
    "disturbance_eval",
    "dump_scenario",
    "leader_step",
    "load_scenario",
    "parse_scenario",
    "resolve_bounds",
    "resolve_scenario_path",
    "run",
    "simulate",
]
