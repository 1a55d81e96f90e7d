"""Scenario runs with bound resolution and detection."""

import logging
from typing import NamedTuple, Optional

from src.control.conditions import GainReport
from src.detection.bounds import BoundSet, complete_bounds, load_bounds
from src.detection.detector import DetectionReport, annotate_latencies, detect
from src.sim.calibration import calibrate
from src.sim.engine import ClosedLoop, Trace, simulate
from src.sim.scenario import Scenario, bounds_path

logger = logging.getLogger(__name__)

LATENCY_TOLERANCE = 2.0


class RunResult(NamedTuple):
    trace: Trace
    report: DetectionReport
    bounds: BoundSet
    gain_report: GainReport


def resolve_bounds(
    scenario: Scenario,
    safety_factor: float = 1.2,
    settle_time: Optional[float] = None,
    force: bool = False,
    horizon: Optional[int] = None,
) -> BoundSet:
    """Bound set for a scenario: read from its bound file or calibrated.

    Calibration runs the attack-free version of the scenario. A bound file
    without a threshold is completed from the scenario's gains and graph.
    """
    path = bounds_path(scenario)
    if path is None:
        if settle_time is None:
            settle_time = scenario.detection.settle_time if scenario.detection.settle_time is not None else 10.0
        return calibrate(
            scenario.without_attacks(),
            safety_factor=safety_factor,
            settle_time=settle_time,
            force=force,
            horizon=horizon,
        ).bounds

    bounds = load_bounds(path)
    logger.info("bound set read from %s", path)
    if bounds.pi is None:
        loop = ClosedLoop(scenario)
        bounds = complete_bounds(bounds, loop.bundle, loop.gains, loop.tuning, e_M_fallback=bounds.e_M)
    return bounds


def run(
    scenario: Scenario,
    bounds: Optional[BoundSet] = None,
    force: bool = False,
    horizon: Optional[int] = None,
    safety_factor: float = 1.2,
    settle_time: Optional[float] = None,
) -> RunResult:
    """Simulate a scenario and test its residuals against the threshold.

    Args:
        scenario: Scenario to run
        bounds: Bound set to use; resolved from the scenario when omitted
        force: Run even if a gain condition fails
        horizon: Optional number of steps replacing the declared horizon
        safety_factor: Calibration safety factor
        settle_time: Calibration transient in seconds

    Returns:
        RunResult; its first two fields are the trace and the detection report
    """
    if bounds is None:
        bounds = resolve_bounds(scenario, safety_factor, settle_time, force, horizon)
    simulation = simulate(scenario, force=force, horizon=horizon)
    report = detect(simulation.trace.residual, bounds.pi, scenario.sample_period)
    annotate_latencies(report, scenario.attacks, LATENCY_TOLERANCE)
    for attack_id, latency in report.latencies.items():
        if latency is None:
            logger.info("attack %r raised no alarm on its target", attack_id)
        else:
            logger.info("attack %r detected after %.3f s", attack_id, latency)
    return RunResult(simulation.trace, report, bounds, simulation.gain_report)
