"""Empirical calibration of the bound constants from an attack-free run."""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from src.detection.bounds import BoundSet, complete_bounds
from src.detection.observer import residual_norms
from src.errors import AttackRefusalError
from src.sim.engine import SimulationResult, simulate
from src.sim.scenario import Scenario
from src.sim.signals import DisturbanceModel

logger = logging.getLogger(__name__)


@dataclass(eq=False)
class CalibrationResult:
    bounds: BoundSet
    simulation: SimulationResult
    settle_step: int


def calibrate(
    scenario: Scenario,
    safety_factor: float = 1.2,
    settle_time: float = 10.0,
    force: bool = False,
    horizon: Optional[int] = None,
) -> CalibrationResult:
    """Measure the bound constants on an attack-free run and derive pi.

    Disturbance peaks and the leader bound are taken over the whole horizon;
    approximation error, weight norm and formation error peaks only after
    ``settle_time``. Every measured peak except the leader bound is scaled by
    ``safety_factor``. The offset bound is the declared d_max, or the stacked
    offset norm when none is declared.

    Args:
        scenario: Scenario without attacks
        safety_factor: Multiplier applied to the measured peaks
        settle_time: Seconds excluded as the initial transient
        force: Run even if a gain condition fails
        horizon: Optional number of steps replacing the declared horizon

    Returns:
        CalibrationResult with the completed bound set

    Raises:
        AttackRefusalError: If the scenario declares attacks
    """
    if scenario.attacks:
        raise AttackRefusalError(
            f"calibration needs an attack-free scenario; {scenario.name!r} declares "
            f"{len(scenario.attacks)} attack(s)"
        )
    if safety_factor < 1.0:
        logger.warning("safety factor %.3g < 1 shrinks the measured bounds", safety_factor)

    simulation = simulate(scenario, force=force, horizon=horizon)
    trace, loop = simulation.trace, simulation.loop
    settle_step = trace.step_at(settle_time)
    if settle_step >= trace.n_steps:
        logger.warning("settle time %.3g s exceeds the horizon; using the last step only", settle_time)
        settle_step = trace.n_steps - 1
    settled = slice(settle_step, None)

    w_peak = DisturbanceModel(scenario.n_agents, scenario.state_dim, scenario.disturbances).peak_norm(trace.times)
    # hbar - w is the approximation error seen by the tuning law
    eps_peak = float(np.linalg.norm(trace.hbar[settled] - trace.disturbance[settled], axis=-1).max())
    W_peak = float(trace.weight_norms[settled].max())
    e_peak = float(trace.formation_error_norms()[settled].max())
    F_M = float(np.linalg.norm(trace.leader, axis=-1).max())
    d_M = scenario.formation.d_max
    if d_M is None:
        d_M = loop.formation.stacked_norm

    measured = BoundSet(
        w_M=safety_factor * w_peak,
        eps_M=safety_factor * eps_peak,
        W_M=safety_factor * W_peak,
        phi_M=loop.basis.phi_max,
        F_M=F_M,
        d_M=float(d_M),
        safety_factor=safety_factor,
        observed_residual_max=float(residual_norms(trace.residual[settled]).max()),
    )
    bounds = complete_bounds(
        measured, loop.bundle, loop.gains, loop.tuning, e_M_fallback=safety_factor * e_peak
    )
    logger.info(
        "calibrated %r: pi=%.6g (e_M=%.6g from %s), steady residual max=%.6g",
        scenario.name, bounds.pi, bounds.e_M, bounds.e_M_source, bounds.observed_residual_max,
    )
    if bounds.pi <= bounds.observed_residual_max:
        logger.warning(
            "threshold %.6g is below the observed steady residual %.6g; expect false alarms",
            bounds.pi, bounds.observed_residual_max,
        )
    return CalibrationResult(bounds, simulation, settle_step)
