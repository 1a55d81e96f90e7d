"""Fixed-step closed-loop simulation."""

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from src.attacks import AttackInjections, StepInjections, actuate, sense
from src.control.conditions import GainReport, validate_gains
from src.control.formation import control_inputs, formation_errors
from src.detection.detectability import attack_effects
from src.detection.observer import observer_step
from src.errors import DivergenceError, GainConditionError
from src.network.rbf import RbfNetwork, activation, prediction_error_hbar, project, tune_weights
from src.sim.scenario import (
    Scenario,
    build_attacks,
    build_basis,
    build_dynamics,
    build_formation,
    build_gains,
    build_graph,
)
from src.sim.signals import DisturbanceModel, leader_step
from src.topology.graph import build_laplacian
from src.utils.expressions import VectorExpression

logger = logging.getLogger(__name__)

DIVERGENCE_LIMIT = 1e9


@dataclass(frozen=True, eq=False)
class StepResult:
    """Everything one closed-loop step produces, all arrays (N, n) unless noted."""

    sensed: np.ndarray
    e: np.ndarray
    f_hat: np.ndarray
    u: np.ndarray
    u_applied: np.ndarray
    x_next: np.ndarray
    x_hat_next: np.ndarray
    hbar: np.ndarray
    weights_next: np.ndarray
    attack_effect: np.ndarray

    @property
    def residual_next(self) -> np.ndarray:
        return self.x_next - self.x_hat_next


class ClosedLoop:
    """The plant, controllers, observers and networks of one scenario."""

    def __init__(self, scenario: Scenario):
        self.scenario = scenario
        self.graph = build_graph(scenario)
        self.bundle = build_laplacian(self.graph, scenario.state_dim)
        self.formation = build_formation(scenario)
        self.gains = build_gains(scenario)
        self.tuning = scenario.tuning
        self.basis = build_basis(scenario)
        self.dynamics = build_dynamics(scenario)
        self.network = RbfNetwork(self.basis, scenario.n_agents)

    def check_gains(self, force: bool = False) -> GainReport:
        """Validate the gain conditions.

        Raises:
            GainConditionError: If a condition fails, the scenario enforces the
                conditions and ``force`` is not set
        """
        report = validate_gains(self.gains, self.bundle, self.tuning, self.basis.phi_max)
        if report.passed:
            logger.info("all gain conditions hold")
        elif force or not self.scenario.control.enforce_gain_conditions:
            logger.warning(
                "continuing despite violated gain conditions: %s",
                "; ".join(c.label for c in report.failed),
            )
        else:
            raise GainConditionError(report)
        return report

    def step(
        self,
        x: np.ndarray,
        x_hat: np.ndarray,
        weights: np.ndarray,
        leader: np.ndarray,
        w: np.ndarray,
        injections: StepInjections,
        next_sensor_injection: np.ndarray,
        track_attack_effect: bool = False,
    ) -> StepResult:
        """Advance every agent by one sample.

        Args:
            x: (N, n) true states
            x_hat: (N, n) observer estimates
            weights: (N, m, n) network weights
            leader: (n,) leader state
            w: (N, n) disturbances
            injections: Attack injections of this step
            next_sensor_injection: (N, n) sensor injection at the next step,
                used for the measured next state in the tuning signal
            track_attack_effect: Also evaluate the attack effect s_i

        Returns:
            StepResult; ``weights`` and the inputs are left untouched
        """
        view = sense(x, injections)
        e = formation_errors(view.sensor, leader, self.graph, self.formation, received=view.neighbour)
        phi = activation(self.basis, view.sensor)
        f_hat = project(weights, phi)
        u = control_inputs(view.sensor, e, f_hat, self.gains.k, self.gains.c, self.gains.law)
        view = actuate(view, u, injections)

        x_next = self.dynamics.step(x, view.actuator, w)
        x_hat_next = observer_step(view.sensor, x_hat, u, e, f_hat, self.gains.observer_gain)
        hbar = prediction_error_hbar(x_next + next_sensor_injection, u, f_hat)
        weights_next = tune_weights(weights, phi, hbar, self.tuning)

        if track_attack_effect:
            effect = attack_effects(injections, x, weights, self.basis, self.graph, self.gains)
        else:
            effect = np.zeros_like(x)
        return StepResult(
            sensed=view.sensor,
            e=e,
            f_hat=f_hat,
            u=u,
            u_applied=view.actuator,
            x_next=x_next,
            x_hat_next=x_hat_next,
            hbar=hbar,
            weights_next=weights_next,
            attack_effect=effect,
        )


@dataclass(eq=False)
class Trace:
    """Per-step record of a run; index t holds the values at time t * T.

    Array shapes: (T,) for times, (T, n) for the leader, (T, N) for weight
    norms, (T, A) for attack flags and (T, N, n) for everything else.
    """

    times: np.ndarray
    leader: np.ndarray
    states: np.ndarray
    x_hat: np.ndarray
    sensed: np.ndarray
    u: np.ndarray
    u_applied: np.ndarray
    e: np.ndarray
    residual: np.ndarray
    f_hat: np.ndarray
    hbar: np.ndarray
    disturbance: np.ndarray
    attack_effect: np.ndarray
    weight_norms: np.ndarray
    attack_flags: np.ndarray
    attack_ids: Tuple[str, ...]
    sample_period: float

    @property
    def n_steps(self) -> int:
        return len(self.times)

    @property
    def n_agents(self) -> int:
        return self.states.shape[1]

    def formation_error_norms(self) -> np.ndarray:
        """||e(t)|| of the stacked local errors."""
        return np.linalg.norm(self.e.reshape(self.n_steps, -1), axis=1)

    def tracking_error_norms(self, offsets: np.ndarray) -> np.ndarray:
        """||delta(t)|| with delta_i = x_l - x_i - d_i."""
        delta = self.leader[:, None, :] - self.states - offsets[None]
        return np.linalg.norm(delta.reshape(self.n_steps, -1), axis=1)

    def step_at(self, t: float) -> int:
        """Index of the first step at or after time t."""
        return int(np.searchsorted(self.times, t - 1e-12))


@dataclass(eq=False)
class SimulationResult:
    trace: Trace
    gain_report: GainReport
    loop: ClosedLoop


def simulate(
    scenario: Scenario, force: bool = False, horizon: Optional[int] = None
) -> SimulationResult:
    """Run the closed loop over the scenario horizon.

    Step order: leader, disturbances and attack flags at t; sensor and
    neighbour views; errors and control inputs from the views; actuator
    corruption; true plant step; observer step; weight tuning from the
    measured next state; record.

    Args:
        scenario: Scenario to run
        force: Run even if a gain condition fails
        horizon: Optional number of steps replacing the declared horizon

    Returns:
        SimulationResult with the full trace

    Raises:
        GainConditionError: If gain conditions fail and are enforced
        DivergenceError: If a state becomes non-finite or exceeds 1e9
    """
    scenario = scenario.with_horizon(horizon)
    loop = ClosedLoop(scenario)
    gain_report = loop.check_gains(force)

    steps, n_agents, state_dim = scenario.horizon, scenario.n_agents, scenario.state_dim
    sample_period = scenario.sample_period
    times = np.arange(steps + 1) * sample_period
    leader = leader_step(times[:steps], VectorExpression.parse(scenario.leader.resolved))
    disturbance = DisturbanceModel(n_agents, state_dim, scenario.disturbances).grid(times[:steps])
    channels = build_attacks(scenario)
    injections = AttackInjections.build(channels, times, n_agents, state_dim)
    track_effect = bool(channels)

    shape = (steps, n_agents, state_dim)
    record = {name: np.empty(shape) for name in (
        "states", "x_hat", "sensed", "u", "u_applied", "e", "residual", "f_hat", "hbar", "attack_effect"
    )}
    weight_norms = np.empty((steps, n_agents))

    x = np.array(scenario.initial_states, dtype=float)
    x_hat = x.copy()
    logger.info(
        "simulating %r: %d agents, %d steps of %g s, %d attack(s)",
        scenario.name, n_agents, steps, sample_period, len(channels),
    )
    for t in range(steps):
        result = loop.step(
            x,
            x_hat,
            loop.network.weights,
            leader[t],
            disturbance[t],
            injections.at(t),
            injections.sensor[t + 1],
            track_effect,
        )
        record["states"][t] = x
        record["x_hat"][t] = x_hat
        record["residual"][t] = x - x_hat
        record["sensed"][t] = result.sensed
        record["u"][t] = result.u
        record["u_applied"][t] = result.u_applied
        record["e"][t] = result.e
        record["f_hat"][t] = result.f_hat
        record["hbar"][t] = result.hbar
        record["attack_effect"][t] = result.attack_effect
        weight_norms[t] = loop.network.frobenius_norms()

        _check_divergence(result.x_next, t)
        x, x_hat = result.x_next, result.x_hat_next
        loop.network.weights = result.weights_next

    trace = Trace(
        times=times[:steps],
        leader=leader,
        disturbance=disturbance,
        weight_norms=weight_norms,
        attack_flags=injections.flags[:steps],
        attack_ids=injections.ids,
        sample_period=sample_period,
        **record,
    )
    return SimulationResult(trace, gain_report, loop)


def _check_divergence(x_next: np.ndarray, step: int) -> None:
    magnitude = np.abs(x_next).max(axis=1)
    bad = ~np.isfinite(magnitude) | (magnitude > DIVERGENCE_LIMIT)
    if np.any(bad):
        agent = int(np.flatnonzero(bad)[0])
        raise DivergenceError(step, agent, float(magnitude[agent]))
