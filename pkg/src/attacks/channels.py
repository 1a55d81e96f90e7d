"""Channel views: what each consumer actually receives at a step."""

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from src.attacks.base import AttackChannel


@dataclass(frozen=True, eq=False)
class AttackInjections:
    """Gated injections precomputed on the whole time grid.

    Attributes:
        actuator: (T, N, n) kappa * u^a per agent
        sensor: (T, N, n) lambda * x^a per agent
        neighbour: (T, N, N, n); neighbour[t, i, j] corrupts x_j as received by i
        flags: (T, n_attacks) window indicator per declared attack
        ids: Attack identifiers in declaration order
    """

    actuator: np.ndarray
    sensor: np.ndarray
    neighbour: np.ndarray
    flags: np.ndarray
    ids: tuple

    @classmethod
    def build(
        cls, channels: Sequence[AttackChannel], times: np.ndarray, n_agents: int, state_dim: int
    ) -> "AttackInjections":
        """Evaluate every channel over ``times`` and sum per target."""
        steps = len(times)
        actuator = np.zeros((steps, n_agents, state_dim))
        sensor = np.zeros((steps, n_agents, state_dim))
        neighbour = np.zeros((steps, n_agents, n_agents, state_dim))
        flags = np.zeros((steps, len(channels)), dtype=bool)
        for column, channel in enumerate(channels):
            spec = channel.spec
            flags[:, column] = channel.gate(times) > 0.0
            injected = channel.injection(times)
            if channel.kind == "actuator":
                actuator[:, spec.target] += injected
            elif channel.kind == "sensor":
                sensor[:, spec.target] += injected
            else:
                neighbour[:, spec.target, spec.source] += injected
        return cls(actuator, sensor, neighbour, flags, tuple(c.spec.id for c in channels))

    @classmethod
    def empty(cls, steps: int, n_agents: int, state_dim: int) -> "AttackInjections":
        return cls.build([], np.zeros(steps), n_agents, state_dim)

    def at(self, step: int) -> "StepInjections":
        """Slice the injections of a single step."""
        return StepInjections(self.actuator[step], self.sensor[step], self.neighbour[step])


@dataclass(frozen=True, eq=False)
class StepInjections:
    """Injections active at one step: (N, n), (N, n) and (N, N, n)."""

    actuator: np.ndarray
    sensor: np.ndarray
    neighbour: np.ndarray


@dataclass(frozen=True, eq=False)
class ChannelView:
    """Possibly corrupted values delivered to each consumer.

    Attributes:
        sensor: (N, n) x^c_i seen by agent i's controller, network and observer
        actuator: (N, n) u^c_i delivered to agent i's plant
        neighbour: (N, N, n); neighbour[i, j] is x_bar^c_j as received by agent i
    """

    sensor: np.ndarray
    actuator: np.ndarray
    neighbour: np.ndarray


def sense(states: np.ndarray, injections: StepInjections) -> ChannelView:
    """Form the sensor and neighbour views of the true states.

    Outgoing messages carry the true state of the sender; only the targeted
    edge sees a neighbour injection. The actuator view is filled later by
    ``actuate``.
    """
    received = np.broadcast_to(states, injections.neighbour.shape) + injections.neighbour
    return ChannelView(
        sensor=states + injections.sensor,
        actuator=np.zeros_like(states),
        neighbour=received,
    )


def actuate(view: ChannelView, u: np.ndarray, injections: StepInjections) -> ChannelView:
    """Return the view with the corrupted control inputs filled in."""
    return ChannelView(view.sensor, u + injections.actuator, view.neighbour)
