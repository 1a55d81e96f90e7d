"""Injection on one directed neighbour edge: x_bar^c_j = x_bar_j + phi x_bar^a_j.

Only the targeted receiver sees the corrupted value; every other receiver of
agent j's state gets the true x_j.
"""

import numpy as np

from src.attacks.base import AttackChannel, AttackSpec
from src.errors import ConfigurationError


class NeighbourAttack(AttackChannel):
    """Corrupts the state of agent ``source`` as received by agent ``target``."""

    @property
    def kind(self) -> str:
        return "neighbour"

    def apply(self, value: np.ndarray, t: float) -> np.ndarray:
        return value + self.injection(t)

    def validate(self, n_agents: int, state_dim: int, graph=None) -> None:
        super().validate(n_agents, state_dim, graph)
        source, target = self.spec.source, self.spec.target
        if not 0 <= source < n_agents:
            raise ConfigurationError(f"attack {self.spec.id!r}: source agent does not exist")
        if graph is not None and not graph.has_edge(source, target):
            raise ConfigurationError(
                f"attack {self.spec.id!r}: edge {source + 1}->{target + 1} does not exist"
            )


def apply_neighbour(x_bar: np.ndarray, spec: AttackSpec, t: float, graph=None) -> np.ndarray:
    """Return x_bar + phi(t) x_bar^a(t) for the targeted edge.

    Raises:
        ConfigurationError: If a graph is given and the edge is missing
    """
    attack = NeighbourAttack(spec)
    if graph is not None:
        attack.validate(graph.n_agents, len(spec.signal), graph)
    return attack.apply(np.asarray(x_bar, dtype=float), t)
