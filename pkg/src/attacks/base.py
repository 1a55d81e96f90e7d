"""Base class for false data injection channels."""

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Any, Dict, Optional, Tuple

import numpy as np

from src.errors import ConfigurationError
from src.utils.expressions import TimeLike, VectorExpression

ATTACK_KINDS = ("actuator", "sensor", "neighbour")


@dataclass(frozen=True)
class AttackSpec:
    """Declarative description of one injection.

    Attributes:
        id: Identifier used on the command line and in reports
        kind: "actuator", "sensor" or "neighbour"
        target: Zero-based index of the attacked agent i
        source: Zero-based sender j of the corrupted edge j -> i (neighbour only)
        window: (t_start, t_end) in seconds, both inclusive
        signal: Expression source per state component
    """

    id: str
    kind: str
    target: int
    window: Tuple[float, float]
    signal: Tuple[str, ...]
    source: Optional[int] = None

    def __post_init__(self):
        if self.kind not in ATTACK_KINDS:
            raise ConfigurationError(f"attack {self.id!r}: unknown kind {self.kind!r}")
        if self.window[0] > self.window[1]:
            raise ConfigurationError(f"attack {self.id!r}: window start after end")
        if (self.kind == "neighbour") != (self.source is not None):
            raise ConfigurationError(f"attack {self.id!r}: source is required for, and only for, neighbour attacks")


class AttackChannel(ABC):
    """An additive corruption gated by a time window."""

    def __init__(self, spec: AttackSpec):
        """Initialize the channel.

        Args:
            spec: Attack declaration
        """
        self.spec = spec
        self.signal = VectorExpression.parse(spec.signal)

    @property
    @abstractmethod
    def kind(self) -> str:
        """Return the channel kind."""
        pass

    @abstractmethod
    def apply(self, value: np.ndarray, t: float) -> np.ndarray:
        """Return the value delivered through the channel at time t.

        Args:
            value: Uncorrupted value
            t: Time in seconds

        Returns:
            Possibly corrupted value
        """
        pass

    @property
    def settings(self) -> Dict[str, Any]:
        """Return the attack declaration as a dictionary."""
        return {
            "id": self.spec.id,
            "kind": self.kind,
            "target": self.spec.target,
            "source": self.spec.source,
            "window": list(self.spec.window),
            "signal": list(self.spec.signal),
        }

    def gate(self, t: TimeLike) -> TimeLike:
        """1 inside the window, 0 outside (kappa, lambda or phi)."""
        inside = (t >= self.spec.window[0]) & (t <= self.spec.window[1])
        return inside.astype(float) if isinstance(inside, np.ndarray) else float(inside)

    def injection(self, t: TimeLike) -> np.ndarray:
        """Gated injected signal, shape (n,) or (len(t), n)."""
        gate = self.gate(t)
        if isinstance(gate, np.ndarray):
            return gate[:, None] * self.signal(t)
        return gate * self.signal(t)

    def validate(self, n_agents: int, state_dim: int, graph=None) -> None:
        """Check the declaration against the scenario it belongs to."""
        if not 0 <= self.spec.target < n_agents:
            raise ConfigurationError(f"attack {self.spec.id!r}: target agent does not exist")
        if self.signal.dim != state_dim:
            raise ConfigurationError(
                f"attack {self.spec.id!r}: signal has {self.signal.dim} components, state_dim is {state_dim}"
            )
