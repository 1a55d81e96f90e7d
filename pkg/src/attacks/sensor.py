"""Injection on the sensor channel: x^c = x + lambda x^a.

The corrupted reading feeds the agent's controller, its network input and its
observer correction; the plant itself is untouched.
"""

import numpy as np

from src.attacks.base import AttackChannel, AttackSpec


class SensorAttack(AttackChannel):
    """Corrupts the agent's own state measurement."""

    @property
    def kind(self) -> str:
        return "sensor"

    def apply(self, value: np.ndarray, t: float) -> np.ndarray:
        return value + self.injection(t)


def apply_sensor(x: np.ndarray, spec: AttackSpec, t: float) -> np.ndarray:
    """Return x + lambda(t) x^a(t)."""
    return SensorAttack(spec).apply(np.asarray(x, dtype=float), t)
