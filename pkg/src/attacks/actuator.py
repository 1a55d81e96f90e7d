"""Injection on the actuator channel: u^c = u + kappa u^a."""

import numpy as np

from src.attacks.base import AttackChannel, AttackSpec


class ActuatorAttack(AttackChannel):
    """Corrupts the control input delivered to the plant."""

    @property
    def kind(self) -> str:
        return "actuator"

    def apply(self, value: np.ndarray, t: float) -> np.ndarray:
        return value + self.injection(t)


def apply_actuator(u: np.ndarray, spec: AttackSpec, t: float) -> np.ndarray:
    """Return u + kappa(t) u^a(t)."""
    return ActuatorAttack(spec).apply(np.asarray(u, dtype=float), t)
