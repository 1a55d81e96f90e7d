"""Two-dimensional rational coupling benchmark."""

import numpy as np

from src.dynamics.base import AgentDynamics
from src.errors import ConfigurationError


class RationalCouplingDynamics(AgentDynamics):
    """f(x) = [x2 / (1 + x2^2), x1 / (1 + x2^2)], locally Lipschitz on bounded sets."""

    NAME = "paper_ex1"

    def __init__(self, state_dim: int = 2):
        if state_dim != 2:
            raise ConfigurationError(f"{self.NAME} dynamics require state_dim = 2, got {state_dim}")
        super().__init__(state_dim)

    @property
    def name(self) -> str:
        return self.NAME

    @property
    def settings(self):
        return {"name": self.name, "state_dim": self.state_dim}

    def drift(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        scale = 1.0 / (1.0 + x[..., 1] ** 2)
        return np.stack((x[..., 1] * scale, x[..., 0] * scale), axis=-1)
