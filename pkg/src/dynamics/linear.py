"""Linear dynamics f(x) = A x, mainly used by oracle tests."""

from typing import Optional, Sequence

import numpy as np

from src.dynamics.base import AgentDynamics
from src.errors import ConfigurationError


class LinearDynamics(AgentDynamics):
    """f(x) = A x with A defaulting to the identity."""

    NAME = "linear"

    def __init__(self, state_dim: int, A: Optional[Sequence[Sequence[float]]] = None):
        """Initialize the model.

        Args:
            state_dim: Agent state dimension n
            A: n x n system matrix (identity when omitted)
        """
        super().__init__(state_dim)
        self.A = np.eye(state_dim) if A is None else np.array(A, dtype=float)
        if self.A.shape != (state_dim, state_dim):
            raise ConfigurationError(f"linear dynamics need an {state_dim}x{state_dim} A, got {self.A.shape}")

    @property
    def name(self) -> str:
        return self.NAME

    @property
    def settings(self):
        return {"name": self.name, "state_dim": self.state_dim, "A": self.A.tolist()}

    def drift(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x, dtype=float) @ self.A.T
