"""Base class for agent dynamics."""

from abc import ABC, abstractmethod
from typing import Any, Dict

import numpy as np


class AgentDynamics(ABC):
    """Discrete-time agent model x+ = f(x) + u + w."""

    def __init__(self, state_dim: int):
        """Initialize the model.

        Args:
            state_dim: Agent state dimension n
        """
        self.state_dim = state_dim

    @abstractmethod
    def drift(self, x: np.ndarray) -> np.ndarray:
        """Evaluate the unknown nonlinearity f(x).

        Args:
            x: State of shape (..., n)

        Returns:
            f(x) with the same shape
        """
        pass

    @property
    @abstractmethod
    def name(self) -> str:
        """Return the registered model name."""
        pass

    @property
    @abstractmethod
    def settings(self) -> Dict[str, Any]:
        """Return model parameters as a dictionary."""
        pass

    def step(self, x: np.ndarray, u: np.ndarray, w: np.ndarray) -> np.ndarray:
        """Advance one sample: f(x) + u + w."""
        return self.drift(x) + u + w

    def __call__(self, x: np.ndarray, u: np.ndarray, w: np.ndarray) -> np.ndarray:
        return self.step(x, u, w)
