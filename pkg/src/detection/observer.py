"""Neural-network observer and attack detection residual."""

from dataclasses import dataclass

import numpy as np

from src.errors import DimensionError


@dataclass(frozen=True, eq=False)
class ObserverState:
    """Observer estimates and the residuals they produce.

    Attributes:
        x_hat: (N, n) observer estimates
        residual: (N, n) x - x_hat against the true plant state
    """

    x_hat: np.ndarray
    residual: np.ndarray

    @classmethod
    def initial(cls, states: np.ndarray) -> "ObserverState":
        """Observer started on the true initial state, so the residual starts at zero."""
        states = np.array(states, dtype=float)
        return cls(x_hat=states.copy(), residual=np.zeros_like(states))

    def advance(self, x_hat_next: np.ndarray, x_next: np.ndarray) -> "ObserverState":
        """Move to the next step; the residual is always recomputed, never integrated."""
        return ObserverState(x_hat=x_hat_next, residual=x_next - x_hat_next)


def observer_step(
    x_sensed: np.ndarray,
    x_hat: np.ndarray,
    u: np.ndarray,
    e: np.ndarray,
    f_hat: np.ndarray,
    observer_gain: np.ndarray,
) -> np.ndarray:
    """Next observer estimate x_hat+ = f_hat + u - G (x - x_hat) - e.

    Works for one agent (all arguments of shape (n,)) or a bank of agents
    (shape (N, n)); ``observer_gain`` holds the diagonal entries of G_i.

    Args:
        x_sensed: State as measured by the agent's sensor
        x_hat: Current observer estimate
        u: Control input computed by the agent (before any actuator corruption)
        e: Local formation error computed by the agent
        f_hat: Network estimate W_hat^T phi(x_sensed)
        observer_gain: Diagonal of G_i

    Returns:
        Next observer estimate

    Raises:
        DimensionError: If shapes disagree
    """
    arrays = [np.asarray(a, dtype=float) for a in (x_sensed, x_hat, u, e, f_hat, observer_gain)]
    shape = arrays[0].shape
    if any(a.shape != shape for a in arrays):
        raise DimensionError(f"observer inputs have shapes {[a.shape for a in arrays]}")
    x_sensed, x_hat, u, e, f_hat, observer_gain = arrays
    return f_hat + u - observer_gain * (x_sensed - x_hat) - e


def residual_norms(residuals: np.ndarray) -> np.ndarray:
    """Per-agent infinity norms over the last axis."""
    return np.abs(np.asarray(residuals, dtype=float)).max(axis=-1)
