"""Gaussian radial basis function network and its discrete tuning law.

All functions broadcast over a leading agent axis, so the same call serves a
single agent (x of shape (n,), weights of shape (m, n)) or a bank of agents
(x of shape (N, n), weights of shape (N, m, n)).
"""

import itertools
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from src.errors import DimensionError, NonFiniteError


@dataclass(frozen=True, eq=False)
class RbfBasis:
    """Centers and widths of the Gaussian neurons.

    Attributes:
        centers: (m, n) array, one center per neuron
        widths: (m,) array of strictly positive widths
    """

    centers: np.ndarray
    widths: np.ndarray

    def __post_init__(self):
        centers = np.array(self.centers, dtype=float)
        widths = np.array(self.widths, dtype=float)
        if centers.ndim != 2 or centers.shape[0] < 1:
            raise DimensionError(f"centers must be a non-empty (m, n) array, got {centers.shape}")
        if widths.shape != (centers.shape[0],):
            raise DimensionError(f"widths must have shape ({centers.shape[0]},), got {widths.shape}")
        if np.any(widths <= 0.0):
            raise ValueError("RBF widths must be strictly positive")
        centers.setflags(write=False)
        widths.setflags(write=False)
        object.__setattr__(self, "centers", centers)
        object.__setattr__(self, "widths", widths)

    @classmethod
    def grid(
        cls,
        state_dim: int,
        extent: Tuple[float, float] = (-5.0, 5.0),
        per_axis: int = 3,
        width: float = 10.0,
    ) -> "RbfBasis":
        """Evenly spaced centers on a hypercube grid, one shared width.

        Args:
            state_dim: State dimension n
            extent: (low, high) bounds applied on every axis
            per_axis: Number of centers per axis
            width: Width p_j of every neuron

        Returns:
            Basis with per_axis ** state_dim neurons
        """
        axis = np.linspace(extent[0], extent[1], per_axis)
        centers = np.array(list(itertools.product(axis, repeat=state_dim)))
        return cls(centers, np.full(len(centers), float(width)))

    @property
    def n_neurons(self) -> int:
        return self.centers.shape[0]

    @property
    def state_dim(self) -> int:
        return self.centers.shape[1]

    @property
    def phi_max(self) -> float:
        """Bound on ||phi(x)||; every activation lies in (0, 1]."""
        return math.sqrt(self.n_neurons)


@dataclass(frozen=True)
class TuningParams:
    """Learning gain alpha and leakage gamma (F_i = gamma * I)."""

    alpha: float
    gamma: float


def activation(basis: RbfBasis, x: np.ndarray) -> np.ndarray:
    """Evaluate exp(-(x - m_j)^T (x - m_j) / p_j) for every neuron.

    Args:
        basis: Network basis
        x: State of shape (..., n)

    Returns:
        Activations of shape (..., m)
    """
    x = np.asarray(x, dtype=float)
    if x.shape[-1:] != (basis.state_dim,):
        raise DimensionError(f"state has shape {x.shape}, basis expects last axis {basis.state_dim}")
    diff = x[..., None, :] - basis.centers
    return np.exp(-np.einsum("...kn,...kn->...k", diff, diff) / basis.widths)


def project(weights: np.ndarray, phi: np.ndarray) -> np.ndarray:
    """Return W^T phi for matching weight and activation arrays."""
    weights = np.asarray(weights, dtype=float)
    if weights.shape[-2] != phi.shape[-1]:
        raise DimensionError(f"weights {weights.shape} do not match activations {phi.shape}")
    return np.einsum("...k,...kn->...n", phi, weights)


def estimate(basis: RbfBasis, weights: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Estimate the unknown nonlinearity as W_hat^T phi(x)."""
    weights = np.asarray(weights, dtype=float)
    if weights.shape[-2:] != (basis.n_neurons, basis.state_dim):
        raise DimensionError(
            f"weights have shape {weights.shape}, expected (..., {basis.n_neurons}, {basis.state_dim})"
        )
    return project(weights, activation(basis, x))


def prediction_error_hbar(x_next: np.ndarray, u: np.ndarray, f_hat: np.ndarray) -> np.ndarray:
    """One-step prediction error x+ - u - f_hat.

    Under x+ = f(x) + u + w this equals the (unmeasurable) tuning signal
    W_tilde^T phi + eps + w.
    """
    x_next, u, f_hat = (np.asarray(a, dtype=float) for a in (x_next, u, f_hat))
    if not (x_next.shape == u.shape == f_hat.shape):
        raise DimensionError(f"shape mismatch: {x_next.shape}, {u.shape}, {f_hat.shape}")
    return x_next - u - f_hat


def tune_weights(
    weights: np.ndarray, phi: np.ndarray, hbar: np.ndarray, params: TuningParams
) -> np.ndarray:
    """One step of W+ = W + alpha * phi * hbar^T - gamma * W.

    Raises:
        NonFiniteError: If any input is NaN or infinite
    """
    weights, phi, hbar = (np.asarray(a, dtype=float) for a in (weights, phi, hbar))
    if weights.shape[-2:] != phi.shape[-1:] + hbar.shape[-1:]:
        raise DimensionError(f"weights {weights.shape} vs phi {phi.shape} and hbar {hbar.shape}")
    if not (np.all(np.isfinite(weights)) and np.all(np.isfinite(phi)) and np.all(np.isfinite(hbar))):
        raise NonFiniteError("non-finite input to the weight tuning law")
    return weights + params.alpha * phi[..., :, None] * hbar[..., None, :] - params.gamma * weights


class RbfNetwork:
    """A bank of per-agent RBF networks sharing one basis layout.

    The weight array has shape (N, m, n); agent i owns ``weights[i]``.
    """

    def __init__(self, basis: RbfBasis, n_agents: int, weights: Optional[np.ndarray] = None):
        """Initialize the bank.

        Args:
            basis: Shared basis
            n_agents: Number of agents N
            weights: Optional initial weights; zeros when omitted
        """
        self.basis = basis
        shape = (n_agents, basis.n_neurons, basis.state_dim)
        self.weights = np.zeros(shape) if weights is None else np.array(weights, dtype=float)
        if self.weights.shape != shape:
            raise DimensionError(f"weights have shape {self.weights.shape}, expected {shape}")

    def activation(self, x: np.ndarray) -> np.ndarray:
        return activation(self.basis, x)

    def estimate(self, x: np.ndarray, agent: Optional[int] = None) -> np.ndarray:
        """W_hat^T phi(x) for one agent (x of shape (n,)) or all agents (x of shape (N, n))."""
        weights = self.weights if agent is None else self.weights[agent]
        return estimate(self.basis, weights, x)

    def tune(self, phi: np.ndarray, hbar: np.ndarray, params: TuningParams) -> None:
        """Advance every agent's weights by one tuning step."""
        self.weights = tune_weights(self.weights, phi, hbar, params)

    def frobenius_norms(self) -> np.ndarray:
        """||W_hat_i||_F for every agent."""
        return np.sqrt(np.einsum("ikn,ikn->i", self.weights, self.weights))
