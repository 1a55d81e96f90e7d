"""Formation errors and the distributed control law."""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from src.errors import ConfigurationError, DimensionError
from src.network.rbf import RbfNetwork
from src.topology.graph import DirectedWeightedGraph, LaplacianBundle

CONTROL_LAWS = ("absolute", "incremental")


@dataclass(frozen=True, eq=False)
class FormationSpec:
    """Desired displacements d_i of each agent relative to the leader.

    Attributes:
        offsets: (N, n) array; row i is d_i
        d_max: Optional declared bound on the stacked offset norm
    """

    offsets: np.ndarray
    d_max: Optional[float] = None

    def __post_init__(self):
        offsets = np.array(self.offsets, dtype=float)
        if offsets.ndim != 2:
            raise DimensionError(f"offsets must be an (N, n) array, got {offsets.shape}")
        offsets.setflags(write=False)
        object.__setattr__(self, "offsets", offsets)
        if self.d_max is not None and self.stacked_norm > self.d_max:
            raise ConfigurationError(
                f"stacked offset norm {self.stacked_norm:.6g} exceeds declared d_max {self.d_max:.6g}"
            )

    @property
    def stacked_norm(self) -> float:
        return float(np.linalg.norm(self.offsets))

    def relative(self, i: int, j: int) -> np.ndarray:
        """d_ij = d_i - d_j."""
        return self.offsets[i] - self.offsets[j]


@dataclass(frozen=True, eq=False)
class ControlGains:
    """Controller and observer gains.

    Attributes:
        k: (N, n) diagonal entries of k_i
        c: Scalar feedback gain
        observer_gain: (N, n) diagonal entries of G_i
        law: "absolute" for u = -f_hat + c(x + k e), "incremental" for u = -f_hat + x + c k e
    """

    k: np.ndarray
    c: float
    observer_gain: np.ndarray
    law: str = "absolute"

    def __post_init__(self):
        k = np.array(self.k, dtype=float)
        observer_gain = np.array(self.observer_gain, dtype=float)
        if k.ndim != 2 or observer_gain.shape != k.shape:
            raise DimensionError(f"k {k.shape} and observer_gain {observer_gain.shape} must be (N, n)")
        if np.any(k < 0.0) or np.any(observer_gain < 0.0):
            raise ConfigurationError("gain diagonals must be nonnegative")
        if self.law not in CONTROL_LAWS:
            raise ConfigurationError(f"unknown control law {self.law!r}, expected one of {CONTROL_LAWS}")
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "observer_gain", observer_gain)

    @property
    def K(self) -> np.ndarray:
        """Block diagonal diag(k_1, ..., k_N)."""
        return np.diag(self.k.ravel())

    @property
    def G(self) -> np.ndarray:
        """Block diagonal diag(G_1, ..., G_N)."""
        return np.diag(self.observer_gain.ravel())


def local_error(
    i: int,
    states: np.ndarray,
    leader: np.ndarray,
    g: DirectedWeightedGraph,
    spec: FormationSpec,
) -> np.ndarray:
    """Local formation error e_i of agent i.

    e_i = sum_j a_ij (x_j - x_i - d_ij) + b_i (x_l - x_i - d_i) with d_ij = d_i - d_j,
    so every term vanishes once x_i = x_l - d_i for all agents.
    """
    states = np.asarray(states, dtype=float)
    leader = np.asarray(leader, dtype=float)
    if states.shape != spec.offsets.shape or leader.shape != states.shape[1:]:
        raise DimensionError(f"states {states.shape}, leader {leader.shape}, offsets {spec.offsets.shape}")
    e_i = g.pin_gains[i] * (leader - states[i] - spec.offsets[i])
    for j in g.neighbours(i):
        e_i = e_i + g.weights[i, j] * (states[j] - states[i] - spec.relative(i, j))
    return e_i


def formation_errors(
    sensed: np.ndarray,
    leader: np.ndarray,
    g: DirectedWeightedGraph,
    spec: FormationSpec,
    received: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Local formation errors of every agent as each agent computes them.

    Args:
        sensed: (N, n) own state as seen by each agent's sensor
        leader: (n,) leader state
        g: Communication graph
        spec: Formation offsets
        received: Optional (N, N, n) array, received[i, j] = value of x_j
            delivered to agent i; the sensed states are used when omitted

    Returns:
        (N, n) array of e_i
    """
    offsets = spec.offsets
    # x_i + d_i coincides with the leader in formation
    own = sensed + offsets
    if received is None:
        neighbour_term = g.weights @ own
    else:
        neighbour_term = np.einsum("ij,ijn->in", g.weights, received + offsets[None, :, :])
    return (
        neighbour_term
        - g.weights.sum(axis=1)[:, None] * own
        + g.pin_gains[:, None] * (leader - own)
    )


def tracking_error(states: np.ndarray, leader: np.ndarray, spec: FormationSpec) -> np.ndarray:
    """Stacked delta with delta_i = x_l - x_i - d_i."""
    return (np.asarray(leader, dtype=float) - np.asarray(states, dtype=float) - spec.offsets).reshape(-1)


def global_error(
    states: np.ndarray, leader: np.ndarray, bundle: LaplacianBundle, spec: FormationSpec
) -> np.ndarray:
    """Stacked formation error e = L_bar delta = -L_bar (x - 1 kron x_l + d)."""
    states = np.asarray(states, dtype=float)
    if states.shape != spec.offsets.shape or states.shape != (bundle.n_agents, bundle.state_dim):
        raise DimensionError(f"states {states.shape} do not match the bundle and offsets")
    deviation = states.reshape(-1) - np.tile(np.asarray(leader, dtype=float), bundle.n_agents) + spec.offsets.reshape(-1)
    return -bundle.L_bar @ deviation


def control_inputs(
    x: np.ndarray, e: np.ndarray, f_hat: np.ndarray, k: np.ndarray, c: float, law: str
) -> np.ndarray:
    """Evaluate the control law for matching arrays of states and errors."""
    if law == "incremental":
        return -f_hat + x + c * (k * e)
    return -f_hat + c * (x + k * e)


def control_law(
    i: int, x_i: np.ndarray, e_i: np.ndarray, net: RbfNetwork, gains: ControlGains
) -> np.ndarray:
    """Control input of agent i, u_i = -W_hat_i^T phi(x_i) + c(x_i + k_i e_i).

    With ``gains.law == "incremental"`` the state enters unscaled:
    u_i = -W_hat_i^T phi(x_i) + x_i + c k_i e_i.
    """
    x_i = np.asarray(x_i, dtype=float)
    e_i = np.asarray(e_i, dtype=float)
    if x_i.shape != e_i.shape or x_i.shape != gains.k[i].shape:
        raise DimensionError(f"x_i {x_i.shape}, e_i {e_i.shape}, k_i {gains.k[i].shape}")
    f_hat = net.estimate(x_i, agent=i)
    return control_inputs(x_i, e_i, f_hat, gains.k[i], gains.c, gains.law)
