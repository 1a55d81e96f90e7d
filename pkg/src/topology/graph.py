"""Weighted directed communication graph with leader pinning.

Edge weights follow the receiver-first convention: ``weights[i, j] = a_ij`` is
the weight with which agent ``i`` listens to agent ``j`` (edge ``j -> i``).
"""

import logging
from dataclasses import dataclass
from typing import Iterable, Tuple

import networkx as nx
import numpy as np

from src.errors import DimensionError, GraphConstructionError

logger = logging.getLogger(__name__)


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=float)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class DirectedWeightedGraph:
    """Follower digraph plus pinning gains towards the leader.

    Attributes:
        weights: N x N nonnegative matrix, weights[i, j] = a_ij (edge j -> i)
        pin_gains: length-N nonnegative vector b_i
    """

    weights: np.ndarray
    pin_gains: np.ndarray

    def __post_init__(self):
        weights = _frozen(self.weights)
        pin_gains = _frozen(self.pin_gains)
        if weights.ndim != 2 or weights.shape[0] != weights.shape[1] or weights.shape[0] < 1:
            raise DimensionError(f"weights must be a non-empty square matrix, got {weights.shape}")
        if pin_gains.shape != (weights.shape[0],):
            raise DimensionError(
                f"pin_gains must have length {weights.shape[0]}, got {pin_gains.shape}"
            )
        if not (np.all(np.isfinite(weights)) and np.all(np.isfinite(pin_gains))):
            raise GraphConstructionError("weights and pin gains must be finite")
        if np.any(np.diag(weights) != 0.0):
            raise GraphConstructionError("self loops are not allowed (a_ii must be 0)")
        if np.any(weights < 0.0) or np.any(pin_gains < 0.0):
            raise GraphConstructionError("edge weights and pin gains must be nonnegative")
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "pin_gains", pin_gains)

    @classmethod
    def from_edges(
        cls,
        n_agents: int,
        edges: Iterable[Tuple[int, int, float]],
        pin_gains: Iterable[float],
    ) -> "DirectedWeightedGraph":
        """Build a graph from (source, target, weight) triples.

        Args:
            n_agents: Number of followers
            edges: Zero-based (source, target, weight); target receives source's state
            pin_gains: Pinning gain b_i per agent

        Returns:
            The constructed graph
        """
        weights = np.zeros((n_agents, n_agents))
        for source, target, weight in edges:
            if not (0 <= source < n_agents and 0 <= target < n_agents):
                raise GraphConstructionError(f"edge {source}->{target} references a missing agent")
            weights[target, source] = weight
        return cls(weights, np.asarray(list(pin_gains), dtype=float))

    @property
    def n_agents(self) -> int:
        """Number of followers."""
        return self.weights.shape[0]

    def has_edge(self, source: int, target: int) -> bool:
        """Return whether ``target`` receives ``source``'s state."""
        return bool(self.weights[target, source] > 0.0)

    def neighbours(self, i: int) -> np.ndarray:
        """Indices j with a_ij > 0 (the in-neighbours of agent i)."""
        return np.flatnonzero(self.weights[i] > 0.0)

    def to_networkx(self) -> nx.DiGraph:
        """Return the follower digraph with edges oriented sender -> receiver."""
        digraph = nx.DiGraph()
        digraph.add_nodes_from(range(self.n_agents))
        for target, source in zip(*np.nonzero(self.weights > 0.0)):
            digraph.add_edge(int(source), int(target), weight=float(self.weights[target, source]))
        return digraph


@dataclass(frozen=True, eq=False)
class LaplacianBundle:
    """Laplacian matrices and the spectral quantities derived from them.

    Attributes:
        L: In-degree Laplacian, N x N
        B: diag(b_i), N x N
        L_bar: (L + B) kron I_n, nN x nN
        sigma_min_LB: Smallest singular value of L + B
        sigma_max_Lbar: Largest singular value of L_bar
        state_dim: State dimension n used for the lift
    """

    L: np.ndarray
    B: np.ndarray
    L_bar: np.ndarray
    sigma_min_LB: float
    sigma_max_Lbar: float
    state_dim: int

    @property
    def LB(self) -> np.ndarray:
        """L + B."""
        return self.L + self.B

    @property
    def n_agents(self) -> int:
        return self.L.shape[0]

    def lift(self, stacked: np.ndarray) -> np.ndarray:
        """Apply L_bar to a stacked nN vector without forming the Kronecker product."""
        blocks = np.asarray(stacked, dtype=float).reshape(self.n_agents, self.state_dim)
        return (self.LB @ blocks).reshape(-1)


def in_degree(g: DirectedWeightedGraph, i: int) -> float:
    """Weighted in-degree of agent i.

    Args:
        g: Communication graph
        i: Zero-based agent index

    Returns:
        Sum of a_ij over the in-neighbours of i

    Raises:
        IndexError: If i is out of range
    """
    if not 0 <= i < g.n_agents:
        raise IndexError(f"agent index {i} out of range for {g.n_agents} agents")
    return float(g.weights[i].sum())


def is_strongly_connected(g: DirectedWeightedGraph) -> bool:
    """Return whether a directed path exists between every ordered pair of followers."""
    return nx.is_strongly_connected(g.to_networkx())


def leader_reaches_all(g: DirectedWeightedGraph) -> bool:
    """Return whether every follower is reachable from some pinned agent."""
    digraph = g.to_networkx()
    reached = set()
    for pinned in np.flatnonzero(g.pin_gains > 0.0):
        reached.add(int(pinned))
        reached.update(nx.descendants(digraph, int(pinned)))
    return len(reached) == g.n_agents


def build_laplacian(g: DirectedWeightedGraph, state_dim: int) -> LaplacianBundle:
    """Construct L, B, L_bar and their singular values.

    Args:
        g: Communication graph
        state_dim: Agent state dimension n

    Returns:
        LaplacianBundle for the graph

    Raises:
        GraphConstructionError: No pinned agent, or the follower graph is not
            strongly connected
    """
    if state_dim < 1:
        raise DimensionError(f"state_dim must be positive, got {state_dim}")
    if not np.any(g.pin_gains > 0.0):
        raise GraphConstructionError("no agent is pinned to the leader (B = 0)")
    if not is_strongly_connected(g):
        raise GraphConstructionError("follower graph is not strongly connected")

    L = np.diag(g.weights.sum(axis=1)) - g.weights
    B = np.diag(g.pin_gains)
    singular_values = np.linalg.svd(L + B, compute_uv=False)
    bundle = LaplacianBundle(
        L=_frozen(L),
        B=_frozen(B),
        L_bar=_frozen(np.kron(L + B, np.eye(state_dim))),
        sigma_min_LB=float(singular_values.min()),
        # kron with the identity leaves the singular values unchanged
        sigma_max_Lbar=float(singular_values.max()),
        state_dim=state_dim,
    )
    logger.debug(
        "laplacian built: sigma_min(L+B)=%.6g sigma_max(L_bar)=%.6g",
        bundle.sigma_min_LB,
        bundle.sigma_max_Lbar,
    )
    return bundle
