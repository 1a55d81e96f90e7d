"""Communication topology: graph, Laplacian and reachability checks."""

from .graph import (
    DirectedWeightedGraph,
    LaplacianBundle,
    build_laplacian,
    in_degree,
    is_strongly_connected,
    leader_reaches_all,
)

__all__ = [
    "DirectedWeightedGraph",
    "LaplacianBundle",
    "build_laplacian",
    "in_degree",
    "is_strongly_connected",
    "leader_reaches_all",
]
