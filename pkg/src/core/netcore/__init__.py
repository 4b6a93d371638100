"""Graph substrate shared by the cross-holdings and fund-asset networks."""

from .graphs import (
    AdjacencyMatrix,
    BipartiteGraph,
    DirectedWeightedGraph,
    NodeKind,
    build_bipartite,
    build_digraph,
)

__all__ = [
    "AdjacencyMatrix",
    "BipartiteGraph",
    "DirectedWeightedGraph",
    "NodeKind",
    "build_bipartite",
    "build_digraph",
]
