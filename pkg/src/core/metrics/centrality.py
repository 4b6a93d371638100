"""Degree, closeness, betweenness and eigenvector centralities.

Direction conventions on the cross-holdings digraph (tail = investor,
head = investee):

- closeness uses incoming shortest paths, i.e. distances from every node
  toward ``u``; unreachable nodes are handled with reachable-set scaling
- betweenness counts directed shortest paths over ordered pairs
- eigenvector centrality scores a node by the scores of the nodes pointing
  at it (x = A^T x)

Passing ``undirected=True`` collapses direction first; undirected
betweenness then counts unordered pairs.
"""

from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Tuple

import networkx as nx
import numpy as np
import pandas as pd
import scipy.sparse as sp

from src.config import settings
from src.core.exceptions import DegenerateGraph, NoConvergence
from src.core.netcore import DirectedWeightedGraph
from src.utils import get_logger

logger = get_logger(__name__)


def degree_centrality(
    g: DirectedWeightedGraph, undirected: bool = False
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Raw degree counts.

    Returns:
        (in_degree, out_degree); with ``undirected=True`` both entries are the
        count of distinct neighbours.
    """
    if undirected:
        graph = g.to_networkx(undirected=True)
        degree = np.array([graph.degree(u) for u in range(g.n)], dtype=np.int64)
        return degree, degree.copy()
    return g.degrees()


def closeness_centrality(g: DirectedWeightedGraph, u: int, undirected: bool = False) -> float:
    """Closeness of ``u`` over unweighted incoming shortest paths.

    Computes (r - 1) / sum of distances, scaled by (r - 1) / (n - 1) where r
    counts the nodes reaching ``u`` (``u`` included). Collapses to
    (n - 1) / sum of distances when every node reaches ``u``.
    """
    graph = g.to_networkx(undirected=undirected)
    return float(nx.closeness_centrality(graph, u=u, wf_improved=True))


def closeness_all(g: DirectedWeightedGraph, undirected: bool = False) -> np.ndarray:
    graph = g.to_networkx(undirected=undirected)
    scores = nx.closeness_centrality(graph, wf_improved=True)
    return np.array([scores[u] for u in range(g.n)], dtype=float)


def betweenness_centrality(
    g: DirectedWeightedGraph,
    undirected: bool = False,
    samples: Optional[int] = None,
    seed: Optional[int] = None,
) -> np.ndarray:
    """Unnormalized shortest-path betweenness.

    ``samples`` estimates from that many source nodes (for large networks);
    the default is exact.
    """
    graph = g.to_networkx(undirected=undirected)
    k = samples if samples is not None and samples < g.n else None
    scores = nx.betweenness_centrality(graph, k=k, normalized=False, weight=None, seed=seed)
    return np.array([scores[u] for u in range(g.n)], dtype=float)


@dataclass
class EigenvectorResult:
    """Principal eigenvector with its eigenvalue estimate."""
    vector: np.ndarray
    eigenvalue: float
    iterations: int
    degenerate: bool = False

    def residual(self, matrix: sp.spmatrix) -> float:
        """Max-norm of M x - lambda x for the iteration matrix M."""
        return float(np.max(np.abs(matrix @ self.vector - self.eigenvalue * self.vector)))


def _iteration_matrix(g: DirectedWeightedGraph, undirected: bool, weighted: bool) -> sp.csr_matrix:
    adjacency = g.adjacency()
    if not weighted:
        adjacency = adjacency.unweighted()
    matrix = adjacency.matrix
    if undirected:
        matrix = matrix.maximum(matrix.T)
        return matrix.tocsr()
    # incoming direction: x_u = sum_v A_vu x_v
    return matrix.T.tocsr()


def eigenvector_matrix(
    g: DirectedWeightedGraph, undirected: bool = False, weighted: bool = False
) -> sp.csr_matrix:
    """The matrix whose principal eigenvector :func:`eigenvector_centrality` returns."""
    return _iteration_matrix(g, undirected, weighted)


def eigenvector_centrality(
    g: DirectedWeightedGraph,
    undirected: bool = False,
    weighted: bool = False,
    tol: Optional[float] = None,
    max_iter: Optional[int] = None,
) -> EigenvectorResult:
    """
    Principal eigenvector by power iteration.

    Iterates on M + I (same eigenvectors, no oscillation on bipartite or
    periodic structure) from the uniform vector, normalizing to unit
    Euclidean norm, until successive iterates differ by less than ``tol``
    in max-norm. Over several components the vector is kept on the one with
    the largest eigenvalue, the lowest node index breaking ties.

    Raises:
        DegenerateGraph: the graph has no edges
        NoConvergence: ``max_iter`` reached first
    """
    if g.m == 0:
        raise DegenerateGraph("Eigenvector centrality needs at least one edge")

    tol = settings.eigenvector_tolerance if tol is None else tol
    max_iter = settings.eigenvector_max_iterations if max_iter is None else max_iter
    matrix = _iteration_matrix(g, undirected, weighted)

    x = np.full(g.n, 1.0 / np.sqrt(g.n))
    delta = np.inf
    for iteration in range(1, max_iter + 1):
        y = matrix @ x + x
        norm = np.linalg.norm(y)
        if norm == 0.0:
            raise NoConvergence(iteration, float("nan"))
        y /= norm
        delta = float(np.max(np.abs(y - x)))
        x = y
        if delta < tol:
            components = _edge_components(g)
            if len(components) > 1:
                logger.warning(
                    f"Eigenvector centrality over {len(components)} components; "
                    "keeping the leading one"
                )
                x = _leading_component(matrix, x, components, tol)
            return EigenvectorResult(
                vector=np.clip(x, 0.0, None),
                eigenvalue=float(x @ (matrix @ x)),
                iterations=iteration,
                degenerate=len(components) > 1,
            )

    raise NoConvergence(max_iter, delta)


def _edge_components(g: DirectedWeightedGraph) -> List[List[int]]:
    """Weakly connected components among nodes that carry edges, lowest node first."""
    graph = nx.Graph()
    graph.add_edges_from(zip(g.tails.tolist(), g.heads.tolist()))
    return sorted((sorted(c) for c in nx.connected_components(graph)), key=lambda c: c[0])


def _leading_component(
    matrix: sp.csr_matrix, x: np.ndarray, components: List[List[int]], tol: float
) -> np.ndarray:
    """
    Restrict ``x`` to the component with the largest Rayleigh quotient.

    Components are invariant blocks of the matrix, so the restriction is
    still an eigenvector. Ties within ``tol`` go to the component holding
    the lowest node index.
    """
    best, best_value = None, -np.inf
    for nodes in components:
        part = np.zeros_like(x)
        part[nodes] = x[nodes]
        weight = float(part @ part)
        if weight <= tol * tol:
            continue
        value = float(part @ (matrix @ part)) / weight
        if value > best_value + tol:
            best, best_value = part, value
    if best is None:
        return x
    return best / np.linalg.norm(best)


@dataclass
class CentralityReport:
    """Per-node centralities for one network."""
    node_ids: Tuple[str, ...]
    degree_in: np.ndarray
    degree_out: np.ndarray
    closeness: np.ndarray
    betweenness: np.ndarray
    eigenvector: np.ndarray
    eigenvector_view: str = "incoming"
    notes: Dict[str, str] = field(default_factory=dict)

    @property
    def n(self) -> int:
        return len(self.node_ids)

    def maxima(self, exclude: Iterable[str] = ()) -> Dict[str, float]:
        """Maximum of each measure; degree normalized by (n - 1)."""
        skip = set(exclude)
        keep = np.array([node not in skip for node in self.node_ids], dtype=bool)
        if not keep.any():
            return {}
        scale = max(self.n - 1, 1)

        def top(values: np.ndarray) -> float:
            finite = values[keep]
            finite = finite[np.isfinite(finite)]
            return float(finite.max()) if len(finite) else float("nan")

        return {
            "degree_in": top(self.degree_in) / scale,
            "degree_out": top(self.degree_out) / scale,
            "closeness": top(self.closeness),
            "betweenness": top(self.betweenness),
            "eigenvector": top(self.eigenvector),
        }

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "node_id": list(self.node_ids),
                "degree_in": self.degree_in,
                "degree_out": self.degree_out,
                "closeness": self.closeness,
                "betweenness": self.betweenness,
                "eigenvector": self.eigenvector,
            }
        )


def centrality_report(
    g: DirectedWeightedGraph,
    undirected: bool = False,
    betweenness_samples: Optional[int] = None,
    seed: Optional[int] = None,
) -> CentralityReport:
    """All four centralities for one graph.

    When directed power iteration fails to converge (acyclic or periodic
    structure) the eigenvector column falls back to the undirected view and
    the report records it.
    """
    degree_in, degree_out = degree_centrality(g, undirected=undirected)
    closeness = closeness_all(g, undirected=undirected)
    betweenness = betweenness_centrality(
        g, undirected=undirected, samples=betweenness_samples, seed=seed
    )

    notes: Dict[str, str] = {}
    view = "undirected" if undirected else "incoming"
    if g.m == 0:
        eigenvector = np.zeros(g.n)
        notes["eigenvector"] = "graph has no edges"
    else:
        try:
            result = eigenvector_centrality(g, undirected=undirected)
        except NoConvergence as e:
            logger.warning(f"{e}; using the undirected view")
            view = "undirected"
            notes["eigenvector"] = str(e)
            try:
                result = eigenvector_centrality(g, undirected=True)
            except NoConvergence as inner:
                notes["eigenvector"] = str(inner)
                result = None
        if result is None:
            eigenvector = np.full(g.n, np.nan)
        else:
            eigenvector = result.vector
            if result.degenerate:
                notes["eigenvector_degenerate"] = "leading eigenspace spans several components"

    return CentralityReport(
        node_ids=g.node_ids,
        degree_in=degree_in,
        degree_out=degree_out,
        closeness=closeness,
        betweenness=betweenness,
        eigenvector=eigenvector,
        eigenvector_view=view,
        notes=notes,
    )
