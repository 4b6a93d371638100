"""Graph substrate: directed weighted graphs and fund-asset bipartite graphs.

Both graphs are immutable once built and keep their edges in sparse
coordinate form sorted by (tail, head). Node identity is a dense integer;
optional external identifiers ride along for reporting and for comparing
snapshots across periods.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Iterator, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np
import scipy.sparse as sp

from src.core.exceptions import (
    DegenerateGraph,
    DuplicateEdge,
    NegativeWeight,
    NodeOutOfRange,
    SelfLoop,
)
from src.utils import get_logger

logger = get_logger(__name__)

EdgeTriple = Tuple[int, int, float]


class NodeKind(str, Enum):
    """Kinds of nodes in the two networks."""
    FUND = "fund"
    ASSET = "asset"


@dataclass(frozen=True)
class AdjacencyMatrix:
    """Sparse adjacency view with labelled dimensions.

    Entries equal edge weights; every edge is a stored entry, so ``nnz``
    equals the edge count even for zero-weight edges.
    """
    matrix: sp.csr_matrix
    row_kind: NodeKind
    col_kind: NodeKind

    @property
    def shape(self) -> Tuple[int, int]:
        return self.matrix.shape

    @property
    def nnz(self) -> int:
        return int(self.matrix.nnz)

    def to_dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def unweighted(self) -> "AdjacencyMatrix":
        pattern = self.matrix.copy()
        pattern.data = np.ones_like(pattern.data)
        return AdjacencyMatrix(pattern, self.row_kind, self.col_kind)

    def to_triplets(self) -> str:
        """Coordinate-triplet text (``row col value`` per line) for debugging."""
        coo = self.matrix.tocoo()
        return "\n".join(
            f"{int(r)} {int(c)} {float(v)!r}" for r, c, v in zip(coo.row, coo.col, coo.data)
        )


def _as_arrays(edge_list: Iterable[EdgeTriple]) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    edges = list(edge_list)
    if not edges:
        return (np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64), np.zeros(0, dtype=float))
    tails, heads, weights = zip(*edges)
    return (
        np.asarray(tails, dtype=np.int64),
        np.asarray(heads, dtype=np.int64),
        np.asarray(weights, dtype=float),
    )


def _sorted_pairs(
    first: np.ndarray, second: np.ndarray, weights: np.ndarray
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    order = np.lexsort((second, first))
    return first[order], second[order], weights[order]


def _first_duplicate(first: np.ndarray, second: np.ndarray) -> Optional[Tuple[int, int]]:
    if len(first) < 2:
        return None
    same = (first[1:] == first[:-1]) & (second[1:] == second[:-1])
    hits = np.flatnonzero(same)
    if len(hits) == 0:
        return None
    return int(first[hits[0]]), int(second[hits[0]])


class DirectedWeightedGraph:
    """Directed graph with non-negative weights, no self-loops, no parallel edges."""

    def __init__(
        self,
        n: int,
        tails: np.ndarray,
        heads: np.ndarray,
        weights: np.ndarray,
        node_ids: Optional[Sequence[str]] = None,
    ):
        # callers go through build_digraph, which validates
        self.n = int(n)
        self.tails = tails
        self.heads = heads
        self.weights = weights
        self.node_ids: Tuple[str, ...] = (
            tuple(str(x) for x in node_ids) if node_ids is not None else tuple(str(i) for i in range(self.n))
        )
        for arr in (self.tails, self.heads, self.weights):
            arr.setflags(write=False)

    @property
    def m(self) -> int:
        return int(len(self.tails))

    def edges(self) -> Iterator[EdgeTriple]:
        for t, h, w in zip(self.tails, self.heads, self.weights):
            yield int(t), int(h), float(w)

    def edge_set(self) -> set:
        """Edges as ordered pairs of external ids, weights ignored."""
        ids = self.node_ids
        return {(ids[t], ids[h]) for t, h in zip(self.tails, self.heads)}

    def node_set(self) -> set:
        return set(self.node_ids)

    def adjacency(self) -> AdjacencyMatrix:
        matrix = sp.coo_matrix(
            (self.weights, (self.tails, self.heads)), shape=(self.n, self.n)
        ).tocsr()
        return AdjacencyMatrix(matrix, NodeKind.FUND, NodeKind.FUND)

    def degrees(self) -> Tuple[np.ndarray, np.ndarray]:
        """(in_degree, out_degree) edge counts per node."""
        in_degree = np.bincount(self.heads, minlength=self.n).astype(np.int64)
        out_degree = np.bincount(self.tails, minlength=self.n).astype(np.int64)
        return in_degree, out_degree

    def density(self) -> float:
        if self.n < 2:
            raise DegenerateGraph(f"Density needs at least 2 nodes, got {self.n}")
        return self.m / (self.n * (self.n - 1))

    def to_networkx(self, undirected: bool = False) -> nx.Graph:
        graph = nx.DiGraph()
        graph.add_nodes_from(range(self.n))
        graph.add_weighted_edges_from(self.edges())
        if undirected:
            return graph.to_undirected()
        return graph

    @classmethod
    def from_adjacency(
        cls, adjacency: AdjacencyMatrix, node_ids: Optional[Sequence[str]] = None
    ) -> "DirectedWeightedGraph":
        coo = adjacency.matrix.tocoo()
        return build_digraph(
            zip(coo.row.tolist(), coo.col.tolist(), coo.data.tolist()),
            n=adjacency.shape[0],
            node_ids=node_ids,
        )

    def __repr__(self) -> str:
        return f"DirectedWeightedGraph(n={self.n}, m={self.m})"


def build_digraph(
    edge_list: Iterable[EdgeTriple],
    n: Optional[int] = None,
    node_ids: Optional[Sequence[str]] = None,
) -> DirectedWeightedGraph:
    """
    Build a validated directed weighted graph.

    Args:
        edge_list: (tail, head, weight) triples
        n: Node count; defaults to the largest index plus one
        node_ids: Optional external identifiers, one per node

    Returns:
        Immutable graph with edges sorted by (tail, head)

    Raises:
        SelfLoop, NegativeWeight, DuplicateEdge, NodeOutOfRange
    """
    tails, heads, weights = _as_arrays(edge_list)
    if n is None:
        n = int(max(tails.max(initial=-1), heads.max(initial=-1)) + 1)
    if node_ids is not None and len(node_ids) != n:
        raise NodeOutOfRange(len(node_ids), n)

    for arr in (tails, heads):
        bad = np.flatnonzero((arr < 0) | (arr >= n))
        if len(bad):
            raise NodeOutOfRange(int(arr[bad[0]]), n)

    loops = np.flatnonzero(tails == heads)
    if len(loops):
        raise SelfLoop(int(tails[loops[0]]))

    negative = np.flatnonzero(weights < 0)
    if len(negative):
        i = negative[0]
        raise NegativeWeight(int(tails[i]), int(heads[i]), float(weights[i]))

    tails, heads, weights = _sorted_pairs(tails, heads, weights)
    duplicate = _first_duplicate(tails, heads)
    if duplicate is not None:
        raise DuplicateEdge(*duplicate)

    return DirectedWeightedGraph(n, tails, heads, weights, node_ids=node_ids)


class BipartiteGraph:
    """Fund-asset graph; edge values are position values in currency units."""

    def __init__(
        self,
        fund_count: int,
        asset_count: int,
        funds: np.ndarray,
        assets: np.ndarray,
        values: np.ndarray,
        fund_ids: Optional[Sequence[str]] = None,
        asset_ids: Optional[Sequence[str]] = None,
    ):
        self.fund_count = int(fund_count)
        self.asset_count = int(asset_count)
        self.funds = funds
        self.assets = assets
        self.values = values
        self.fund_ids = tuple(fund_ids) if fund_ids is not None else tuple(str(i) for i in range(fund_count))
        self.asset_ids = tuple(asset_ids) if asset_ids is not None else tuple(str(j) for j in range(asset_count))
        for arr in (self.funds, self.assets, self.values):
            arr.setflags(write=False)

    @property
    def m(self) -> int:
        return int(len(self.funds))

    def holdings_matrix(self) -> sp.csr_matrix:
        """The fund x asset block W."""
        return sp.coo_matrix(
            (self.values, (self.funds, self.assets)),
            shape=(self.fund_count, self.asset_count),
        ).tocsr()

    def adjacency(self) -> AdjacencyMatrix:
        """Block form [[0, W], [W^T, 0]] over funds followed by assets."""
        size = self.fund_count + self.asset_count
        if self.fund_count == 0 or self.asset_count == 0:
            return AdjacencyMatrix(sp.csr_matrix((size, size)), NodeKind.FUND, NodeKind.ASSET)
        w = self.holdings_matrix()
        block = sp.bmat([[None, w], [w.T, None]], format="csr")
        return AdjacencyMatrix(block, NodeKind.FUND, NodeKind.ASSET)

    def degrees(self) -> Tuple[np.ndarray, np.ndarray]:
        """(fund_degree, asset_degree) edge counts."""
        fund_degree = np.bincount(self.funds, minlength=self.fund_count).astype(np.int64)
        asset_degree = np.bincount(self.assets, minlength=self.asset_count).astype(np.int64)
        return fund_degree, asset_degree

    def density(self) -> float:
        if self.fund_count < 1 or self.asset_count < 1:
            raise DegenerateGraph(
                f"Bipartite density needs funds and assets, got {self.fund_count}x{self.asset_count}"
            )
        return self.m / (self.fund_count * self.asset_count)

    def node_labels(self) -> List[str]:
        """Labels of the undirected view: funds first, then assets."""
        return [f"fund:{x}" for x in self.fund_ids] + [f"asset:{x}" for x in self.asset_ids]

    def to_networkx(self) -> nx.Graph:
        """Undirected view; assets are offset by ``fund_count``."""
        graph = nx.Graph()
        graph.add_nodes_from(range(self.fund_count), bipartite=0)
        graph.add_nodes_from(range(self.fund_count, self.fund_count + self.asset_count), bipartite=1)
        graph.add_weighted_edges_from(
            (int(f), int(a) + self.fund_count, float(v))
            for f, a, v in zip(self.funds, self.assets, self.values)
        )
        return graph

    def __repr__(self) -> str:
        return f"BipartiteGraph(funds={self.fund_count}, assets={self.asset_count}, m={self.m})"


def build_bipartite(
    edge_list: Iterable[EdgeTriple],
    fund_count: int,
    asset_count: int,
    fund_ids: Optional[Sequence[str]] = None,
    asset_ids: Optional[Sequence[str]] = None,
) -> BipartiteGraph:
    """
    Build a validated fund-asset graph from (fund, asset, value) triples.

    Raises:
        NodeOutOfRange, NegativeWeight, DuplicateEdge
    """
    funds, assets, values = _as_arrays(edge_list)

    for arr, size in ((funds, fund_count), (assets, asset_count)):
        bad = np.flatnonzero((arr < 0) | (arr >= size))
        if len(bad):
            raise NodeOutOfRange(int(arr[bad[0]]), size)

    negative = np.flatnonzero(values < 0)
    if len(negative):
        i = negative[0]
        raise NegativeWeight(int(funds[i]), int(assets[i]), float(values[i]))

    funds, assets, values = _sorted_pairs(funds, assets, values)
    duplicate = _first_duplicate(funds, assets)
    if duplicate is not None:
        raise DuplicateEdge(*duplicate)

    return BipartiteGraph(
        fund_count, asset_count, funds, assets, values, fund_ids=fund_ids, asset_ids=asset_ids
    )
