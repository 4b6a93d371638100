"""Topology summaries: average degree, density, degree maxima, centrality maxima."""

from dataclasses import asdict, dataclass, field
from typing import Any, Dict, Iterable, Optional, Sequence

import networkx as nx
import numpy as np
import pandas as pd

from src.core.metrics.centrality import CentralityReport, centrality_report
from src.core.netcore import BipartiteGraph, DirectedWeightedGraph, build_digraph
from src.utils import get_logger

logger = get_logger(__name__)


@dataclass
class NetworkSummary:
    """Headline statistics of one network."""
    network: str
    nodes: int
    edges: int
    average_degree: float
    density: float
    max_in_degree: int
    max_out_degree: int
    extra: Dict[str, Any] = field(default_factory=dict)
    centrality_maxima: Dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def network_summary(
    g: DirectedWeightedGraph, report: Optional[CentralityReport] = None
) -> NetworkSummary:
    """Summary of the cross-holdings digraph (average degree = m / n)."""
    in_degree, out_degree = g.degrees()
    return NetworkSummary(
        network="cross_holdings",
        nodes=g.n,
        edges=g.m,
        average_degree=g.m / g.n if g.n else 0.0,
        density=g.density() if g.n >= 2 else 0.0,
        max_in_degree=int(in_degree.max(initial=0)),
        max_out_degree=int(out_degree.max(initial=0)),
        centrality_maxima=report.maxima() if report is not None else {},
    )


def bipartite_summary(
    g: BipartiteGraph,
    report: Optional[CentralityReport] = None,
    exclude_assets: Iterable[str] = (),
) -> NetworkSummary:
    """
    Summary of the fund-asset network.

    ``exclude_assets`` (typically cash) is left out of the asset-degree and
    centrality superlatives but still counts toward density and averages.
    """
    fund_degree, asset_degree = g.degrees()
    skip = set(exclude_assets)
    kept = np.array([a not in skip for a in g.asset_ids], dtype=bool)
    top_asset = int(asset_degree[kept].max(initial=0)) if kept.any() else 0
    top_asset_id = (
        g.asset_ids[int(np.flatnonzero(kept)[np.argmax(asset_degree[kept])])]
        if kept.any() and g.asset_count
        else None
    )
    nodes = g.fund_count + g.asset_count
    maxima = (
        report.maxima(exclude=[f"asset:{a}" for a in skip]) if report is not None else {}
    )
    return NetworkSummary(
        network="fund_asset",
        nodes=nodes,
        edges=g.m,
        average_degree=2 * g.m / nodes if nodes else 0.0,
        density=g.density() if g.fund_count and g.asset_count else 0.0,
        max_in_degree=top_asset,
        max_out_degree=int(fund_degree.max(initial=0)),
        extra={
            "funds": g.fund_count,
            "assets": g.asset_count,
            "mean_fund_degree": g.m / g.fund_count if g.fund_count else 0.0,
            "mean_asset_degree": g.m / g.asset_count if g.asset_count else 0.0,
            "most_held_asset": top_asset_id,
            "excluded_assets": sorted(skip),
        },
        centrality_maxima=maxima,
    )


def bipartite_as_digraph(g: BipartiteGraph) -> DirectedWeightedGraph:
    """Fund -> asset edges over funds followed by assets (offset by fund count)."""
    return build_digraph(
        ((int(f), int(a) + g.fund_count, float(v)) for f, a, v in zip(g.funds, g.assets, g.values)),
        n=g.fund_count + g.asset_count,
        node_ids=g.node_labels(),
    )


def bipartite_centrality(
    g: BipartiteGraph, betweenness_samples: Optional[int] = None, seed: Optional[int] = None
) -> CentralityReport:
    """Centralities of the undirected block network [[0, W], [W^T, 0]]."""
    return centrality_report(
        bipartite_as_digraph(g), undirected=True, betweenness_samples=betweenness_samples, seed=seed
    )


def average_path_length(g: DirectedWeightedGraph, node: int, undirected: bool = True) -> float:
    """Mean hop distance from ``node`` to every other node it reaches."""
    graph = g.to_networkx(undirected=undirected)
    lengths = nx.single_source_shortest_path_length(graph, node)
    others = [d for target, d in lengths.items() if target != node]
    if not others:
        return 0.0
    return float(np.mean(others))


def series_growth(
    snapshots: Sequence[DirectedWeightedGraph], periods: Optional[Sequence[str]] = None
) -> pd.DataFrame:
    """Node and edge counts per period."""
    labels = list(periods) if periods is not None else [str(i) for i in range(len(snapshots))]
    return pd.DataFrame(
        {
            "period": labels,
            "nodes": [g.n for g in snapshots],
            "edges": [g.m for g in snapshots],
        }
    )
