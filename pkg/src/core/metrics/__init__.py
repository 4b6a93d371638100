"""Network statistics: centralities, assortativity, stability and histograms."""

from .assortativity import MixingMatrix, assortativity, mixing_matrix
from .centrality import (
    CentralityReport,
    EigenvectorResult,
    betweenness_centrality,
    centrality_report,
    closeness_all,
    closeness_centrality,
    degree_centrality,
    eigenvector_centrality,
    eigenvector_matrix,
)
from .histogram import DegreeKind, degree_histogram, histogram_frame
from .stability import StabilityReport, StabilityRow, jaccard, jaccard_stability
from .summary import (
    NetworkSummary,
    average_path_length,
    bipartite_as_digraph,
    bipartite_centrality,
    bipartite_summary,
    network_summary,
    series_growth,
)

__all__ = [
    "MixingMatrix",
    "assortativity",
    "mixing_matrix",
    "CentralityReport",
    "EigenvectorResult",
    "betweenness_centrality",
    "centrality_report",
    "closeness_all",
    "closeness_centrality",
    "degree_centrality",
    "eigenvector_centrality",
    "eigenvector_matrix",
    "DegreeKind",
    "degree_histogram",
    "histogram_frame",
    "StabilityReport",
    "StabilityRow",
    "jaccard",
    "jaccard_stability",
    "NetworkSummary",
    "average_path_length",
    "bipartite_as_digraph",
    "bipartite_centrality",
    "bipartite_summary",
    "network_summary",
    "series_growth",
]
