"""Degree histograms for both networks."""

from enum import Enum
from typing import Dict, Union

import numpy as np
import pandas as pd

from src.core.exceptions import GraphError
from src.core.netcore import BipartiteGraph, DirectedWeightedGraph


class DegreeKind(str, Enum):
    IN = "in"
    OUT = "out"
    BIPARTITE_FUND = "bipartite-fund"
    BIPARTITE_ASSET = "bipartite-asset"


def _degree_vector(g: Union[DirectedWeightedGraph, BipartiteGraph], kind: DegreeKind) -> np.ndarray:
    if isinstance(g, BipartiteGraph):
        fund_degree, asset_degree = g.degrees()
        if kind == DegreeKind.BIPARTITE_FUND:
            return fund_degree
        if kind == DegreeKind.BIPARTITE_ASSET:
            return asset_degree
    else:
        in_degree, out_degree = g.degrees()
        if kind == DegreeKind.IN:
            return in_degree
        if kind == DegreeKind.OUT:
            return out_degree
    raise GraphError(f"Degree kind '{kind.value}' does not apply to {type(g).__name__}")


def degree_histogram(
    g: Union[DirectedWeightedGraph, BipartiteGraph], kind: Union[DegreeKind, str]
) -> Dict[int, int]:
    """Map degree -> number of nodes of the relevant kind with that degree."""
    degrees = _degree_vector(g, DegreeKind(kind))
    values, counts = np.unique(degrees, return_counts=True)
    return {int(v): int(c) for v, c in zip(values, counts)}


def histogram_frame(histogram: Dict[int, int]) -> pd.DataFrame:
    """Two-column (degree, count) table."""
    return pd.DataFrame(
        sorted(histogram.items()), columns=["degree", "count"]
    )
