"""Label assortativity over the mixing matrix of a directed graph."""

from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence

import networkx as nx
import numpy as np

from src.core.exceptions import DegenerateGraph, DegenerateLabels, UnlabeledNode
from src.core.netcore import DirectedWeightedGraph
from src.utils import get_logger

logger = get_logger(__name__)


@dataclass
class MixingMatrix:
    """Joint distribution of (tail label, head label) over edges."""
    labels: List[str]
    matrix: np.ndarray

    @property
    def a(self) -> np.ndarray:
        return self.matrix.sum(axis=1)

    @property
    def b(self) -> np.ndarray:
        return self.matrix.sum(axis=0)

    def to_dict(self) -> Dict[str, Any]:
        return {"labels": self.labels, "matrix": self.matrix.tolist()}


def _check_labels(g: DirectedWeightedGraph, labels: Sequence[Optional[Any]]) -> List[str]:
    if len(labels) != g.n:
        raise UnlabeledNode(min(len(labels), g.n))
    out = []
    for node, label in enumerate(labels):
        if label is None or (isinstance(label, float) and np.isnan(label)) or label == "":
            raise UnlabeledNode(node)
        out.append(str(label))
    return out


def mixing_matrix(g: DirectedWeightedGraph, labels: Sequence[Optional[Any]]) -> MixingMatrix:
    """Fraction of directed edges joining label i (tail) to label j (head)."""
    names = _check_labels(g, labels)
    if g.m == 0:
        raise DegenerateGraph("Mixing matrix needs at least one edge")

    categories = sorted(set(names))
    mapping = {label: i for i, label in enumerate(categories)}

    graph = g.to_networkx()
    nx.set_node_attributes(graph, dict(enumerate(names)), "label")
    matrix = nx.attribute_mixing_matrix(graph, "label", mapping=mapping, normalized=True)
    return MixingMatrix(labels=categories, matrix=np.asarray(matrix, dtype=float))


def assortativity(g: DirectedWeightedGraph, labels: Sequence[Optional[Any]]) -> float:
    """
    Label assortativity r = (sum_i m_ii - sum_i a_i b_i) / (1 - sum_i a_i b_i).

    Raises:
        UnlabeledNode: a node has no label
        DegenerateGraph: no edges
        DegenerateLabels: the denominator vanishes (one effective label)
    """
    mixing = mixing_matrix(g, labels)
    expected = float(mixing.a @ mixing.b)
    denominator = 1.0 - expected
    if abs(denominator) < 1e-15:
        raise DegenerateLabels(
            "Edges touch a single effective label; assortativity is undefined"
        )
    return (float(np.trace(mixing.matrix)) - expected) / denominator
