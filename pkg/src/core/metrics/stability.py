"""Jaccard stability of nodes and edges between successive snapshots."""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from src.core.exceptions import InsufficientSnapshots
from src.core.netcore import DirectedWeightedGraph


def jaccard(first: set, second: set) -> float:
    union = first | second
    if not union:
        return 1.0
    return len(first & second) / len(union)


@dataclass
class StabilityRow:
    period_a: str
    period_b: str
    node_jaccard: float
    edge_jaccard: float


@dataclass
class StabilityReport:
    rows: List[StabilityRow] = field(default_factory=list)

    @property
    def mean_node_jaccard(self) -> float:
        return float(np.mean([r.node_jaccard for r in self.rows])) if self.rows else float("nan")

    @property
    def mean_edge_jaccard(self) -> float:
        return float(np.mean([r.edge_jaccard for r in self.rows])) if self.rows else float("nan")

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [vars(r) for r in self.rows],
            columns=["period_a", "period_b", "node_jaccard", "edge_jaccard"],
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "rows": [vars(r) for r in self.rows],
            "mean_node_jaccard": self.mean_node_jaccard,
            "mean_edge_jaccard": self.mean_edge_jaccard,
        }


def jaccard_stability(
    snapshots: Sequence[DirectedWeightedGraph],
    periods: Optional[Sequence[str]] = None,
) -> StabilityReport:
    """
    Node and edge Jaccard coefficients for each consecutive snapshot pair.

    Nodes are compared by external id, edges as ordered id pairs with
    weights ignored.

    Raises:
        InsufficientSnapshots: fewer than two snapshots
    """
    if len(snapshots) < 2:
        raise InsufficientSnapshots(len(snapshots))
    labels = list(periods) if periods is not None else [str(i) for i in range(len(snapshots))]

    report = StabilityReport()
    for i in range(len(snapshots) - 1):
        first, second = snapshots[i], snapshots[i + 1]
        report.rows.append(
            StabilityRow(
                period_a=labels[i],
                period_b=labels[i + 1],
                node_jaccard=jaccard(first.node_set(), second.node_set()),
                edge_jaccard=jaccard(first.edge_set(), second.edge_set()),
            )
        )
    return report
