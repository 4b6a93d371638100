"""Cross-holdings matrix C and the outside-share diagonal.

Convention: row = investor, column = investee. ``C[i, j]`` is the fraction
of fund j's equity held by fund i, so v = Dp + Cv reads row-wise and the
outside share of fund j is ``1 - sum_i C[i, j]``.
"""

from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp

from src.config import settings
from src.core.exceptions import (
    DimensionMismatch,
    DuplicateEdge,
    FractionOutOfRange,
    FullyInternalized,
    NodeOutOfRange,
    SelfHolding,
)
from src.core.netcore import DirectedWeightedGraph, build_digraph

CrossHoldingEntry = Tuple[int, int, float]


@dataclass(frozen=True, eq=False)
class CrossHoldings:
    """Validated cross-holdings with derived outside shares."""
    matrix: sp.csc_matrix
    outside_share: np.ndarray
    fund_ids: Tuple[str, ...]

    @property
    def n(self) -> int:
        return int(self.matrix.shape[0])

    @property
    def c_hat(self) -> sp.dia_matrix:
        """The diagonal matrix of outside shares."""
        return sp.diags(self.outside_share)

    @property
    def column_sums(self) -> np.ndarray:
        return np.asarray(self.matrix.sum(axis=0)).ravel()

    def entries(self) -> List[CrossHoldingEntry]:
        """(investor, investee, fraction) sorted by investor then investee."""
        coo = self.matrix.tocsr().tocoo()
        order = np.lexsort((coo.col, coo.row))
        return [
            (int(coo.row[k]), int(coo.col[k]), float(coo.data[k])) for k in order
        ]

    def to_graph(self) -> DirectedWeightedGraph:
        """Investor -> investee digraph weighted by fraction."""
        return build_digraph(self.entries(), n=self.n, node_ids=self.fund_ids)


def build_cross_holdings(
    entries: Iterable[CrossHoldingEntry],
    n: int,
    epsilon: Optional[float] = None,
    fund_ids: Optional[Sequence[str]] = None,
) -> CrossHoldings:
    """
    Validate cross-holding fractions and derive the outside shares.

    Args:
        entries: (investor, investee, fraction) triples
        n: Fund count
        epsilon: Minimum outside share; defaults to settings

    Raises:
        SelfHolding, FractionOutOfRange, FullyInternalized, DuplicateEdge
    """
    epsilon = settings.outside_share_epsilon if epsilon is None else epsilon
    ids = tuple(fund_ids) if fund_ids is not None else tuple(str(i) for i in range(n))
    if len(ids) != n:
        raise DimensionMismatch("fund_ids", n, len(ids))

    rows: List[int] = []
    cols: List[int] = []
    data: List[float] = []
    seen = set()
    for investor, investee, fraction in entries:
        investor, investee, fraction = int(investor), int(investee), float(fraction)
        for node in (investor, investee):
            if node < 0 or node >= n:
                raise NodeOutOfRange(node, n)
        if investor == investee:
            raise SelfHolding(ids[investor])
        if not (0.0 <= fraction <= 1.0):
            raise FractionOutOfRange(ids[investor], ids[investee], fraction)
        if (investor, investee) in seen:
            raise DuplicateEdge(investor, investee)
        seen.add((investor, investee))
        rows.append(investor)
        cols.append(investee)
        data.append(fraction)

    matrix = sp.csc_matrix((data, (rows, cols)), shape=(n, n))
    matrix.sort_indices()
    column_sums = np.asarray(matrix.sum(axis=0)).ravel()

    over = np.flatnonzero(column_sums > 1.0 - epsilon)
    if len(over):
        j = int(over[0])
        raise FullyInternalized(ids[j], float(column_sums[j]))

    return CrossHoldings(matrix=matrix, outside_share=1.0 - column_sums, fund_ids=ids)
