"""Fund-asset holdings W, asset prices p and asset shares D."""

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp

from src.core.exceptions import DimensionMismatch, NegativePrice
from src.core.netcore import BipartiteGraph, build_bipartite


def _column_scale(matrix: sp.csr_matrix, factors: np.ndarray) -> sp.csr_matrix:
    return (matrix @ sp.diags(factors)).tocsr()


def _shares(values: sp.csr_matrix) -> sp.csr_matrix:
    totals = np.asarray(values.sum(axis=0)).ravel()
    inverse = np.divide(1.0, totals, out=np.zeros_like(totals), where=totals > 0)
    return _column_scale(values, inverse)


@dataclass(frozen=True, eq=False)
class BipartiteHoldings:
    """
    Holdings of primitive assets.

    ``values`` is W (currency value of each position), ``prices`` the
    per-asset price index the values were marked at, and ``shares`` is D,
    the fraction of each asset held by each fund. Repricing scales columns
    of W and leaves D alone.
    """
    values: sp.csr_matrix
    prices: np.ndarray
    shares: sp.csr_matrix
    fund_ids: Tuple[str, ...]
    asset_ids: Tuple[str, ...]

    @property
    def n_funds(self) -> int:
        return int(self.values.shape[0])

    @property
    def n_assets(self) -> int:
        return int(self.values.shape[1])

    @property
    def fund_asset_values(self) -> np.ndarray:
        """W 1: primitive-asset value of each fund."""
        return np.asarray(self.values.sum(axis=1)).ravel()

    @property
    def asset_totals(self) -> np.ndarray:
        """Column sums of W: value of each asset held inside the system."""
        return np.asarray(self.values.sum(axis=0)).ravel()

    def dp_values(self) -> np.ndarray:
        """D p with p the held market value of each asset; equals W 1."""
        return np.asarray(self.shares @ self.asset_totals).ravel()

    def total_value(self) -> float:
        return float(self.values.sum())

    def holders(self, asset: int) -> np.ndarray:
        column = self.values.tocsc()[:, asset]
        return np.sort(column.indices)

    def to_graph(self) -> BipartiteGraph:
        coo = self.values.tocoo()
        return build_bipartite(
            zip(coo.row.tolist(), coo.col.tolist(), coo.data.tolist()),
            fund_count=self.n_funds,
            asset_count=self.n_assets,
            fund_ids=self.fund_ids,
            asset_ids=self.asset_ids,
        )

    def repriced(self, new_prices: np.ndarray) -> "BipartiteHoldings":
        return repriced_holdings(self, new_prices)


def build_holdings(
    entries: Iterable[Tuple[int, int, float]],
    prices: Sequence[float],
    n_funds: int,
    fund_ids: Optional[Sequence[str]] = None,
    asset_ids: Optional[Sequence[str]] = None,
) -> BipartiteHoldings:
    """
    Build holdings from (fund, asset, value) triples.

    Validation of the edge list (ranges, duplicates, negative values) is the
    bipartite graph's; prices must be positive.
    """
    prices = np.asarray(prices, dtype=float)
    n_assets = len(prices)
    graph = build_bipartite(entries, fund_count=n_funds, asset_count=n_assets)

    nonpositive = np.flatnonzero(prices <= 0)
    if len(nonpositive):
        j = int(nonpositive[0])
        label = asset_ids[j] if asset_ids is not None else j
        raise NegativePrice(label, float(prices[j]))

    values = graph.holdings_matrix()
    values.sort_indices()
    fids = tuple(fund_ids) if fund_ids is not None else tuple(str(i) for i in range(n_funds))
    aids = tuple(asset_ids) if asset_ids is not None else tuple(str(j) for j in range(n_assets))
    if len(fids) != n_funds:
        raise DimensionMismatch("fund_ids", n_funds, len(fids))
    if len(aids) != n_assets:
        raise DimensionMismatch("asset_ids", n_assets, len(aids))
    return BipartiteHoldings(
        values=values, prices=prices, shares=_shares(values), fund_ids=fids, asset_ids=aids
    )


def repriced_holdings(bh: BipartiteHoldings, new_prices: np.ndarray) -> BipartiteHoldings:
    """
    Mark holdings to new prices: w'_ij = w_ij * new_p_j / p_j.

    A zero price is allowed (the asset is wiped out); D is unchanged.

    Raises:
        DimensionMismatch, NegativePrice
    """
    new_prices = np.asarray(new_prices, dtype=float)
    if new_prices.shape != bh.prices.shape:
        raise DimensionMismatch("prices", bh.prices.shape, new_prices.shape)
    negative = np.flatnonzero(new_prices < 0)
    if len(negative):
        j = int(negative[0])
        raise NegativePrice(bh.asset_ids[j], float(new_prices[j]))

    # a wiped-out column stays at zero value
    ratio = np.divide(
        new_prices, bh.prices, out=np.zeros_like(new_prices), where=bh.prices > 0
    )
    return BipartiteHoldings(
        values=_column_scale(bh.values, ratio),
        prices=new_prices,
        shares=bh.shares,
        fund_ids=bh.fund_ids,
        asset_ids=bh.asset_ids,
    )
