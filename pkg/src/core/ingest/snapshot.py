"""Market snapshot: the complete system state at one date."""

from dataclasses import dataclass, field, replace
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from src.config import settings
from src.core.exceptions import DimensionMismatch, UnresolvedReference
from src.core.valuation import BipartiteHoldings, CrossHoldings

FUND_COLUMNS = ["fund_id", "class", "administrator", "open_ended"]
ASSET_COLUMNS = ["asset_id", "class", "price"]
CROSSHOLDING_COLUMNS = ["investor_fund_id", "investee_fund_id", "fraction"]
HOLDING_COLUMNS = ["fund_id", "asset_id", "value"]


@dataclass(frozen=True)
class SymbolTable:
    """Bijection between external identifiers and dense indices."""
    kind: str
    ids: Tuple[str, ...]
    index: Dict[str, int] = field(compare=False, repr=False)

    @classmethod
    def from_ids(cls, kind: str, ids: Iterable[str]) -> "SymbolTable":
        ids = tuple(str(x) for x in ids)
        return cls(kind=kind, ids=ids, index={x: i for i, x in enumerate(ids)})

    def __len__(self) -> int:
        return len(self.ids)

    def __contains__(self, identifier: object) -> bool:
        return identifier in self.index

    def lookup(self, identifier: str) -> int:
        try:
            return self.index[identifier]
        except KeyError:
            raise UnresolvedReference(self.kind, identifier) from None


@dataclass(frozen=True, eq=False)
class MarketSnapshot:
    """Funds, assets, cross-holdings and holdings at one date."""
    date: str
    funds: SymbolTable
    fund_class: Tuple[str, ...]
    administrator: Tuple[str, ...]
    open_ended: np.ndarray
    assets: SymbolTable
    asset_class: Tuple[str, ...]
    cross_holdings: CrossHoldings
    holdings: BipartiteHoldings
    metadata: Dict[str, Any] = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        n, m = len(self.funds), len(self.assets)
        for name, size, expected in (
            ("fund_class", len(self.fund_class), n),
            ("administrator", len(self.administrator), n),
            ("open_ended", len(self.open_ended), n),
            ("asset_class", len(self.asset_class), m),
            ("cross_holdings", self.cross_holdings.n, n),
            ("holdings funds", self.holdings.n_funds, n),
            ("holdings assets", self.holdings.n_assets, m),
        ):
            if size != expected:
                raise DimensionMismatch(name, expected, size)

    @property
    def n_funds(self) -> int:
        return len(self.funds)

    @property
    def n_assets(self) -> int:
        return len(self.assets)

    @property
    def prices(self) -> np.ndarray:
        return self.holdings.prices

    def fund_labels(self, column: str) -> Tuple[str, ...]:
        """Categorical fund labels by column name (``class`` or ``administrator``)."""
        if column in ("class", "fund_class"):
            return self.fund_class
        if column == "administrator":
            return self.administrator
        raise KeyError(f"Unknown fund label column '{column}'")

    def cash_assets(self) -> List[str]:
        """Assets treated as cash: configured ids or class ``cash``."""
        configured = set(settings.cash_asset_ids)
        return [
            a for a, c in zip(self.assets.ids, self.asset_class)
            if a in configured or c.lower() == "cash"
        ]

    def with_holdings(self, holdings: BipartiteHoldings) -> "MarketSnapshot":
        return replace(self, holdings=holdings)

    # Tabular views, in the CSV column layout

    def funds_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "fund_id": list(self.funds.ids),
                "class": list(self.fund_class),
                "administrator": list(self.administrator),
                "open_ended": self.open_ended.astype(int),
            },
            columns=FUND_COLUMNS,
        )

    def assets_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "asset_id": list(self.assets.ids),
                "class": list(self.asset_class),
                "price": self.holdings.prices,
            },
            columns=ASSET_COLUMNS,
        )

    def crossholdings_frame(self) -> pd.DataFrame:
        ids = self.funds.ids
        rows = [(ids[i], ids[j], f) for i, j, f in self.cross_holdings.entries()]
        return pd.DataFrame(rows, columns=CROSSHOLDING_COLUMNS)

    def holdings_frame(self) -> pd.DataFrame:
        coo = self.holdings.values.tocoo()
        order = np.lexsort((coo.col, coo.row))
        fids, aids = self.funds.ids, self.assets.ids
        rows = [
            (fids[coo.row[k]], aids[coo.col[k]], float(coo.data[k])) for k in order
        ]
        return pd.DataFrame(rows, columns=HOLDING_COLUMNS)

    def summary(self) -> Dict[str, Any]:
        return {
            "date": self.date,
            "funds": self.n_funds,
            "open_ended_funds": int(self.open_ended.sum()),
            "assets": self.n_assets,
            "cross_holdings": int(self.cross_holdings.matrix.nnz),
            "holdings": int(self.holdings.values.nnz),
            "total_value": self.holdings.total_value(),
        }


def snapshot_from_parts(
    date: str,
    fund_ids: Sequence[str],
    fund_class: Sequence[str],
    administrator: Sequence[str],
    open_ended: Sequence[bool],
    asset_ids: Sequence[str],
    asset_class: Sequence[str],
    cross_holdings: CrossHoldings,
    holdings: BipartiteHoldings,
    metadata: Optional[Dict[str, Any]] = None,
) -> MarketSnapshot:
    return MarketSnapshot(
        date=date,
        funds=SymbolTable.from_ids("fund", fund_ids),
        fund_class=tuple(str(c) for c in fund_class),
        administrator=tuple(str(a) for a in administrator),
        open_ended=np.asarray(open_ended, dtype=bool),
        assets=SymbolTable.from_ids("asset", asset_ids),
        asset_class=tuple(str(c) for c in asset_class),
        cross_holdings=cross_holdings,
        holdings=holdings,
        metadata=dict(metadata or {}),
    )
