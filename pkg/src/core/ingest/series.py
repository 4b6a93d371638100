"""Time-ordered snapshot series, synthetic (with edge churn) or loaded from bundles."""

from dataclasses import replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Set, Tuple, Union

import numpy as np

from src.core.exceptions import InconsistentSymbols
from src.core.ingest.generator import GeneratorConfig, generate_market
from src.core.ingest.snapshot import MarketSnapshot, SymbolTable
from src.core.netcore import DirectedWeightedGraph
from src.core.valuation import build_cross_holdings
from src.utils import get_logger

logger = get_logger(__name__)


def check_symbols(snapshots: Sequence[MarketSnapshot]) -> SymbolTable:
    """
    Check that an external id names one kind of node over the whole series
    and return the union fund table in order of first appearance.

    Raises:
        InconsistentSymbols: an id is a fund in one period and an asset in another
    """
    funds: Dict[str, int] = {}
    assets: Set[str] = set()
    for snapshot in snapshots:
        for fund in snapshot.funds.ids:
            funds.setdefault(fund, len(funds))
        assets.update(snapshot.assets.ids)

    clashes = sorted(set(funds) & assets)
    if clashes:
        raise InconsistentSymbols("fund/asset", clashes)
    return SymbolTable.from_ids("fund", funds)


def _rewire(
    snapshot: MarketSnapshot,
    churn: float,
    rng: np.random.Generator,
    max_column_sum: float,
    date: str,
) -> MarketSnapshot:
    """Replace round(churn * m) cross-holdings with pairs not present before."""
    entries = snapshot.cross_holdings.entries()
    n, m = snapshot.n_funds, len(entries)
    k = int(round(churn * m))
    if k == 0:
        return _with_cross(snapshot, entries, date)

    before: Set[Tuple[int, int]] = {(i, j) for i, j, _ in entries}
    capacity = n * (n - 1) - len(before)
    k = min(k, capacity)
    removed = set(rng.choice(m, size=k, replace=False).tolist())
    kept = [e for idx, e in enumerate(entries) if idx not in removed]
    fractions = [f for _, _, f in entries]

    added: List[Tuple[int, int, float]] = []
    taken = set(before)
    while len(added) < k:
        i, j = (int(x) for x in rng.integers(n, size=2))
        if i == j or (i, j) in taken:
            continue
        taken.add((i, j))
        added.append((i, j, float(fractions[int(rng.integers(m))])))

    rewired = kept + added
    column_sums = np.zeros(n)
    for _, j, f in rewired:
        column_sums[j] += f
    scale = np.where(
        column_sums > max_column_sum,
        max_column_sum / np.maximum(column_sums, 1e-300) * (1.0 - 1e-12),
        1.0,
    )
    rewired = [(i, j, f * float(scale[j])) for i, j, f in rewired]
    return _with_cross(snapshot, rewired, date)


def _with_cross(
    snapshot: MarketSnapshot, entries: List[Tuple[int, int, float]], date: str
) -> MarketSnapshot:
    cross = build_cross_holdings(entries, n=snapshot.n_funds, fund_ids=snapshot.funds.ids)
    return replace(snapshot, cross_holdings=cross, date=date)


def synthetic_series(
    config: GeneratorConfig,
    periods: int,
    churn: float = 0.0,
    dates: Optional[Sequence[str]] = None,
) -> List[MarketSnapshot]:
    """
    Generate ``periods`` snapshots over one fund/asset universe.

    Between consecutive periods a ``churn`` fraction of cross-holdings is
    rewired to pairs absent from the previous period, so the expected edge
    Jaccard coefficient is (1 - churn) / (1 + churn). Holdings are carried
    over unchanged.
    """
    if periods < 1:
        raise ValueError("periods must be at least 1")
    if not 0.0 <= churn <= 1.0:
        raise ValueError("churn must lie in [0, 1]")
    labels = list(dates) if dates is not None else [
        f"{config.date}-{t:02d}" for t in range(periods)
    ]
    if len(labels) != periods:
        raise ValueError(f"{len(labels)} dates for {periods} periods")

    rng = np.random.default_rng([config.seed, 1])
    first = generate_market(config)
    current = _with_cross(first, first.cross_holdings.entries(), labels[0])
    series = [current]
    for t in range(1, periods):
        current = _rewire(current, churn, rng, config.max_column_sum, labels[t])
        series.append(current)

    logger.info(f"Generated series of {periods} periods with churn {churn}")
    return series


def snapshot_series(
    source: Union[GeneratorConfig, Sequence[Union[str, Path]]],
    periods: int = 2,
    churn: float = 0.0,
    dates: Optional[Sequence[str]] = None,
) -> List[MarketSnapshot]:
    """
    Time-ordered snapshots with consistent node identity.

    ``source`` is either a generator config (synthetic mode, see
    :func:`synthetic_series`) or a list of bundle directories.

    Raises:
        InconsistentSymbols
    """
    if isinstance(source, GeneratorConfig):
        series = synthetic_series(source, periods, churn=churn, dates=dates)
        check_symbols(series)
        return series

    from src.core.ingest.loader import load_series

    return load_series(list(source))


def stability_graphs(snapshots: Sequence[MarketSnapshot]) -> List[DirectedWeightedGraph]:
    """Cross-holdings digraphs of a series, nodes keyed by external fund id."""
    return [s.cross_holdings.to_graph() for s in snapshots]
