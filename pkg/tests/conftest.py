"""Shared fixtures: hand-built markets and a small synthetic one."""

from typing import Dict, Optional, Sequence, Tuple

import numpy as np
import pytest

from src.core.ingest import GeneratorConfig, MarketSnapshot, generate_market, snapshot_from_parts
from src.core.valuation import build_cross_holdings, build_holdings


def make_market(
    cross: Sequence[Tuple[int, int, float]],
    positions: Sequence[Tuple[int, int, float]],
    prices: Sequence[float],
    n_funds: int,
    open_ended: Optional[Sequence[bool]] = None,
    asset_ids: Optional[Sequence[str]] = None,
    asset_class: Optional[Sequence[str]] = None,
    administrator: Optional[Sequence[str]] = None,
    fund_class: Optional[Sequence[str]] = None,
    date: str = "test",
) -> MarketSnapshot:
    """Snapshot from index triples; funds are F0..F{n-1}, assets X0.. by default."""
    fund_ids = [f"F{i}" for i in range(n_funds)]
    asset_ids = list(asset_ids) if asset_ids is not None else [f"X{j}" for j in range(len(prices))]
    return snapshot_from_parts(
        date=date,
        fund_ids=fund_ids,
        fund_class=fund_class or ["equity"] * n_funds,
        administrator=administrator or ["ADM"] * n_funds,
        open_ended=open_ended if open_ended is not None else [True] * n_funds,
        asset_ids=asset_ids,
        asset_class=asset_class or ["equity"] * len(asset_ids),
        cross_holdings=build_cross_holdings(cross, n=n_funds, fund_ids=fund_ids),
        holdings=build_holdings(
            positions, prices=prices, n_funds=n_funds, fund_ids=fund_ids, asset_ids=asset_ids
        ),
    )


def random_market(
    rng: np.random.Generator,
    n_funds: int,
    n_assets: int = 4,
    edge_probability: float = 0.3,
    closed_probability: float = 0.2,
) -> MarketSnapshot:
    """Dense-ish random market; every asset has at least one holder."""
    cross = []
    column_sums: Dict[int, float] = {}
    for i in range(n_funds):
        for j in range(n_funds):
            if i != j and rng.random() < edge_probability:
                fraction = float(rng.uniform(0.01, 0.3))
                if column_sums.get(j, 0.0) + fraction <= 0.8:
                    column_sums[j] = column_sums.get(j, 0.0) + fraction
                    cross.append((i, j, fraction))

    positions = {}
    for i in range(n_funds):
        held = rng.choice(n_assets, size=int(rng.integers(1, n_assets + 1)), replace=False)
        for j in held:
            positions[(i, int(j))] = float(rng.uniform(1.0, 100.0))
    for j in range(n_assets):
        if not any(a == j for _, a in positions):
            positions[(int(rng.integers(n_funds)), j)] = float(rng.uniform(1.0, 100.0))

    return make_market(
        cross,
        [(i, j, v) for (i, j), v in sorted(positions.items())],
        prices=rng.uniform(5.0, 50.0, size=n_assets).tolist(),
        n_funds=n_funds,
        open_ended=(rng.random(n_funds) >= closed_probability).tolist(),
    )


@pytest.fixture
def market_builder():
    return make_market


@pytest.fixture
def random_market_builder():
    return random_market


@pytest.fixture
def two_fund_market() -> MarketSnapshot:
    """F0 holds half of F1; each fund holds one asset worth 10."""
    return make_market(
        cross=[(0, 1, 0.5)],
        positions=[(0, 0, 10.0), (1, 1, 10.0)],
        prices=[1.0, 1.0],
        n_funds=2,
    )


@pytest.fixture
def concentrated_market() -> MarketSnapshot:
    """
    Six funds in a 30% cross-holding ring, heavy in GOV1.

    F0 and F1 hold only GOV1; the others split evenly between GOV1 and one
    other asset. A 40% GOV1 shock against a 70% critical value fails F0 and
    F1 at once; with omega 0.3 and beta 0.1 the whole ring follows
    (F5, then F2 and F4, then F3).
    """
    n = 6
    cross = [(i, (i + 1) % n, 0.3) for i in range(n)]
    positions = [(0, 0, 100.0), (1, 0, 100.0)]
    for i in range(2, n):
        positions.append((i, 0, 50.0))
        positions.append((i, 1 + i % 3, 50.0))
    return make_market(
        cross,
        positions,
        prices=[100.0, 20.0, 30.0, 40.0],
        n_funds=n,
        asset_ids=["GOV1", "X1", "X2", "X3"],
        asset_class=["government_bond", "equity", "equity", "equity"],
        administrator=["ADM00", "ADM00", "ADM01", "ADM01", "ADM02", "ADM02"],
    )


@pytest.fixture
def small_config() -> GeneratorConfig:
    return GeneratorConfig(
        n_funds=40,
        n_assets=30,
        mean_cross_degree=3.0,
        mean_asset_degree=6.0,
        administrators=5,
        closed_fraction=0.1,
        seed=7,
    )


@pytest.fixture
def small_market(small_config) -> MarketSnapshot:
    return generate_market(small_config)
