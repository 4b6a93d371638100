"""Synthetic market generator.

Both networks grow by preferential attachment: an investee (for
cross-holdings) or an asset (for holdings) is drawn from a pool that lists
every node once per incoming edge, mixed with uniform draws so isolated
nodes can still be picked.
"""

from typing import Dict, List, Set, Tuple

import numpy as np
from pydantic import BaseModel, Field, field_validator, model_validator

from src.core.exceptions import InfeasibleTargets
from src.core.ingest.snapshot import MarketSnapshot, snapshot_from_parts
from src.core.valuation import build_cross_holdings, build_holdings
from src.utils import get_logger

logger = get_logger(__name__)

DOMINANT_ASSET_ID = "GOV1"
CASH_ASSET_ID = "CASH"

DEFAULT_FUND_CLASSES: Dict[str, float] = {
    "multimarket": 0.40,
    "fixed_income": 0.25,
    "equity": 0.20,
    "referenced": 0.05,
    "short_term": 0.04,
    "foreign_exchange": 0.03,
    "external_debt": 0.03,
}

DEFAULT_ASSET_CLASSES: Dict[str, float] = {
    "government_bond": 0.15,
    "corporate_bond": 0.30,
    "equity": 0.35,
    "derivative": 0.20,
}


class GeneratorConfig(BaseModel):
    """Parameters of a synthetic market; the seed fixes the output."""

    n_funds: int = Field(gt=0)
    n_assets: int = Field(gt=0, description="Total asset count, dominant asset and cash included")
    mean_cross_degree: float = Field(default=4.34, ge=0.0)
    mean_asset_degree: float = Field(default=20.23, gt=0.0, description="Mean holdings per fund")
    attachment_strength: float = Field(
        default=0.6, ge=0.0, le=1.0, description="Share of preferential (vs uniform) draws"
    )
    seed: int = 0
    dominant_share: float = Field(default=0.35, ge=0.0, lt=1.0)
    dominant_holder_fraction: float = Field(default=0.8, gt=0.0, le=1.0)
    max_column_sum: float = Field(default=0.9, gt=0.0, lt=1.0)
    mean_fraction: float = Field(default=0.05, gt=0.0, lt=1.0)
    administrators: int = Field(default=20, gt=0)
    administrator_affinity: float = Field(default=0.5, ge=0.0, lt=1.0)
    fund_classes: Dict[str, float] = Field(default_factory=lambda: dict(DEFAULT_FUND_CLASSES))
    asset_classes: Dict[str, float] = Field(default_factory=lambda: dict(DEFAULT_ASSET_CLASSES))
    closed_fraction: float = Field(default=0.0, ge=0.0, lt=1.0)
    include_cash: bool = True
    cash_share: float = Field(default=0.03, ge=0.0, lt=1.0)
    fund_size_sigma: float = Field(default=1.0, ge=0.0)
    date: str = "synthetic"

    @field_validator("fund_classes", "asset_classes")
    @classmethod
    def validate_weights(cls, v: Dict[str, float]) -> Dict[str, float]:
        if not v:
            raise ValueError("at least one class is required")
        if any(w < 0 for w in v.values()) or sum(v.values()) <= 0:
            raise ValueError("class weights must be non-negative with a positive total")
        return v

    @model_validator(mode="after")
    def validate_shares(self) -> "GeneratorConfig":
        if self.dominant_share + (self.cash_share if self.include_cash else 0.0) >= 1.0:
            raise ValueError("dominant and cash shares leave no value for other assets")
        return self

    @property
    def special_assets(self) -> List[str]:
        special = []
        if self.dominant_share > 0:
            special.append(DOMINANT_ASSET_ID)
        if self.include_cash:
            special.append(CASH_ASSET_ID)
        return special


def check_feasible(config: GeneratorConfig) -> None:
    """
    Raises:
        InfeasibleTargets: degree targets that the requested sizes cannot hold
    """
    n, m = config.n_funds, config.n_assets
    if config.mean_cross_degree > 0 and config.mean_cross_degree > n - 1:
        raise InfeasibleTargets(
            f"Mean cross-holdings degree {config.mean_cross_degree} needs more than {n} funds"
        )
    if config.mean_asset_degree > m:
        raise InfeasibleTargets(
            f"Mean fund-asset degree {config.mean_asset_degree} exceeds the {m} assets"
        )
    if m <= len(config.special_assets):
        raise InfeasibleTargets(
            f"{m} assets leave no room beside {', '.join(config.special_assets)}"
        )


def _labels(rng: np.random.Generator, weights: Dict[str, float], size: int) -> List[str]:
    names = list(weights)
    p = np.array([weights[k] for k in names], dtype=float)
    return [names[k] for k in rng.choice(len(names), size=size, p=p / p.sum())]


def _pool_draw(
    rng: np.random.Generator, pool: List[int], size: int, strength: float
) -> int:
    """Preferential draw from ``pool`` with probability ``strength``, else uniform."""
    if pool and rng.random() < strength:
        return pool[int(rng.integers(len(pool)))]
    return int(rng.integers(size))


def _cross_edges(
    config: GeneratorConfig, rng: np.random.Generator, administrator: List[str]
) -> List[Tuple[int, int]]:
    n = config.n_funds
    target = int(round(config.mean_cross_degree * n))
    out_neighbors: List[Set[int]] = [set() for _ in range(n)]
    pool: List[int] = []
    ordered: List[Tuple[int, int]] = []

    while len(ordered) < target:
        investor = int(rng.integers(n))
        if len(out_neighbors[investor]) >= n - 1:
            continue
        investee = -1
        for _ in range(50):
            candidate = _pool_draw(rng, pool, n, config.attachment_strength)
            if candidate == investor or candidate in out_neighbors[investor]:
                continue
            if (
                administrator[candidate] != administrator[investor]
                and rng.random() < config.administrator_affinity
            ):
                continue
            investee = candidate
            break
        if investee < 0:
            free = np.setdiff1d(
                np.arange(n), np.fromiter(out_neighbors[investor] | {investor}, dtype=np.int64)
            )
            investee = int(rng.choice(free))

        out_neighbors[investor].add(investee)
        pool.append(investee)
        ordered.append((investor, investee))
    return ordered


def _fractions(
    config: GeneratorConfig, rng: np.random.Generator, edges: List[Tuple[int, int]]
) -> np.ndarray:
    if not edges:
        return np.zeros(0)
    a = 1.0
    b = a * (1.0 - config.mean_fraction) / config.mean_fraction
    fractions = rng.beta(a, b, size=len(edges))

    investees = np.array([j for _, j in edges], dtype=np.int64)
    column_sums = np.zeros(config.n_funds)
    np.add.at(column_sums, investees, fractions)
    # scale crowded columns just under the cap
    scale = np.ones(config.n_funds)
    crowded = column_sums > config.max_column_sum
    scale[crowded] = config.max_column_sum / column_sums[crowded] * (1.0 - 1e-12)
    return fractions * scale[investees]


def _fund_degrees(
    config: GeneratorConfig, rng: np.random.Generator, sizes: np.ndarray, ordinary: int
) -> np.ndarray:
    """Ordinary-asset holdings per fund, larger funds holding more."""
    n = config.n_funds
    total = int(round(config.mean_asset_degree * n))
    extra = max(total - n, 0)
    degrees = 1 + rng.multinomial(extra, sizes / sizes.sum())
    return np.minimum(degrees, ordinary)


def _holdings(
    config: GeneratorConfig, rng: np.random.Generator, sizes: np.ndarray, asset_ids: List[str]
) -> List[Tuple[int, int, float]]:
    n = config.n_funds
    n_special = len(config.special_assets)
    ordinary = config.n_assets - n_special
    special_index = {a: k for k, a in enumerate(asset_ids) if a in config.special_assets}

    degrees = _fund_degrees(config, rng, sizes, ordinary)
    positions: Dict[Tuple[int, int], float] = {}
    pool: List[int] = []

    for i in range(n):
        chosen: Set[int] = set()
        misses = 0
        while len(chosen) < degrees[i]:
            k = _pool_draw(rng, pool, ordinary, config.attachment_strength)
            if k in chosen:
                misses += 1
                if misses < 50:
                    continue
                free = np.setdiff1d(np.arange(ordinary), np.fromiter(chosen, dtype=np.int64))
                k = int(rng.choice(free))
            misses = 0
            chosen.add(k)
            pool.append(k)
        weights = rng.exponential(size=len(chosen))
        ordinary_value = sizes[i] * (1.0 - config.cash_share if config.include_cash else 1.0)
        for k, w in zip(sorted(chosen), weights / weights.sum()):
            positions[(i, n_special + k)] = ordinary_value * w

    # every ordinary asset needs a holder
    held = {j for _, j in positions}
    for k in range(ordinary):
        j = n_special + k
        if j not in held:
            i = int(rng.integers(n))
            positions[(i, j)] = sizes[i] * 0.01

    if DOMINANT_ASSET_ID in special_index:
        j = special_index[DOMINANT_ASSET_ID]
        holders = max(1, int(round(config.dominant_holder_fraction * n)))
        for i in rng.choice(n, size=holders, replace=False):
            positions[(int(i), j)] = sizes[int(i)] * rng.uniform(0.5, 1.5)
    if CASH_ASSET_ID in special_index:
        j = special_index[CASH_ASSET_ID]
        for i in range(n):
            positions[(i, j)] = sizes[i] * config.cash_share

    if DOMINANT_ASSET_ID in special_index:
        _scale_dominant(positions, special_index[DOMINANT_ASSET_ID], config.dominant_share)

    return [(i, j, round(max(v, 0.01), 2)) for (i, j), v in sorted(positions.items())]


def _scale_dominant(positions: Dict[Tuple[int, int], float], column: int, share: float) -> None:
    dominant = sum(v for (_, j), v in positions.items() if j == column)
    rest = sum(v for (_, j), v in positions.items() if j != column)
    factor = share / (1.0 - share) * rest / dominant
    for key in [k for k in positions if k[1] == column]:
        positions[key] *= factor


def generate_market(config: GeneratorConfig) -> MarketSnapshot:
    """
    Generate a synthetic market snapshot.

    Cross-holding in-degrees and asset popularity are heavy-tailed; every
    column sum of C stays at or below ``max_column_sum``; the dominant
    asset ``GOV1`` carries ``dominant_share`` of total value and ``CASH``
    sits in every portfolio.

    Raises:
        InfeasibleTargets
    """
    check_feasible(config)
    rng = np.random.default_rng(config.seed)
    n = config.n_funds

    width = len(str(n))
    fund_ids = [f"F{i:0{width}d}" for i in range(1, n + 1)]
    admin_weights = {f"ADM{k:02d}": 1.0 / (k + 1) for k in range(config.administrators)}
    administrator = _labels(rng, admin_weights, n)
    fund_class = _labels(rng, config.fund_classes, n)
    open_ended = rng.random(n) >= config.closed_fraction

    special = config.special_assets
    ordinary = config.n_assets - len(special)
    width = len(str(ordinary))
    asset_ids = special + [f"A{k:0{width}d}" for k in range(1, ordinary + 1)]
    special_class = {DOMINANT_ASSET_ID: "government_bond", CASH_ASSET_ID: "cash"}
    asset_class = [special_class[a] for a in special] + _labels(rng, config.asset_classes, ordinary)
    prices = np.round(rng.uniform(10.0, 100.0, size=config.n_assets), 2)

    edges = _cross_edges(config, rng, administrator)
    fractions = _fractions(config, rng, edges)
    cross = build_cross_holdings(
        [(i, j, float(f)) for (i, j), f in zip(edges, fractions)],
        n=n,
        fund_ids=fund_ids,
    )

    sizes = rng.lognormal(mean=np.log(1e6), sigma=config.fund_size_sigma, size=n)
    holdings = build_holdings(
        _holdings(config, rng, sizes, asset_ids),
        prices=prices,
        n_funds=n,
        fund_ids=fund_ids,
        asset_ids=asset_ids,
    )

    snapshot = snapshot_from_parts(
        date=config.date,
        fund_ids=fund_ids,
        fund_class=fund_class,
        administrator=administrator,
        open_ended=open_ended,
        asset_ids=asset_ids,
        asset_class=asset_class,
        cross_holdings=cross,
        holdings=holdings,
        metadata={"generator": config.model_dump()},
    )
    logger.info(
        f"Generated market seed={config.seed}: {n} funds, {config.n_assets} assets, "
        f"{cross.matrix.nnz} cross-holdings, {holdings.values.nnz} holdings"
    )
    return snapshot
