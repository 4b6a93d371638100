"""Cascading failures through cross-holdings devaluation and fire sales.

A run starts from the pre-shock equilibrium, scales the prices of the
shocked assets by ``eta`` and then iterates:

1. funds that failed in the previous round fire-sell once: the current
   price of asset j is multiplied by
   ``max(0, 1 - omega * sum_{f newly failed} D_fj)``;
2. every failed fund loses ``beta_i``;
3. outside values are recomputed as ``A [W 1 - b]`` and open funds below
   their critical value join the failed set.

Failure is absorbing, so the failed set grows until a round adds nobody.
"""

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
import scipy.sparse as sp

from src.core.contagion.scenario import ScenarioConfig
from src.core.exceptions import (
    AssetUnheld,
    ContagionError,
    EquilibriumViolation,
    UnknownAsset,
)
from src.core.ingest.snapshot import MarketSnapshot
from src.core.valuation import DependencyMatrix, dependency_matrix
from src.utils import get_logger

logger = get_logger(__name__)


class TerminationReason(str, Enum):
    CONVERGED = "converged"
    MAX_ITERATIONS = "max_iterations"


class CascadeContext:
    """
    Everything a cascade needs that does not depend on the scenario rates:
    the factored dependency matrix, the pre-shock outside values and the
    fund/asset masks.
    """

    def __init__(self, snapshot: MarketSnapshot, dependency: Optional[DependencyMatrix] = None):
        self.snapshot = snapshot
        self.dependency = dependency or dependency_matrix(snapshot.cross_holdings)
        self.logger = get_logger(f"{self.__class__.__name__}")

        holdings = snapshot.holdings
        self.base_prices = holdings.prices.copy()
        self.base_values = self.dependency.apply(holdings.fund_asset_values)
        self.shares = holdings.shares.tocsc()
        self.open_ended = np.asarray(snapshot.open_ended, dtype=bool)
        cash = set(snapshot.cash_assets())
        self.cash = np.array([a in cash for a in snapshot.assets.ids], dtype=bool)

    @property
    def n(self) -> int:
        return self.snapshot.n_funds

    def thresholds(self, config: ScenarioConfig) -> np.ndarray:
        """v_crit = crit_rate * v_dot(0), with absolute overrides."""
        v_crit = config.crit_rate * self.base_values
        for fund, value in config.critical_values.items():
            v_crit[self.snapshot.funds.lookup(fund)] = value
        return v_crit

    def failure_costs(self, config: ScenarioConfig) -> np.ndarray:
        """beta = beta_rate * v_dot(0)."""
        return config.beta_rate * self.base_values

    def shocked_prices(self, config: ScenarioConfig) -> np.ndarray:
        """
        Raises:
            UnknownAsset, ContagionError: cash shocked without ``allow_cash``
        """
        prices = self.base_prices.copy()
        for asset in config.shocked_assets:
            if asset not in self.snapshot.assets:
                raise UnknownAsset(asset)
            j = self.snapshot.assets.index[asset]
            if self.cash[j] and not config.allow_cash:
                raise ContagionError(f"Asset {asset} is cash; set allow_cash to shock it")
            prices[j] *= config.eta
        return prices

    def values_at(self, prices: np.ndarray, costs: np.ndarray) -> np.ndarray:
        """A [W(p) 1 - b]."""
        holdings = self.snapshot.holdings.repriced(prices)
        return self.dependency.apply(holdings.fund_asset_values - costs)


@dataclass(frozen=True, eq=False)
class CascadeState:
    """State after round ``t``; ``failed`` is the cumulative set Z_t."""
    t: int
    failed: np.ndarray
    failure_step: np.ndarray
    shocked_prices: np.ndarray
    prices: np.ndarray
    costs: np.ndarray
    values: np.ndarray
    pressured: np.ndarray

    @property
    def failed_count(self) -> int:
        return int(self.failed.sum())

    def failed_indices(self) -> List[int]:
        return np.flatnonzero(self.failed).tolist()

    def pressure_applied(self, shares: sp.spmatrix) -> set:
        """(fund, asset) pairs whose fire-sale pressure is in the prices."""
        coo = sp.coo_matrix(shares)
        return {
            (int(i), int(j)) for i, j in zip(coo.row, coo.col) if self.pressured[i]
        }


def fire_sale_factor(column: Sequence[float], failing: Sequence[float], omega: float) -> float:
    """
    Price multiplier of one asset: (sum w - omega * sum w_failing) / sum w, floored at 0.

    Raises:
        AssetUnheld: the column holds no value
    """
    total = float(np.sum(column))
    if total <= 0:
        raise AssetUnheld()
    return max(0.0, (total - omega * float(np.sum(failing))) / total)


def fire_sale_factors(shares: sp.spmatrix, sellers: np.ndarray, omega: float) -> np.ndarray:
    """
    Multipliers of every asset for the given seller mask.

    Seller shares are summed per asset in fund index order, so the result
    does not depend on the order sellers were found in.
    """
    sold = np.asarray(shares.T @ sellers.astype(float)).ravel()
    return np.maximum(0.0, 1.0 - omega * sold)


def check_equilibrium(ctx: CascadeContext, config: ScenarioConfig) -> None:
    """
    Raises:
        EquilibriumViolation: open funds already below their threshold
    """
    below = np.flatnonzero(ctx.open_ended & (ctx.base_values < ctx.thresholds(config)))
    if len(below):
        raise EquilibriumViolation([ctx.snapshot.funds.ids[i] for i in below])


def apply_shock(
    snapshot: MarketSnapshot,
    config: ScenarioConfig,
    ctx: Optional[CascadeContext] = None,
) -> Tuple[MarketSnapshot, List[int]]:
    """
    Shock the snapshot's prices and find the first failures.

    Returns:
        The repriced snapshot and the sorted indices of funds that fail
        immediately

    Raises:
        UnknownAsset, EquilibriumViolation
    """
    ctx = ctx or CascadeContext(snapshot)
    state = initial_state(ctx, config)
    shocked = snapshot.with_holdings(snapshot.holdings.repriced(state.prices))
    return shocked, state.failed_indices()


def initial_state(ctx: CascadeContext, config: ScenarioConfig) -> CascadeState:
    check_equilibrium(ctx, config)
    prices = ctx.shocked_prices(config)
    costs = np.zeros(ctx.n)
    values = ctx.values_at(prices, costs)
    failed = ctx.open_ended & (values < ctx.thresholds(config))
    return CascadeState(
        t=1,
        failed=failed,
        failure_step=np.where(failed, 1, -1),
        shocked_prices=prices,
        prices=prices,
        costs=costs,
        values=values,
        pressured=np.zeros(ctx.n, dtype=bool),
    )


def cascade_step(state: CascadeState, config: ScenarioConfig, ctx: CascadeContext) -> CascadeState:
    """
    One round: fire sales by the funds that failed last round, failure costs
    for all of Z_{t-1}, then new failures.

    Each fund sells at most once; its pressure compounds on the prices the
    earlier rounds left.

    Closed-ended funds are valued but never join the failed set.
    """
    sellers = state.failed & ~state.pressured
    prices = state.prices * fire_sale_factors(ctx.shares, sellers, config.omega)
    pressured = state.pressured | sellers
    costs = np.where(state.failed, ctx.failure_costs(config), 0.0)
    values = ctx.values_at(prices, costs)

    newly = ctx.open_ended & ~state.failed & (values - ctx.thresholds(config) < 0)
    t = state.t + 1
    return CascadeState(
        t=t,
        failed=state.failed | newly,
        failure_step=np.where(newly, t, state.failure_step),
        shocked_prices=state.shocked_prices,
        prices=prices,
        costs=costs,
        values=values,
        pressured=pressured,
    )


@dataclass
class CascadeResult:
    """Outcome of one cascade run."""
    config: ScenarioConfig
    fund_ids: Tuple[str, ...]
    initial_failures: int
    final_failures: int
    iterations: int
    termination_reason: TerminationReason
    failed: np.ndarray
    failure_step: np.ndarray
    initial_value: float
    final_value: float
    final_prices: np.ndarray
    final_values: np.ndarray
    trajectory: List[CascadeState] = field(default_factory=list)

    @property
    def total_value_lost(self) -> float:
        return self.initial_value - self.final_value

    @property
    def converged(self) -> bool:
        return self.termination_reason == TerminationReason.CONVERGED

    def failed_funds(self) -> List[str]:
        return [self.fund_ids[i] for i in np.flatnonzero(self.failed)]

    def vulnerability(self) -> List[Tuple[str, int]]:
        """Failed funds ordered by the round they failed in."""
        order = sorted(np.flatnonzero(self.failed), key=lambda i: (self.failure_step[i], i))
        return [(self.fund_ids[i], int(self.failure_step[i])) for i in order]

    def summary_row(self) -> Dict[str, Any]:
        return {
            **self.config.parameters(),
            "initial_failures": self.initial_failures,
            "final_failures": self.final_failures,
            "iterations": self.iterations,
            "total_value_lost": self.total_value_lost,
            "termination_reason": self.termination_reason.value,
        }

    def summary_frame(self) -> pd.DataFrame:
        return pd.DataFrame([self.summary_row()])

    def to_dict(self) -> Dict[str, Any]:
        return {
            "scenario": self.config.model_dump(mode="json"),
            "summary": self.summary_row(),
            "failed_funds": self.failed_funds(),
            "failure_step": {f: s for f, s in self.vulnerability()},
            "trajectory": [
                {
                    "t": s.t,
                    "failed": [self.fund_ids[i] for i in s.failed_indices()],
                    "prices": s.prices.tolist(),
                    "values": s.values.tolist(),
                }
                for s in self.trajectory
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def run_cascade(
    snapshot: MarketSnapshot,
    config: ScenarioConfig,
    ctx: Optional[CascadeContext] = None,
    record: bool = True,
) -> CascadeResult:
    """
    Shock the snapshot and iterate :func:`cascade_step` until the failed
    set stops growing or ``max_iterations`` rounds (default n + 2) ran.

    Hitting the cap is reported in ``termination_reason``, not raised.

    Raises:
        UnknownAsset, EquilibriumViolation
    """
    ctx = ctx or CascadeContext(snapshot)
    n = ctx.n
    max_iterations = config.max_iterations or n + 2

    state = initial_state(ctx, config)
    initial_failures = state.failed_count
    trajectory = [state] if record else []
    reason = TerminationReason.MAX_ITERATIONS
    iterations = 0

    while iterations < max_iterations:
        following = cascade_step(state, config, ctx)
        iterations += 1
        if record:
            trajectory.append(following)
        grew = following.failed_count > state.failed_count
        state = following
        logger.debug(f"Round {state.t}: {state.failed_count} failed")
        if not grew:
            reason = TerminationReason.CONVERGED
            break

    if reason == TerminationReason.CONVERGED and iterations > n + 1:
        raise ContagionError(f"Cascade took {iterations} rounds for {n} funds")

    result = CascadeResult(
        config=config,
        fund_ids=snapshot.funds.ids,
        initial_failures=initial_failures,
        final_failures=state.failed_count,
        iterations=iterations,
        termination_reason=reason,
        failed=state.failed,
        failure_step=state.failure_step,
        initial_value=float(ctx.base_values.sum()),
        final_value=float(state.values.sum()),
        final_prices=state.prices,
        final_values=state.values,
        trajectory=trajectory,
    )
    logger.debug(
        f"Cascade {reason.value} after {iterations} rounds: "
        f"{initial_failures} initial, {result.final_failures} final failures"
    )
    return result


@dataclass
class AssetImpact:
    asset_id: str
    initial_failures: int
    final_failures: int
    iterations: int
    total_value_lost: float


def asset_impact_scan(
    snapshot: MarketSnapshot,
    base: ScenarioConfig,
    assets: Optional[Sequence[str]] = None,
    ctx: Optional[CascadeContext] = None,
) -> List[AssetImpact]:
    """
    Shock each asset alone under ``base`` rates and rank by damage.

    Defaults to every non-cash asset. Ranking: final failures, then value
    lost (both descending), then asset id.
    """
    ctx = ctx or CascadeContext(snapshot)
    if assets is None:
        assets = [a for a, c in zip(snapshot.assets.ids, ctx.cash) if not c]

    impacts = []
    for asset in assets:
        result = run_cascade(
            snapshot, base.with_updates(shocked_assets=(asset,)), ctx=ctx, record=False
        )
        impacts.append(
            AssetImpact(
                asset_id=asset,
                initial_failures=result.initial_failures,
                final_failures=result.final_failures,
                iterations=result.iterations,
                total_value_lost=result.total_value_lost,
            )
        )

    impacts.sort(key=lambda r: (-r.final_failures, -r.total_value_lost, r.asset_id))
    logger.info(f"Scanned {len(impacts)} single-asset shocks")
    return impacts


def impact_frame(impacts: Sequence[AssetImpact]) -> pd.DataFrame:
    return pd.DataFrame(
        [vars(r) for r in impacts],
        columns=["asset_id", "initial_failures", "final_failures", "iterations", "total_value_lost"],
    )
