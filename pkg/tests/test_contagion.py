"""Cascade engine tests, including an exhaustive least-fixed-point oracle."""

import itertools
from dataclasses import replace

import numpy as np
import pytest
from pydantic import ValidationError

from src.core.contagion import (
    PRESETS,
    CascadeContext,
    ScenarioConfig,
    TerminationReason,
    apply_shock,
    asset_impact_scan,
    cascade_step,
    fire_sale_factor,
    fire_sale_factors,
    impact_frame,
    initial_state,
    run_cascade,
)
from src.core.exceptions import AssetUnheld, ContagionError, EquilibriumViolation, UnknownAsset
from src.core.ingest import GeneratorConfig, generate_market

MELTDOWN = dict(shocked_assets="GOV1", eta=0.6, crit_rate=0.7, beta_rate=0.1, omega=0.3)


def dense_market(snapshot, config):
    n = snapshot.n_funds
    c = snapshot.cross_holdings.matrix.toarray()
    a = snapshot.cross_holdings.outside_share[:, None] * np.linalg.inv(np.eye(n) - c)
    w0 = snapshot.holdings.values.toarray()
    base = a @ w0.sum(axis=1)
    shocked = snapshot.prices.copy()
    for asset in config.shocked_assets:
        shocked[snapshot.assets.index[asset]] *= config.eta
    return dict(
        a=a,
        w0=w0,
        p0=snapshot.prices,
        d=snapshot.holdings.shares.toarray(),
        threshold=config.crit_rate * base,
        beta=config.beta_rate * base,
        shocked=shocked,
        open_ended=snapshot.open_ended,
    )


def dense_values(m, prices, z):
    w = m["w0"] * (prices / m["p0"])
    return m["a"] @ (w.sum(axis=1) - m["beta"] * z)


def reference_failure_steps(snapshot, config):
    """Round-by-round replay with explicit per-seller bookkeeping."""
    m = dense_market(snapshot, config)
    n, k = m["d"].shape
    prices = m["shocked"].copy()
    failed = m["open_ended"] & (dense_values(m, prices, np.zeros(n)) < m["threshold"])
    steps = np.where(failed, 1, -1)
    sold = set()
    t = 1
    while True:
        sellers = [f for f in np.flatnonzero(failed) if f not in sold]
        for j in range(k):
            prices[j] *= max(0.0, 1.0 - config.omega * sum(m["d"][f, j] for f in sellers))
        sold.update(sellers)
        t += 1
        values = dense_values(m, prices, failed.astype(float))
        newly = m["open_ended"] & ~failed & (values < m["threshold"])
        if not newly.any():
            return steps
        failed |= newly
        steps[newly] = t


def least_closed_set(snapshot, config, together):
    """
    Least set Z of open funds with F(Z) contained in Z, found by intersecting
    every closed set. F prices assets as if all of Z sold in one round
    (``together``) or each member sold in a round of its own.
    """
    m = dense_market(snapshot, config)
    n = snapshot.n_funds

    def below(z):
        if together:
            factors = np.maximum(0.0, 1.0 - config.omega * (m["d"].T @ z))
        else:
            factors = np.prod(1.0 - config.omega * m["d"][z.astype(bool)], axis=0)
        values = dense_values(m, m["shocked"] * factors, z)
        return m["open_ended"] & (values < m["threshold"])

    candidates = np.flatnonzero(m["open_ended"])
    least = m["open_ended"].copy()
    for size in range(len(candidates) + 1):
        for members in itertools.combinations(candidates, size):
            z = np.zeros(n)
            z[list(members)] = 1.0
            if not np.any(below(z) & (z == 0)):
                least &= z.astype(bool)
    return least


def random_scenario(rng, snapshot):
    k = int(rng.integers(1, min(2, snapshot.n_assets) + 1))
    assets = rng.choice(snapshot.n_assets, size=k, replace=False)
    return ScenarioConfig(
        shocked_assets=[snapshot.assets.ids[j] for j in assets],
        eta=float(rng.uniform(0.1, 0.9)),
        crit_rate=float(rng.uniform(0.5, 0.95)),
        beta_rate=float(rng.uniform(0.0, 0.5)),
        omega=float(rng.uniform(0.0, 1.0)),
    )


class TestFireSale:
    def test_factor_arithmetic(self):
        assert fire_sale_factor([60.0, 40.0], [40.0], 0.3) == pytest.approx(0.88)
        assert fire_sale_factor([60.0, 40.0], [40.0], 0.0) == 1.0
        assert fire_sale_factor([100.0], [100.0], 1.0) == 0.0

    def test_unheld_asset(self):
        with pytest.raises(AssetUnheld):
            fire_sale_factor([0.0, 0.0], [], 0.5)

    def test_factors_do_not_depend_on_fund_order(self):
        rng = np.random.default_rng(4)
        values = rng.uniform(0, 10, size=(12, 5)) * (rng.random((12, 5)) < 0.6)
        values[0] += 1.0
        shares = values / values.sum(axis=0)
        sellers = rng.random(12) < 0.5
        expected = fire_sale_factors(shares, sellers, 0.4)
        for _ in range(10):
            order = rng.permutation(12)
            permuted = fire_sale_factors(shares[order], sellers[order], 0.4)
            np.testing.assert_allclose(permuted, expected, rtol=0, atol=1e-15)

    def test_pressure_compounds_once_per_seller(self, market_builder):
        # F0, F1 and F2 each hold a third of X0
        snapshot = market_builder(
            [], [(0, 0, 10.0), (1, 0, 10.0), (2, 0, 10.0), (3, 1, 10.0)], prices=[1.0, 1.0], n_funds=4
        )
        config = ScenarioConfig(shocked_assets="X1", eta=0.9, crit_rate=0.5, omega=0.6)
        ctx = CascadeContext(snapshot)
        state = initial_state(ctx, config)
        assert state.failed_count == 0

        first = cascade_step(replace(state, failed=np.array([True, False, False, False])), config, ctx)
        assert first.prices.tolist() == pytest.approx([0.8, 0.9])
        assert first.pressured.tolist() == [True, False, False, False]

        second = cascade_step(replace(first, failed=np.array([True, True, False, False])), config, ctx)
        assert second.prices[0] == pytest.approx(0.64, abs=1e-12)
        assert second.pressured.tolist() == [True, True, False, False]

        # nobody new: prices hold
        third = cascade_step(second, config, ctx)
        np.testing.assert_array_equal(third.prices, second.prices)

    def test_cash_is_fire_sold(self, market_builder):
        snapshot = market_builder(
            [], [(0, 0, 10.0), (0, 1, 10.0), (1, 0, 10.0)], prices=[1.0, 1.0], n_funds=2,
            asset_ids=["CASH", "X1"], asset_class=["cash", "equity"],
        )
        config = ScenarioConfig(shocked_assets="X1", eta=0.1, crit_rate=0.7, omega=0.5)
        result = run_cascade(snapshot, config)
        assert result.failed_funds() == ["F0"]
        assert result.final_prices.tolist() == pytest.approx([0.75, 0.05])


class TestHandExamples:
    def test_near_identity_shock(self, two_fund_market):
        result = run_cascade(two_fund_market, ScenarioConfig(shocked_assets="X0", eta=0.999, crit_rate=0.5))
        assert result.final_failures == 0
        assert result.iterations == 1
        assert result.converged

    def test_single_fund_fails(self, market_builder):
        snapshot = market_builder([], [(0, 0, 10.0)], prices=[1.0], n_funds=1)
        result = run_cascade(snapshot, ScenarioConfig(shocked_assets="X0", eta=0.5, crit_rate=0.7))
        assert result.initial_failures == 1
        assert result.failed_funds() == ["F0"]
        assert result.total_value_lost == pytest.approx(5.0)

    def test_two_fund_chain(self, two_fund_market):
        # F1 drops to 2 < 3.5; paying its full failure cost pushes F0 to 9.5 < 10.5
        config = ScenarioConfig(shocked_assets="X1", eta=0.4, crit_rate=0.7, beta_rate=1.0)
        result = run_cascade(two_fund_market, config)
        assert result.initial_failures == 1
        assert result.final_failures == 2
        assert result.vulnerability() == [("F1", 1), ("F0", 2)]
        assert result.iterations == 2

        # half the cost leaves F0 at 10.75
        milder = run_cascade(two_fund_market, config.with_updates(beta_rate=0.5))
        assert milder.failed_funds() == ["F1"]

    def test_no_cross_holdings_closed_form(self, market_builder):
        rng = np.random.default_rng(8)
        n = 30
        positions = []
        for i in range(n):
            positions.append((i, 0, float(rng.uniform(0.0, 100.0))))
            positions.append((i, 1, float(rng.uniform(1.0, 100.0))))
        snapshot = market_builder([], positions, prices=[1.0, 1.0], n_funds=n)
        eta, crit_rate = 0.4, 0.8
        result = run_cascade(snapshot, ScenarioConfig(shocked_assets="X0", eta=eta, crit_rate=crit_rate))

        w = snapshot.holdings.values.toarray()
        share = w[:, 0] / w.sum(axis=1)
        cutoff = (1 - crit_rate) / (1 - eta)
        clear = np.abs(share - cutoff) > 1e-9
        np.testing.assert_array_equal(result.failed[clear], (share > cutoff)[clear])

    def test_total_meltdown(self, concentrated_market):
        result = run_cascade(concentrated_market, ScenarioConfig(**MELTDOWN))
        assert result.initial_failures == 2
        assert result.final_failures == 6
        assert result.vulnerability() == [
            ("F0", 1), ("F1", 1), ("F5", 2), ("F2", 3), ("F4", 3), ("F3", 4),
        ]
        assert result.iterations == 4
        assert result.termination_reason == TerminationReason.CONVERGED

    def test_channels_off_stop_at_first_failures(self, concentrated_market):
        config = ScenarioConfig(**{**MELTDOWN, "beta_rate": 0.0, "omega": 0.0})
        result = run_cascade(concentrated_market, config)
        assert result.final_failures == result.initial_failures == 2
        assert result.iterations == 1


class TestCascadeRules:
    def test_closed_funds_never_fail(self, concentrated_market):
        open_ended = concentrated_market.open_ended.copy()
        open_ended[[0, 3]] = False
        snapshot = replace(concentrated_market, open_ended=open_ended)
        result = run_cascade(snapshot, ScenarioConfig(**MELTDOWN))
        assert "F0" not in result.failed_funds()
        assert "F3" not in result.failed_funds()
        assert result.failure_step[0] == -1

    def test_iteration_cap_is_reported(self, concentrated_market):
        result = run_cascade(concentrated_market, ScenarioConfig(**MELTDOWN, max_iterations=1))
        assert result.termination_reason == TerminationReason.MAX_ITERATIONS
        assert result.iterations == 1
        assert not result.converged

    def test_trajectory(self, concentrated_market):
        result = run_cascade(concentrated_market, ScenarioConfig(**MELTDOWN))
        trajectory = result.trajectory
        assert [s.t for s in trajectory] == list(range(1, result.iterations + 2))
        for before, after in zip(trajectory, trajectory[1:]):
            assert np.all(after.failed >= before.failed)
            np.testing.assert_array_equal(after.pressured, before.failed)
        last = trajectory[-1]
        assert last.pressure_applied(concentrated_market.holdings.shares) == {
            (i, j)
            for i, j in zip(*concentrated_market.holdings.shares.nonzero())
            if last.pressured[i]
        }

    def test_replay_is_deterministic(self, concentrated_market):
        config = ScenarioConfig(**MELTDOWN)
        first = run_cascade(concentrated_market, config)
        second = run_cascade(concentrated_market, config)
        assert first.to_json() == second.to_json()

    def test_step_matches_run(self, concentrated_market):
        config = ScenarioConfig(**MELTDOWN)
        ctx = CascadeContext(concentrated_market)
        state = initial_state(ctx, config)
        while True:
            following = cascade_step(state, config, ctx)
            if following.failed_count == state.failed_count:
                break
            state = following
        np.testing.assert_array_equal(state.failed, run_cascade(concentrated_market, config).failed)

    def test_apply_shock(self, concentrated_market):
        shocked, failed = apply_shock(concentrated_market, ScenarioConfig(**MELTDOWN))
        assert shocked.prices[0] == pytest.approx(60.0)
        assert shocked.prices[1:].tolist() == concentrated_market.prices[1:].tolist()
        assert failed == [0, 1]

    def test_fund_order_does_not_matter(self, concentrated_market, market_builder):
        # same ring with fund indices reversed
        n = 6
        flip = {i: n - 1 - i for i in range(n)}
        cross = [(flip[i], flip[(i + 1) % n], 0.3) for i in range(n)]
        positions = [(flip[0], 0, 100.0), (flip[1], 0, 100.0)]
        for i in range(2, n):
            positions += [(flip[i], 0, 50.0), (flip[i], 1 + i % 3, 50.0)]
        reversed_market = market_builder(
            cross, positions, prices=[100.0, 20.0, 30.0, 40.0], n_funds=n,
            asset_ids=["GOV1", "X1", "X2", "X3"],
        )
        result = run_cascade(reversed_market, ScenarioConfig(**MELTDOWN))
        steps = {f"F{flip[int(f[1:])]}": s for f, s in result.vulnerability()}
        original = dict(run_cascade(concentrated_market, ScenarioConfig(**MELTDOWN)).vulnerability())
        assert steps == original


class TestErrors:
    def test_unknown_asset(self, two_fund_market):
        with pytest.raises(UnknownAsset):
            run_cascade(two_fund_market, ScenarioConfig(shocked_assets="NOPE", eta=0.5, crit_rate=0.5))

    def test_pre_shock_violation(self, two_fund_market):
        config = ScenarioConfig(
            shocked_assets="X0", eta=0.5, crit_rate=0.5, critical_values={"F1": 6.0}
        )
        with pytest.raises(EquilibriumViolation) as excinfo:
            run_cascade(two_fund_market, config)
        assert excinfo.value.funds == ["F1"]

    def test_cash_needs_opt_in(self, market_builder):
        snapshot = market_builder(
            [], [(0, 0, 10.0), (0, 1, 10.0)], prices=[1.0, 1.0], n_funds=1,
            asset_ids=["CASH", "X1"], asset_class=["cash", "equity"],
        )
        config = ScenarioConfig(shocked_assets="CASH", eta=0.5, crit_rate=0.5)
        with pytest.raises(ContagionError):
            run_cascade(snapshot, config)
        assert run_cascade(snapshot, config.with_updates(allow_cash=True)).final_failures == 0

    @pytest.mark.parametrize(
        "changes",
        [{"eta": 1.0}, {"crit_rate": 0.0}, {"omega": 1.5}, {"shocked_assets": ""}],
    )
    def test_invalid_scenarios(self, changes):
        base = dict(shocked_assets="GOV1", eta=0.7, crit_rate=0.7)
        with pytest.raises(ValidationError):
            ScenarioConfig(**{**base, **changes})

    def test_shocked_asset_list_parsing(self):
        config = ScenarioConfig(shocked_assets=" GOV1, X2 ,GOV1", eta=0.7, crit_rate=0.7)
        assert config.shocked_assets == ("GOV1", "X2")
        assert config.parameters()["shocked_assets"] == "GOV1,X2"
        assert set(PRESETS) == {"severe", "mild"}


class TestProperties:
    def test_matches_exhaustive_oracle(self, random_market_builder):
        rng = np.random.default_rng(21)
        for _ in range(200):
            snapshot = random_market_builder(rng, int(rng.integers(2, 9)))
            config = random_scenario(rng, snapshot)
            result = run_cascade(snapshot, config)
            np.testing.assert_array_equal(result.failure_step, reference_failure_steps(snapshot, config))
            assert np.all(least_closed_set(snapshot, config, together=False) <= result.failed)
            assert np.all(result.failed <= least_closed_set(snapshot, config, together=True))
            assert result.iterations <= snapshot.n_funds + 1

    def test_channel_isolation(self, random_market_builder):
        rng = np.random.default_rng(22)
        for _ in range(100):
            snapshot = random_market_builder(rng, int(rng.integers(2, 11)))
            config = random_scenario(rng, snapshot).with_updates(beta_rate=0.0, omega=0.0)
            result = run_cascade(snapshot, config)
            assert result.final_failures == result.initial_failures

    def test_failures_grow_as_shock_deepens(self):
        for seed in range(20):
            snapshot = generate_market(
                GeneratorConfig(
                    n_funds=25, n_assets=15, mean_cross_degree=3.0, mean_asset_degree=5.0,
                    administrators=4, seed=seed,
                )
            )
            ctx = CascadeContext(snapshot)
            previous = np.zeros(snapshot.n_funds, dtype=bool)
            for eta in np.linspace(0.95, 0.05, 10):
                config = ScenarioConfig(
                    shocked_assets="GOV1", eta=float(eta), crit_rate=0.8, beta_rate=0.1, omega=0.2
                )
                failed = run_cascade(snapshot, config, ctx=ctx, record=False).failed
                assert np.all(failed >= previous)
                previous = failed


def test_asset_impact_scan(concentrated_market):
    base = ScenarioConfig(**MELTDOWN)
    impacts = asset_impact_scan(concentrated_market, base)
    assert impacts[0].asset_id == "GOV1"
    assert impacts[0].final_failures == 6
    assert sorted(i.asset_id for i in impacts) == ["GOV1", "X1", "X2", "X3"]
    assert list(impact_frame(impacts).columns)[0] == "asset_id"


def test_result_serialization(concentrated_market):
    result = run_cascade(concentrated_market, ScenarioConfig(**MELTDOWN))
    data = result.to_dict()
    assert data["summary"]["final_failures"] == 6
    assert data["failure_step"]["F3"] == 4
    assert len(data["trajectory"]) == result.iterations + 1
    assert result.summary_frame().loc[0, "termination_reason"] == "converged"


@pytest.mark.slow
def test_failures_grow_as_shock_deepens_large_ensemble():
    for seed in range(100):
        snapshot = generate_market(
            GeneratorConfig(n_funds=60, n_assets=30, mean_cross_degree=4.0, mean_asset_degree=8.0, seed=seed)
        )
        ctx = CascadeContext(snapshot)
        previous = np.zeros(snapshot.n_funds, dtype=bool)
        for eta in np.linspace(0.95, 0.05, 10):
            config = ScenarioConfig(shocked_assets="GOV1", eta=float(eta), crit_rate=0.8, beta_rate=0.2, omega=0.3)
            failed = run_cascade(snapshot, config, ctx=ctx, record=False).failed
            assert np.all(failed >= previous)
            previous = failed
