"""Trading environment: action decoding, execution accounting, rewards."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crn.env import (
    ActionCommand,
    ActionKind,
    EnvConfig,
    EnvError,
    EpisodeFinishedError,
    PortfolioState,
    TradingEnv,
    apply_action,
    build_observation,
    combined_reward,
    compute_sharpe,
    decode_action,
    reward_roi,
    reward_sr,
    write_trade_log,
)
from tests.conftest import make_dates

CFG = EnvConfig()

unit = st.floats(min_value=-1.0, max_value=1.0, allow_nan=False)


def make_env(closes, predictions=None, use_signal=True, cfg=CFG):
    closes = np.asarray(closes, dtype=float)
    n = len(closes)
    if predictions is None:
        predictions = np.full((n, 2), 0.5)
    features = closes[:, None]
    return TradingEnv(
        dates=make_dates(n),
        closes=closes,
        features=features,
        predictions=np.asarray(predictions, dtype=float),
        feature_mean=np.array([closes.mean()]),
        feature_std=np.array([closes.std() or 1.0]),
        cfg=cfg,
        use_signal=use_signal,
    )


class TestDecodeAction:
    def test_thirds_partition(self):
        assert decode_action(-1.0, 0.0, CFG).kind is ActionKind.SELL
        assert decode_action(-0.34, 0.0, CFG).kind is ActionKind.SELL
        assert decode_action(-0.33, 0.0, CFG).kind is ActionKind.HOLD
        assert decode_action(0.0, 0.0, CFG).kind is ActionKind.HOLD
        assert decode_action(0.33, 0.0, CFG).kind is ActionKind.HOLD
        assert decode_action(0.34, 0.0, CFG).kind is ActionKind.BUY
        assert decode_action(1.0, 0.0, CFG).kind is ActionKind.BUY

    def test_fraction_band_endpoints(self):
        assert decode_action(1.0, -1.0, CFG).fraction == pytest.approx(0.40)
        assert decode_action(1.0, 1.0, CFG).fraction == pytest.approx(0.60)
        assert decode_action(1.0, 0.0, CFG).fraction == pytest.approx(0.50)

    def test_out_of_range_channels_clipped(self):
        assert decode_action(5.0, 9.0, CFG).kind is ActionKind.BUY
        assert decode_action(5.0, 9.0, CFG).fraction == pytest.approx(0.60)

    def test_hold_has_zero_fraction(self):
        assert decode_action(0.0, 1.0, CFG).fraction == 0.0

    @given(unit, unit)
    @settings(max_examples=200, deadline=None)
    def test_fraction_always_in_band_for_trades(self, a1, a2):
        cmd = decode_action(a1, a2, CFG)
        if cmd.kind is not ActionKind.HOLD:
            assert 0.40 - 1e-12 <= cmd.fraction <= 0.60 + 1e-12


class TestApplyAction:
    def test_buy_worked_example(self):
        """1000 cash, price 10, strong Up signal: spend 750, fee 0.75."""
        p = PortfolioState(balance=1000.0)
        fee, fraction = apply_action(
            p, ActionCommand(ActionKind.BUY, 0.5), p_up=0.85, p_down=0.15, price=10.0, cfg=CFG
        )
        assert fraction == 0.75
        assert fee == pytest.approx(0.75)
        assert p.balance == pytest.approx(1000 - 750 - 0.75)
        assert p.holdings == pytest.approx(75.0)

    def test_weak_signal_uses_clamped_fraction(self):
        p = PortfolioState(balance=1000.0)
        fee, fraction = apply_action(
            p, ActionCommand(ActionKind.BUY, 0.55), p_up=0.6, p_down=0.4, price=10.0, cfg=CFG
        )
        assert fraction == pytest.approx(0.55)
        assert p.holdings == pytest.approx(55.0)
        assert fee == pytest.approx(0.55)

    def test_sell_credits_proceeds_minus_fee(self):
        p = PortfolioState(balance=100.0, holdings=10.0)
        fee, fraction = apply_action(
            p, ActionCommand(ActionKind.SELL, 0.5), p_up=0.5, p_down=0.5, price=20.0, cfg=CFG
        )
        assert fraction == 0.5
        assert p.holdings == pytest.approx(5.0)
        assert fee == pytest.approx(100 * 0.001)
        assert p.balance == pytest.approx(100 + 100 - 0.1)

    def test_strong_down_signal_overrides_sell_fraction(self):
        p = PortfolioState(balance=0.0, holdings=10.0)
        _, fraction = apply_action(
            p, ActionCommand(ActionKind.SELL, 0.4), p_up=0.1, p_down=0.9, price=5.0, cfg=CFG
        )
        assert fraction == 0.75
        assert p.holdings == pytest.approx(2.5)

    def test_override_only_for_matching_direction(self):
        # strong Down signal must not push a Buy to 75%
        p = PortfolioState(balance=1000.0)
        _, fraction = apply_action(
            p, ActionCommand(ActionKind.BUY, 0.5), p_up=0.1, p_down=0.9, price=10.0, cfg=CFG
        )
        assert fraction == 0.5

    def test_hold_is_free(self):
        p = PortfolioState(balance=500.0, holdings=3.0)
        fee, fraction = apply_action(
            p, ActionCommand(ActionKind.HOLD), p_up=0.9, p_down=0.1, price=10.0, cfg=CFG
        )
        assert (fee, fraction) == (0.0, 0.0)
        assert p.balance == 500.0 and p.holdings == 3.0

    def test_balance_never_negative_after_buy(self):
        p = PortfolioState(balance=1.0)
        apply_action(p, ActionCommand(ActionKind.BUY, 0.6), 0.9, 0.1, 10.0, CFG)
        assert p.balance >= 0.0

    def test_nonpositive_price_rejected(self):
        with pytest.raises(EnvError):
            apply_action(PortfolioState(balance=1.0), ActionCommand(ActionKind.BUY, 0.5), 0.5, 0.5, 0.0, CFG)

    def test_zero_fee_buy_sell_round_trip_restores_value(self):
        cfg = EnvConfig(fee_rate=0.0)
        p = PortfolioState(balance=1000.0)
        apply_action(p, ActionCommand(ActionKind.BUY, 0.5), 0.5, 0.5, 10.0, cfg)
        # full reversal: sell everything bought at the same price
        p2 = PortfolioState(balance=p.balance, holdings=p.holdings)
        apply_action(p2, ActionCommand(ActionKind.SELL, 1.0), 0.5, 0.5, 10.0, cfg)
        assert p2.value(10.0) == pytest.approx(1000.0, abs=1e-9)


class TestSharpe:
    def test_degenerate_histories_zero(self):
        assert compute_sharpe([1000.0], CFG) == 0.0
        assert compute_sharpe([1000.0] * 40, CFG) == 0.0  # zero variance
        assert compute_sharpe([1000.0 * 1.01**i for i in range(10)], CFG) == 0.0

    def test_alternating_returns_negative(self):
        values, v = [1000.0], 1000.0
        for i in range(20):
            v *= 1.01 if i % 2 == 0 else 0.99
            values.append(v)
        assert compute_sharpe(values, CFG) < 0.0  # mean ~ -5e-5 < daily rf

    def test_trailing_window_only(self):
        # early crash outside the 30-return window must not matter
        crash_then_flat = [1000.0, 10.0] + [10.0] * 31
        assert compute_sharpe(crash_then_flat, CFG) == 0.0

    def test_hand_computed_value(self):
        values = [100.0, 110.0, 99.0]
        rets = np.array([0.1, -0.1])
        expected = (rets.mean() - CFG.risk_free_daily) / rets.std()
        assert compute_sharpe(values, CFG) == pytest.approx(expected)


SR_TABLE = [(-5, -10), (-4, -4), (-2, -4), (-1, -1), (-0.5, -1), (0, 0),
            (0.5, 1), (1, 4), (2, 4), (4, 10), (5, 10)]
ROI_TABLE = [(-0.3, -10), (-0.2, -4), (-0.1, -4), (0, 0), (0.05, 0), (0.1, 1),
             (0.15, 1), (0.2, 4), (0.3, 4), (0.5, 10), (0.6, 10)]


class TestRewards:
    @pytest.mark.parametrize("s,expected", SR_TABLE)
    def test_sr_table(self, s, expected):
        assert reward_sr(s) == expected

    @pytest.mark.parametrize("r,expected", ROI_TABLE)
    def test_roi_table(self, r, expected):
        assert reward_roi(r) == expected

    @given(st.floats(-20, 20), st.floats(-20, 20))
    @settings(max_examples=300, deadline=None)
    def test_both_monotone_nondecreasing(self, a, b):
        lo, hi = min(a, b), max(a, b)
        assert reward_sr(lo) <= reward_sr(hi)
        assert reward_roi(lo) <= reward_roi(hi)

    def test_combined_weighting(self):
        assert combined_reward(0.15, 2) == pytest.approx(0.7 * 1 + 0.3 * 4)
        assert combined_reward(0, 0) == 0.0
        assert -10 <= combined_reward(-5, -9) <= 10


class TestObservation:
    def test_zscore_and_portfolio_fractions(self):
        obs = build_observation(
            features=np.array([12.0, 7.0]),
            feature_mean=np.array([10.0, 7.0]),
            feature_std=np.array([2.0, 0.0]),
            p_up=0.7,
            p_down=0.3,
            portfolio=PortfolioState(balance=300.0, holdings=70.0),
            price=10.0,
        )
        np.testing.assert_allclose(obs.features, [1.0, 0.0])  # zero-std -> 0
        assert obs.cash_fraction == pytest.approx(0.3)
        assert obs.holdings_fraction == pytest.approx(0.7)
        vec = obs.vector()
        assert vec.tolist() == [1.0, 0.0, 0.7, 0.3, 0.3, 0.7]


class TestTradingEnv:
    def test_episode_walkthrough_and_terminal_liquidation(self):
        closes = [10.0, 10.0, 20.0]
        env = make_env(closes)
        env.reset()
        r1 = env.step(1.0, -1.0)  # buy 40% at 10
        assert r1.info["kind"] is ActionKind.BUY
        assert env.portfolio.holdings == pytest.approx(40.0)
        assert env.portfolio.balance == pytest.approx(1000 - 400 - 0.4)
        r2 = env.step(0.0, 0.0)  # hold; terminal step liquidates at 20
        assert r2.done
        assert env.portfolio.holdings == 0.0
        expected_cash = 599.6 + 40 * 20 * (1 - 0.001)
        assert env.portfolio.balance == pytest.approx(expected_cash)
        with pytest.raises(EpisodeFinishedError):
            env.step(0.0, 0.0)

    def test_constant_price_conservation(self):
        env = make_env([10.0] * 8)
        env.reset()
        rng = np.random.default_rng(0)
        while not env.done:
            before = env.portfolio.value(10.0)
            result = env.step(rng.uniform(-1, 1), rng.uniform(-1, 1))
            after = env.portfolio.value(10.0)
            assert after == pytest.approx(before - result.info["fee"], abs=1e-9)

    def test_reward_uses_cumulative_roi(self):
        # price quadruples with no trading costs after the initial buy
        cfg = EnvConfig(fee_rate=0.0)
        env = make_env([10.0, 40.0], cfg=cfg)
        env.reset()
        result = env.step(1.0, 1.0)  # buy 60% at 10, liquidate at 40
        cum_roi = (env.portfolio.value(40.0) - 1000.0) / 1000.0
        assert cum_roi > 0.5
        assert result.reward == pytest.approx(combined_reward(cum_roi, compute_sharpe(env.portfolio.value_history, cfg), cfg))

    def test_signal_hidden_in_base_mode(self):
        predictions = np.column_stack([np.full(5, 0.9), np.full(5, 0.1)])
        env = make_env([10.0] * 5, predictions=predictions, use_signal=False)
        obs = env.reset()
        assert math.isnan(obs.p_up)
        assert env.observation_vector(obs).shape == (3,)  # 1 feature + 2 fractions
        assert env.observation_size == 3
        # the strong Up signal must not trigger the 75% override either
        env.step(1.0, -1.0)
        assert env.trade_log[0].fraction == pytest.approx(0.40)

    def test_signal_visible_in_crn_mode(self):
        predictions = np.column_stack([np.full(5, 0.9), np.full(5, 0.1)])
        env = make_env([10.0] * 5, predictions=predictions, use_signal=True)
        obs = env.reset()
        assert obs.p_up == pytest.approx(0.9)
        assert env.observation_size == 5
        env.step(1.0, -1.0)
        assert env.trade_log[0].fraction == pytest.approx(0.75)

    def test_observe_returns_current_day(self):
        env = make_env([10.0, 11.0, 12.0])
        env.reset()
        env.step(0.0, 0.0)
        obs = env.observe()
        np.testing.assert_allclose(obs.features, (11.0 - env.feature_mean) / env.feature_std)

    def test_reset_restores_initial_state(self):
        env = make_env([10.0] * 6)
        env.reset()
        env.step(1.0, 1.0)
        env.reset()
        assert env.t == 0
        assert env.portfolio.balance == 1000.0
        assert env.trade_log == []

    def test_trade_log_round_trip(self, tmp_path):
        env = make_env([10.0, 11.0, 9.0, 12.0])
        env.reset()
        for a in [(1.0, 0.0), (-1.0, 0.0), (0.0, 0.0)]:
            env.step(*a)
        path = tmp_path / "log.csv"
        write_trade_log(env.trade_log, path)
        lines = path.read_text().splitlines()
        assert lines[0] == "date,kind,fraction,fee,balance,holdings,value,p_up,reward"
        assert len(lines) == 4
        assert lines[1].split(",")[1] == "Buy"


class TestEnvConfigValidation:
    def test_fraction_ordering_enforced(self):
        with pytest.raises(EnvError):
            EnvConfig(lower_fraction=0.7, upper_fraction=0.6)

    def test_strong_probability_range(self):
        with pytest.raises(EnvError):
            EnvConfig(strong_probability=0.4)

    def test_negative_fee_rejected(self):
        with pytest.raises(EnvError):
            EnvConfig(fee_rate=-0.01)
