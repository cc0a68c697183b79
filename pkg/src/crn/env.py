"""Trading MDP: observations, position-sizing execution, and rewards.

Execution follows the conservative position-sizing rules: agent-chosen
fractions are clamped to the 40-60% band, a >= 80% directional signal in the
trade's direction overrides the fraction to 75%, and every trade pays a
0.1% fee on its notional. Sale proceeds are credited to the cash balance
and purchased coins to the wallet at the same-day close.

The scalar reward blends a piecewise return-on-investment score (weight
0.7) with a piecewise Sharpe-ratio score (weight 0.3).
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

logger = logging.getLogger(__name__)


class EnvError(Exception):
    pass


class EpisodeFinishedError(EnvError):
    """step() called after the episode ended."""


class ActionKind(str, Enum):
    BUY = "Buy"
    SELL = "Sell"
    HOLD = "Hold"


@dataclass(frozen=True)
class EnvConfig:
    lower_fraction: float = 0.40
    upper_fraction: float = 0.60
    strong_fraction: float = 0.75
    strong_probability: float = 0.80
    fee_rate: float = 0.001
    risk_free_annual: float = 0.034
    roi_weight: float = 0.7
    sharpe_weight: float = 0.3
    sharpe_window: int = 30
    initial_cash: float = 1000.0

    def __post_init__(self):
        if not (0 < self.lower_fraction <= self.upper_fraction < self.strong_fraction <= 1):
            raise EnvError("need 0 < lower <= upper < strong fraction <= 1")
        if not (0.5 < self.strong_probability <= 1):
            raise EnvError("strong-signal cutoff must be in (0.5, 1]")
        if self.fee_rate < 0:
            raise EnvError("fee rate must be nonnegative")

    @property
    def risk_free_daily(self) -> float:
        return self.risk_free_annual / 365.0


@dataclass(frozen=True)
class ActionCommand:
    kind: ActionKind
    fraction: float = 0.0


@dataclass
class PortfolioState:
    """Cash balance B, coin holdings WA, and the portfolio value history."""

    balance: float
    holdings: float = 0.0
    step_index: int = 0
    value_history: list[float] = field(default_factory=list)

    def value(self, price: float) -> float:
        return self.balance + self.holdings * price


@dataclass(frozen=True)
class Observation:
    features: np.ndarray
    p_up: float
    p_down: float
    cash_fraction: float
    holdings_fraction: float

    def vector(self) -> np.ndarray:
        return np.concatenate(
            [self.features, [self.p_up, self.p_down, self.cash_fraction, self.holdings_fraction]]
        )


@dataclass(frozen=True)
class StepResult:
    observation: Observation | None
    reward: float
    done: bool
    info: dict


def decode_action(a1: float, a2: float, cfg: EnvConfig) -> ActionCommand:
    """Map two [-1, 1] channels to a trade command.

    Channel 1 selects the kind by thirds (low = Sell, middle = Hold,
    high = Buy); channel 2 maps affinely onto the configured fraction band.
    The strong-signal override to 75% happens during execution, never here.
    """
    a1 = float(np.clip(a1, -1.0, 1.0))
    a2 = float(np.clip(a2, -1.0, 1.0))
    fraction = cfg.lower_fraction + (a2 + 1.0) / 2.0 * (cfg.upper_fraction - cfg.lower_fraction)
    if a1 < -1.0 / 3.0:
        return ActionCommand(ActionKind.SELL, fraction)
    if a1 > 1.0 / 3.0:
        return ActionCommand(ActionKind.BUY, fraction)
    return ActionCommand(ActionKind.HOLD, 0.0)


def apply_action(
    portfolio: PortfolioState,
    action: ActionCommand,
    p_up: float,
    p_down: float,
    price: float,
    cfg: EnvConfig,
) -> tuple[float, float]:
    """Execute one trade in place; returns (fee paid, executed fraction).

    Sells move ``fraction`` of the wallet at ``price``; buys spend
    ``fraction`` of the cash balance. The fee is 0.1% of the traded
    notional and is paid from cash. Balances never go negative.
    """
    if price <= 0:
        raise EnvError("price must be positive")
    if action.kind is ActionKind.HOLD:
        return 0.0, 0.0

    if action.kind is ActionKind.SELL:
        if p_down >= cfg.strong_probability:
            fraction = cfg.strong_fraction
        else:
            fraction = float(np.clip(action.fraction, cfg.lower_fraction, cfg.upper_fraction))
        coins_sold = portfolio.holdings * fraction
        proceeds = coins_sold * price
        fee = proceeds * cfg.fee_rate
        portfolio.holdings -= coins_sold
        portfolio.balance += proceeds - fee
        if portfolio.balance < 0:  # only possible with extreme fee configs
            fee += portfolio.balance
            portfolio.balance = 0.0
        return fee, fraction

    if p_up >= cfg.strong_probability:
        fraction = cfg.strong_fraction
    else:
        fraction = float(np.clip(action.fraction, cfg.lower_fraction, cfg.upper_fraction))
    spend = portfolio.balance * fraction
    fee = spend * cfg.fee_rate
    if spend + fee > portfolio.balance:
        # scale the trade down so the residual balance is exactly zero
        spend = portfolio.balance / (1.0 + cfg.fee_rate)
        fee = portfolio.balance - spend
    portfolio.holdings += spend / price
    portfolio.balance -= spend + fee
    if abs(portfolio.balance) < 1e-15:
        portfolio.balance = 0.0
    return fee, fraction


def compute_sharpe(value_history, cfg: EnvConfig) -> float:
    """Sharpe ratio of daily returns over the trailing window.

    Uses at most ``cfg.sharpe_window`` returns; degenerate histories
    (fewer than 2 values, or zero return variance up to float rounding)
    score 0.
    """
    values = np.asarray(value_history, dtype=float)
    if len(values) < 2:
        return 0.0
    values = values[-(cfg.sharpe_window + 1) :]
    returns = values[1:] / values[:-1] - 1.0
    std = float(np.std(returns))
    if std <= 1e-12:
        return 0.0
    return (float(np.mean(returns)) - cfg.risk_free_daily) / std


def reward_sr(s_p: float) -> int:
    """Piecewise Sharpe score; overlapping boundaries resolve so that the
    exact-zero rule wins at 0 and the more positive band wins at 1 and 4
    (symmetric on the negative side)."""
    if s_p >= 4:
        return 10
    if s_p >= 1:
        return 4
    if s_p > 0:
        return 1
    if s_p == 0:
        return 0
    if s_p >= -1:
        return -1
    if s_p >= -4:
        return -4
    return -10


def reward_roi(roi_value: float) -> int:
    """Piecewise ROI score; the uncovered band 0 < ROI < 0.1 maps to 0."""
    if roi_value >= 0.5:
        return 10
    if roi_value >= 0.2:
        return 4
    if roi_value >= 0.1:
        return 1
    if roi_value >= 0:
        return 0
    if roi_value >= -0.2:
        return -4
    return -10


def combined_reward(roi_value: float, s_p: float, cfg: EnvConfig = EnvConfig()) -> float:
    return cfg.roi_weight * reward_roi(roi_value) + cfg.sharpe_weight * reward_sr(s_p)


@dataclass
class TradeRecord:
    date: object
    kind: ActionKind
    fraction: float
    fee: float
    balance: float
    holdings: float
    value: float
    p_up: float
    reward: float


def build_observation(
    features: np.ndarray,
    feature_mean: np.ndarray,
    feature_std: np.ndarray,
    p_up: float,
    p_down: float,
    portfolio: PortfolioState,
    price: float,
) -> Observation:
    """Z-score the raw features with training statistics and append the
    direction probabilities and portfolio fractions."""
    std = np.where(feature_std > 0, feature_std, 1.0)
    normalized = (np.asarray(features, dtype=float) - feature_mean) / std
    normalized = np.where(feature_std > 0, normalized, 0.0)
    value = portfolio.value(price)
    if value <= 0:
        raise EnvError("portfolio value must be positive")
    return Observation(
        features=normalized,
        p_up=p_up,
        p_down=p_down,
        cash_fraction=portfolio.balance / value,
        holdings_fraction=portfolio.holdings * price / value,
    )


class TradingEnv:
    """Sequential daily trading environment over a prepared episode.

    ``features`` is the raw (unnormalized) per-day feature matrix;
    ``predictions`` holds (p_up, p_down) per day. When ``use_signal`` is
    False the probabilities are neither observed nor allowed to trigger the
    strong-signal override (the Base-RL ablation).
    """

    def __init__(
        self,
        dates,
        closes,
        features: np.ndarray,
        predictions: np.ndarray,
        feature_mean: np.ndarray,
        feature_std: np.ndarray,
        cfg: EnvConfig = EnvConfig(),
        use_signal: bool = True,
    ):
        self.dates = list(dates)
        self.closes = np.asarray(closes, dtype=float)
        self.features = np.asarray(features, dtype=float)
        self.predictions = np.asarray(predictions, dtype=float)
        self.feature_mean = np.asarray(feature_mean, dtype=float)
        self.feature_std = np.asarray(feature_std, dtype=float)
        self.cfg = cfg
        self.use_signal = use_signal
        if not (len(self.dates) == len(self.closes) == len(self.features) == len(self.predictions)):
            raise EnvError("episode arrays must share one length")
        if len(self.closes) < 2:
            raise EnvError("episode needs at least 2 days")
        self.reset()

    @property
    def observation_size(self) -> int:
        n = self.features.shape[1] + 2  # features + portfolio fractions
        return n + 2 if self.use_signal else n

    def _signal(self, t: int) -> tuple[float, float]:
        if not self.use_signal:
            return 0.5, 0.5
        return float(self.predictions[t, 0]), float(self.predictions[t, 1])

    def _observe(self, t: int) -> Observation:
        p_up, p_down = self._signal(t)
        obs = build_observation(
            self.features[t],
            self.feature_mean,
            self.feature_std,
            p_up,
            p_down,
            self.portfolio,
            float(self.closes[t]),
        )
        if not self.use_signal:
            obs = Observation(
                features=obs.features,
                p_up=float("nan"),
                p_down=float("nan"),
                cash_fraction=obs.cash_fraction,
                holdings_fraction=obs.holdings_fraction,
            )
        return obs

    def observe(self) -> Observation:
        """Observation for the current (not yet acted-on) day."""
        if self.done:
            raise EpisodeFinishedError("episode already finished")
        return self._observe(self.t)

    def observation_vector(self, obs: Observation) -> np.ndarray:
        if self.use_signal:
            return obs.vector()
        return np.concatenate([obs.features, [obs.cash_fraction, obs.holdings_fraction]])

    def reset(self) -> Observation:
        self.t = 0
        self.done = False
        self.portfolio = PortfolioState(balance=self.cfg.initial_cash)
        self.portfolio.value_history = [self.portfolio.value(float(self.closes[0]))]
        self.initial_value = self.portfolio.value_history[0]
        self.trade_log: list[TradeRecord] = []
        return self._observe(0)

    def step(self, a1: float, a2: float) -> StepResult:
        """Decode and execute one action at today's close, then advance."""
        if self.done:
            raise EpisodeFinishedError("episode already finished")
        t = self.t
        price = float(self.closes[t])
        p_up, p_down = self._signal(t)
        action = decode_action(a1, a2, self.cfg)
        fee, fraction = apply_action(self.portfolio, action, p_up, p_down, price, self.cfg)

        self.t += 1
        last = self.t == len(self.closes) - 1
        next_price = float(self.closes[self.t])
        terminal_fee = 0.0
        if last and self.portfolio.holdings > 0:
            # liquidate everything at the final close, fee applied
            proceeds = self.portfolio.holdings * next_price
            terminal_fee = proceeds * self.cfg.fee_rate
            self.portfolio.balance += proceeds - terminal_fee
            self.portfolio.holdings = 0.0
        value = self.portfolio.value(next_price)
        self.portfolio.value_history.append(value)
        self.portfolio.step_index = self.t

        cumulative_roi = (value - self.initial_value) / self.initial_value
        s_p = compute_sharpe(self.portfolio.value_history, self.cfg)
        reward = combined_reward(cumulative_roi, s_p, self.cfg)

        self.trade_log.append(
            TradeRecord(
                date=self.dates[t],
                kind=action.kind,
                fraction=fraction,
                fee=fee + terminal_fee,
                balance=self.portfolio.balance,
                holdings=self.portfolio.holdings,
                value=value,
                p_up=p_up if self.use_signal else float("nan"),
                reward=reward,
            )
        )
        self.done = last
        obs = None if last else self._observe(self.t)
        return StepResult(
            observation=obs,
            reward=reward,
            done=last,
            info={"fee": fee + terminal_fee, "fraction": fraction, "kind": action.kind},
        )

    def write_trade_log(self, path) -> None:
        write_trade_log(self.trade_log, path)


def write_trade_log(records: list[TradeRecord], path) -> None:
    """Persist a trade log as CSV with repr-exact floats."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["date", "kind", "fraction", "fee", "balance", "holdings", "value", "p_up", "reward"])
        for rec in records:
            writer.writerow(
                [
                    rec.date.isoformat() if hasattr(rec.date, "isoformat") else rec.date,
                    rec.kind.value,
                    repr(float(rec.fraction)),
                    repr(float(rec.fee)),
                    repr(float(rec.balance)),
                    repr(float(rec.holdings)),
                    repr(float(rec.value)),
                    "" if math.isnan(rec.p_up) else repr(float(rec.p_up)),
                    repr(float(rec.reward)),
                ]
            )
