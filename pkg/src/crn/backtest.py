"""Backtest orchestration, performance metrics, and report emission.

A run trains one agent on the chronological training split and evaluates
its deterministic policy once over the test split; the Buy-and-Hold
benchmark and the OHLCV-only Base-RL ablation share the same harness.
Five seeded runs per (coin, strategy) are aggregated into mean (std) rows.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass, field

import numpy as np

from . import pgm
from .agents import DdpgConfig, PpoConfig, train_agent
from .env import ActionKind, EnvConfig, TradeRecord, TradingEnv
from .indicators import compute_feature_frame
from .market_data import Dataset
from .pgm.discretize import DIRECTION, assign_bins

logger = logging.getLogger(__name__)

STRATEGIES = ("CRN_PPO", "CRN_DDPG", "BASE_PPO", "BASE_DDPG", "BUY_AND_HOLD")
RUNS_PER_STRATEGY = 5
DAYS_PER_YEAR = 365.0


class BacktestError(Exception):
    pass


def roi(initial_value: float, final_value: float) -> float:
    """Return on investment as a fraction of the initial value."""
    if initial_value <= 0:
        raise BacktestError("initial value must be positive")
    return (final_value - initial_value) / initial_value


def annual_roi(roi_value: float, days: int) -> float:
    """Linear annualization: roi * 365 / days."""
    if days < 1:
        raise BacktestError("days must be >= 1")
    return roi_value * DAYS_PER_YEAR / days


@dataclass
class RunResult:
    coin: str
    strategy: str
    seed: int
    roi: float
    annual_roi: float
    days: int
    trade_log: list[TradeRecord] = field(default_factory=list)

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise BacktestError(f"unknown strategy {self.strategy!r}")
        if self.roi <= -1:
            raise BacktestError("ROI cannot be at or below -100%")


@dataclass
class AggregateEntry:
    coin: str
    strategy: str
    roi_mean: float
    roi_std: float
    annual_roi_mean: float
    annual_roi_std: float
    decision: dict


@dataclass
class PreparedCoin:
    """All per-coin arrays an episode needs, aligned to the full dataset.

    ``valid`` marks rows usable as episode days: past indicator warm-up and,
    when the direction signal is in play, with a full 5-day prediction
    window. ``predictions`` holds (p_up, p_down) per row.
    """

    coin: str
    group: str
    dates: list
    closes: np.ndarray
    features: np.ndarray
    valid: np.ndarray
    predictions: np.ndarray
    feature_mean: np.ndarray
    feature_std: np.ndarray
    split_index: int
    model: pgm.DbnModel | None = None


def fit_direction_model(ds: Dataset, group: str, bins: int = 3) -> pgm.DbnModel:
    """Fit the two-slice direction model on the training split only."""
    frame = compute_feature_frame(ds, group)
    n = len(frame)
    fit_rows = np.zeros(n, dtype=bool)
    fit_rows[: ds.split_index] = True
    data, variables = pgm.discretize_frame(frame, ds.column("close"), bins=bins, fit_rows=fit_rows)
    row_index = data["_row_index"]
    train_data = {k: v[row_index < ds.split_index] for k, v in data.items()}
    return pgm.fit_dbn(train_data, variables, feature_group=group)


def prepare_coin(
    ds: Dataset,
    group: str,
    model: pgm.DbnModel | None,
    bins: int = 3,
) -> PreparedCoin:
    """Assemble episode arrays for one coin and one feature group.

    With a model, per-day direction probabilities are produced by filtering
    the trailing 5-day window of discretized observations; days without a
    full window are marked invalid. Without a model (the Base-RL ablation)
    predictions stay at the uninformative (0.5, 0.5).
    """
    frame = compute_feature_frame(ds, group)
    n = len(frame)
    features = frame.matrix()
    valid = ~frame.mask
    predictions = np.full((n, 2), 0.5)

    if model is not None:
        window_len = model.window_length
        feature_names = model.feature_names
        bin_cols = {
            name: assign_bins(frame.columns[name], model.variables[name].bin_edges)
            for name in feature_names
        }
        ok = np.zeros(n, dtype=bool)
        for t in range(n):
            if t < window_len - 1 or frame.mask[t - window_len + 1 : t + 1].any():
                continue
            window = [
                {name: int(bin_cols[name][s]) for name in feature_names}
                for s in range(t - window_len + 1, t + 1)
            ]
            pred = pgm.dbn_predict(model, window)
            predictions[t] = (pred.p_up, pred.p_down)
            ok[t] = True
        valid &= ok

    first_valid = int(np.argmax(valid)) if valid.any() else n
    if (~valid[first_valid:]).any():
        raise BacktestError("valid rows are not contiguous")
    train_rows = valid.copy()
    train_rows[ds.split_index :] = False
    if not train_rows.any():
        raise BacktestError("no valid training rows")
    train_features = features[train_rows]
    return PreparedCoin(
        coin=ds.asset,
        group=group,
        dates=list(ds.dates),
        closes=np.asarray(ds.column("close"), dtype=float),
        features=features,
        valid=valid,
        predictions=predictions,
        feature_mean=train_features.mean(axis=0),
        feature_std=train_features.std(axis=0),
        split_index=ds.split_index,
        model=model,
    )


def make_env(
    prepared: PreparedCoin,
    start: int,
    stop: int,
    cfg: EnvConfig,
    use_signal: bool,
) -> TradingEnv:
    return TradingEnv(
        dates=prepared.dates[start:stop],
        closes=prepared.closes[start:stop],
        features=prepared.features[start:stop],
        predictions=prepared.predictions[start:stop],
        feature_mean=prepared.feature_mean,
        feature_std=prepared.feature_std,
        cfg=cfg,
        use_signal=use_signal,
    )


def episode_bounds(prepared: PreparedCoin) -> tuple[int, int, int]:
    """(first valid row, split row, end row) for train/test episodes."""
    first_valid = int(np.argmax(prepared.valid))
    return first_valid, prepared.split_index, len(prepared.closes)


def buy_and_hold(closes, initial_cash: float, fee_rate: float) -> tuple[float, float]:
    """Buy everything at the first close, sell everything at the last.

    Returns (roi, final_value); both trades pay the configured fee.
    """
    closes = np.asarray(closes, dtype=float)
    if len(closes) < 1:
        raise BacktestError("empty price series")
    spend = initial_cash / (1.0 + fee_rate)
    coins = spend / closes[0]
    final_cash = coins * closes[-1] * (1.0 - fee_rate)
    return roi(initial_cash, final_cash), final_cash


def _evaluate(agent, env: TradingEnv) -> None:
    obs = env.reset()
    while not env.done:
        a1, a2 = agent.act(env.observation_vector(obs))
        result = env.step(a1, a2)
        obs = result.observation


def run_backtest(
    prepared: PreparedCoin,
    strategy: str,
    seed: int,
    env_cfg: EnvConfig = EnvConfig(),
    train_steps: int = 20_000,
    ppo_cfg: PpoConfig | None = None,
    ddpg_cfg: DdpgConfig | None = None,
) -> RunResult:
    """One seeded train-and-evaluate run for one coin and strategy."""
    if strategy not in STRATEGIES:
        raise BacktestError(f"unknown strategy {strategy!r}")
    first_valid, split, end = episode_bounds(prepared)
    if split - first_valid < 2 or end - split < 2:
        raise BacktestError("splits too small to run")
    test_days = end - split

    if strategy == "BUY_AND_HOLD":
        run_roi, _ = buy_and_hold(prepared.closes[split:end], env_cfg.initial_cash, env_cfg.fee_rate)
        return RunResult(
            coin=prepared.coin,
            strategy=strategy,
            seed=seed,
            roi=run_roi,
            annual_roi=annual_roi(run_roi, test_days),
            days=test_days,
            trade_log=[],
        )

    use_signal = strategy.startswith("CRN")
    if use_signal and prepared.model is None:
        raise BacktestError("CRN strategies need a fitted direction model")
    algorithm = strategy.split("_")[1]
    agent = train_agent(
        algorithm,
        lambda: make_env(prepared, first_valid, split, env_cfg, use_signal),
        total_steps=train_steps,
        seed=seed,
        ppo_cfg=ppo_cfg,
        ddpg_cfg=ddpg_cfg,
    )
    test_env = make_env(prepared, split, end, env_cfg, use_signal)
    _evaluate(agent, test_env)
    final_value = test_env.portfolio.value_history[-1]
    run_roi = roi(env_cfg.initial_cash, final_value)
    return RunResult(
        coin=prepared.coin,
        strategy=strategy,
        seed=seed,
        roi=run_roi,
        annual_roi=annual_roi(run_roi, test_days),
        days=test_days,
        trade_log=list(test_env.trade_log),
    )


def decision_stats(trade_log: list[TradeRecord]) -> dict:
    """Action frequencies, average executed position sizes, and the share of
    Up vs Down direction signals, all in percent."""
    if not trade_log:
        raise BacktestError("empty trade log")
    n = len(trade_log)
    counts = {kind: 0 for kind in (ActionKind.BUY, ActionKind.SELL, ActionKind.HOLD)}
    fractions = {ActionKind.BUY: [], ActionKind.SELL: []}
    up = down = signal_rows = 0
    for rec in trade_log:
        counts[rec.kind] += 1
        if rec.kind in fractions:
            fractions[rec.kind].append(rec.fraction)
        if not np.isnan(rec.p_up):
            signal_rows += 1
            if rec.p_up > 1.0 - rec.p_up:
                up += 1
            else:
                down += 1
    out = {
        "buy_pct": 100.0 * counts[ActionKind.BUY] / n,
        "sell_pct": 100.0 * counts[ActionKind.SELL] / n,
        "hold_pct": 100.0 * counts[ActionKind.HOLD] / n,
        "avg_buy_size_pct": 100.0 * float(np.mean(fractions[ActionKind.BUY])) if fractions[ActionKind.BUY] else None,
        "avg_sell_size_pct": 100.0 * float(np.mean(fractions[ActionKind.SELL])) if fractions[ActionKind.SELL] else None,
    }
    if signal_rows:
        out["up_pct"] = 100.0 * up / signal_rows
        out["down_pct"] = 100.0 * down / signal_rows
    else:
        out["up_pct"] = out["down_pct"] = None
    return out


def aggregate_runs(results: list[RunResult]) -> AggregateEntry:
    """Sample mean/std (ddof=1) over the five seeded runs of one cell."""
    if len(results) != RUNS_PER_STRATEGY:
        raise BacktestError(f"need exactly {RUNS_PER_STRATEGY} runs, got {len(results)}")
    coins = {r.coin for r in results}
    strategies = {r.strategy for r in results}
    if len(coins) != 1 or len(strategies) != 1:
        raise BacktestError("runs mix coins or strategies")
    rois = np.array([r.roi for r in results])
    annuals = np.array([r.annual_roi for r in results])
    logs = [r for r in results if r.trade_log]
    decision = decision_stats(logs[0].trade_log) if logs else {}
    return AggregateEntry(
        coin=coins.pop(),
        strategy=strategies.pop(),
        roi_mean=float(rois.mean()),
        roi_std=float(rois.std(ddof=1)),
        annual_roi_mean=float(annuals.mean()),
        annual_roi_std=float(annuals.std(ddof=1)),
        decision=decision,
    )


def _fmt_mean_std(mean_pct: float, std_pct: float) -> str:
    return f"{mean_pct:.2f} ({std_pct:.2f})"


def config_hash(config: dict) -> str:
    return hashlib.sha256(json.dumps(config, sort_keys=True, default=str).encode()).hexdigest()[:16]


def emit_report(aggregates: list[AggregateEntry], out_dir, config: dict | None = None, figures: bool = True) -> dict:
    """Write the machine-readable JSON and the human tables (plus figures).

    Returns the JSON document. Tables mirror the per-coin ROI layout with
    "mean (std)" cells and the decision-analysis percentages.
    """
    from pathlib import Path

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    doc = {
        "config_hash": config_hash(config or {}),
        "rows": [
            {
                "coin": a.coin,
                "strategy": a.strategy,
                "roi_pct_mean": a.roi_mean * 100.0,
                "roi_pct_std": a.roi_std * 100.0,
                "annual_roi_pct_mean": a.annual_roi_mean * 100.0,
                "annual_roi_pct_std": a.annual_roi_std * 100.0,
                "decision": a.decision,
            }
            for a in aggregates
        ],
    }
    with open(out / "report.json", "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)

    with open(out / "roi_table.csv", "w", newline="") as fh:
        fh.write("coin,strategy,roi_pct,annual_roi_pct\n")
        for a in aggregates:
            fh.write(
                f"{a.coin},{a.strategy},"
                f"\"{_fmt_mean_std(a.roi_mean * 100, a.roi_std * 100)}\","
                f"\"{_fmt_mean_std(a.annual_roi_mean * 100, a.annual_roi_std * 100)}\"\n"
            )

    lines = [f"{'Coin':<14}{'Strategy':<14}{'ROI %':>18}{'Annual ROI %':>18}"]
    for a in aggregates:
        lines.append(
            f"{a.coin:<14}{a.strategy:<14}"
            f"{_fmt_mean_std(a.roi_mean * 100, a.roi_std * 100):>18}"
            f"{_fmt_mean_std(a.annual_roi_mean * 100, a.annual_roi_std * 100):>18}"
        )
    if aggregates:
        by_strategy: dict[str, list[AggregateEntry]] = {}
        for a in aggregates:
            by_strategy.setdefault(a.strategy, []).append(a)
        for strategy, rows in sorted(by_strategy.items()):
            mean_roi = float(np.mean([r.roi_mean for r in rows])) * 100
            mean_annual = float(np.mean([r.annual_roi_mean for r in rows])) * 100
            lines.append(f"{'Average':<14}{strategy:<14}{mean_roi:>18.2f}{mean_annual:>18.2f}")
    with open(out / "roi_table.txt", "w") as fh:
        fh.write("\n".join(lines) + "\n")

    with open(out / "decision_table.csv", "w", newline="") as fh:
        fh.write("coin,strategy,buy_pct,sell_pct,hold_pct,avg_buy_size_pct,avg_sell_size_pct,up_pct,down_pct\n")
        for a in aggregates:
            d = a.decision
            if not d:
                continue
            cells = [
                a.coin,
                a.strategy,
                *(
                    "" if d.get(k) is None else f"{d[k]:.2f}"
                    for k in (
                        "buy_pct",
                        "sell_pct",
                        "hold_pct",
                        "avg_buy_size_pct",
                        "avg_sell_size_pct",
                        "up_pct",
                        "down_pct",
                    )
                ),
            ]
            fh.write(",".join(cells) + "\n")

    if figures:
        from .report_plots import render_report_figures

        render_report_figures(aggregates, out)
    return doc
