"""Command-line pipeline driver.

Each stage reads and writes file artifacts under the output directory, so
stages can be re-run independently and the whole pipeline is reproducible
from one config file plus a seed. Wall-clock metadata lives only in
``meta.json`` so every other artifact is byte-stable.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import asdict
from datetime import datetime, timezone
from pathlib import Path

from . import backtest as bt
from . import pgm
from .agents import train_agent, write_training_log
from .config import ConfigError, PipelineConfig, load_config
from .indicators import FEATURE_GROUPS, compute_feature_frame
from .market_data import (
    Dataset,
    MarketDataError,
    align_calendar,
    load_exogenous_csv,
    load_ohlcv_csv,
    merge_exogenous,
)
from .pgm.dbn import load_json as load_dbn, save_json as save_dbn

logger = logging.getLogger(__name__)


def _out_dir(cfg: PipelineConfig, args) -> Path:
    if args.out:
        return Path(args.out)
    env_out = os.environ.get("CRN_OUT")
    if env_out:
        return Path(env_out)
    return cfg.out_dir


def _write_meta(out: Path, cfg: PipelineConfig, stage: str) -> None:
    out.mkdir(parents=True, exist_ok=True)
    meta = {"stage": stage, "timestamp": datetime.now(timezone.utc).isoformat(), "config_hash": bt.config_hash(cfg.raw)}
    with open(out / "meta.json", "w") as fh:
        json.dump(meta, fh, indent=2)


def _load_coin_dataset(cfg: PipelineConfig, coin, out: Path) -> Dataset:
    ingested = out / "ingest" / f"{coin.name}.csv"
    if ingested.exists():
        return Dataset.from_csv(ingested, asset=coin.name)
    return _ingest_coin(cfg, coin)


def _ingest_coin(cfg: PipelineConfig, coin) -> Dataset:
    bars = load_ohlcv_csv(coin.ohlcv)
    exo_series = []
    if cfg.macro:
        exo_series.append(load_exogenous_csv(cfg.macro))
    if coin.tweets:
        exo_series.append(load_exogenous_csv(coin.tweets))
    exo = merge_exogenous(*exo_series) if exo_series else []
    return align_calendar(bars, exo, asset=coin.name)


def cmd_ingest(cfg: PipelineConfig, args, out: Path) -> int:
    target = out / "ingest"
    target.mkdir(parents=True, exist_ok=True)
    for coin in cfg.coins:
        ds = _ingest_coin(cfg, coin)
        ds.to_csv(target / f"{coin.name}.csv")
        print(f"{coin.name}: {len(ds)} rows, {len(ds.columns)} columns")
    _write_meta(out, cfg, "ingest")
    return 0


def cmd_indicators(cfg: PipelineConfig, args, out: Path) -> int:
    target = out / "indicators"
    target.mkdir(parents=True, exist_ok=True)
    groups = [args.group] if args.group else list(FEATURE_GROUPS)
    for coin in cfg.coins:
        ds = _load_coin_dataset(cfg, coin, out)
        for group in groups:
            try:
                frame = compute_feature_frame(ds, group)
            except MarketDataError as exc:
                logger.warning("%s/%s skipped: %s", coin.name, group, exc)
                continue
            name = group.replace("+", "_")
            frame.to_csv(target / f"{coin.name}__{name}.csv")
            print(f"{coin.name} {group}: {len(frame.names)} columns, {int(frame.mask.sum())} warm-up rows")
    _write_meta(out, cfg, "indicators")
    return 0


def _chosen_group(cfg: PipelineConfig, coin_name: str, out: Path) -> str:
    if cfg.feature_mode == "pinned":
        return cfg.pinned_groups[coin_name]
    selection_file = out / "selection.json"
    if selection_file.exists():
        chosen = json.loads(selection_file.read_text())
        if coin_name in chosen:
            return chosen[coin_name]["group"]
    raise ConfigError(f"no selected group for {coin_name}; run select-features or pin groups")


def cmd_select_features(cfg: PipelineConfig, args, out: Path) -> int:
    chosen: dict[str, dict] = {}
    for coin in cfg.coins:
        ds = _load_coin_dataset(cfg, coin, out)
        usable_groups = []
        for group in FEATURE_GROUPS:
            try:
                compute_feature_frame(ds, group)
                usable_groups.append(group)
            except MarketDataError:
                pass
        scores = {g: pgm.evaluate_feature_group(ds, g, bins=cfg.bins) for g in usable_groups}
        from .indicators import group_columns

        best = min(scores, key=lambda g: (-scores[g], len(group_columns(g))))
        chosen[coin.name] = {"group": best, "accuracies": scores}
        print(f"{coin.name}:")
        for group, acc in scores.items():
            marker = " <- selected" if group == best else ""
            print(f"  {group:<22} accuracy {acc:.4f}{marker}")
    with open(out / "selection.json", "w") as fh:
        json.dump(chosen, fh, indent=2, sort_keys=True)
    _write_meta(out, cfg, "select-features")
    return 0


def cmd_train_dbn(cfg: PipelineConfig, args, out: Path) -> int:
    models = out / "models"
    models.mkdir(parents=True, exist_ok=True)
    for coin in cfg.coins:
        ds = _load_coin_dataset(cfg, coin, out)
        group = _chosen_group(cfg, coin.name, out)
        model = bt.fit_direction_model(ds, group, bins=cfg.bins)
        save_dbn(model, models / f"{coin.name}.json")
        print(f"{coin.name}: fitted direction model on group {group}")
    _write_meta(out, cfg, "train-dbn")
    return 0


def _prepare(cfg: PipelineConfig, coin, out: Path, base: bool):
    ds = _load_coin_dataset(cfg, coin, out)
    if base:
        return bt.prepare_coin(ds, "OHLCV", model=None, bins=cfg.bins)
    group = _chosen_group(cfg, coin.name, out)
    model_file = out / "models" / f"{coin.name}.json"
    if model_file.exists():
        model = load_dbn(model_file)
        if model.feature_group != group:
            logger.warning("%s: saved model group %s != chosen %s; refitting", coin.name, model.feature_group, group)
            model = bt.fit_direction_model(ds, group, bins=cfg.bins)
    else:
        model = bt.fit_direction_model(ds, group, bins=cfg.bins)
    return bt.prepare_coin(ds, group, model=model, bins=cfg.bins)


def cmd_train_agent(cfg: PipelineConfig, args, out: Path) -> int:
    coin = next((c for c in cfg.coins if c.name == args.coin), None)
    if coin is None:
        raise ConfigError(f"unknown coin {args.coin!r}")
    strategy = args.strategy
    if strategy not in bt.STRATEGIES or strategy == "BUY_AND_HOLD":
        raise ConfigError(f"train-agent needs an RL strategy, got {strategy!r}")
    seed = args.seed if args.seed is not None else cfg.seeds[0]
    prepared = _prepare(cfg, coin, out, base=strategy.startswith("BASE"))
    first_valid, split, _ = bt.episode_bounds(prepared)
    algorithm = strategy.split("_")[1]
    agent = train_agent(
        algorithm,
        lambda: bt.make_env(prepared, first_valid, split, cfg.env, strategy.startswith("CRN")),
        total_steps=cfg.train_steps,
        seed=seed,
        ppo_cfg=cfg.ppo,
        ddpg_cfg=cfg.ddpg,
    )
    target = out / "agents"
    target.mkdir(parents=True, exist_ok=True)
    stem = f"{coin.name}__{strategy}__seed{seed}"
    if algorithm == "PPO":
        agent.policy.net.save_json(target / f"{stem}__policy.json")
        agent.value_net.save_json(target / f"{stem}__value.json")
    else:
        agent.actor.save_json(target / f"{stem}__actor.json")
        agent.critic.save_json(target / f"{stem}__critic.json")
    write_training_log(agent, target / f"{stem}__log.csv")
    print(f"trained {strategy} on {coin.name} (seed {seed}, {cfg.train_steps} steps)")
    _write_meta(out, cfg, "train-agent")
    return 0


def cmd_backtest(cfg: PipelineConfig, args, out: Path) -> int:
    logs_dir = out / "trade_logs"
    logs_dir.mkdir(parents=True, exist_ok=True)
    runs = []
    for coin in cfg.coins:
        prepared_cache: dict[bool, object] = {}
        for strategy in cfg.strategies:
            base = strategy.startswith("BASE")
            if base not in prepared_cache:
                prepared_cache[base] = _prepare(cfg, coin, out, base=base)
            prepared = prepared_cache[base]
            for seed in cfg.seeds:
                result = bt.run_backtest(
                    prepared,
                    strategy,
                    seed,
                    env_cfg=cfg.env,
                    train_steps=cfg.train_steps,
                    ppo_cfg=cfg.ppo,
                    ddpg_cfg=cfg.ddpg,
                )
                runs.append(result)
                if result.trade_log:
                    env_stub = f"{coin.name}__{strategy}__seed{seed}.csv"
                    _write_trade_log(result, logs_dir / env_stub)
                print(
                    f"{coin.name} {strategy} seed={seed}: "
                    f"ROI {result.roi * 100:.2f}%  annual {result.annual_roi * 100:.2f}%"
                )
    doc = [
        {
            "coin": r.coin,
            "strategy": r.strategy,
            "seed": r.seed,
            "roi": r.roi,
            "annual_roi": r.annual_roi,
            "days": r.days,
            "trade_log": f"trade_logs/{r.coin}__{r.strategy}__seed{r.seed}.csv" if r.trade_log else None,
        }
        for r in runs
    ]
    with open(out / "runs.json", "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
    _write_meta(out, cfg, "backtest")
    return 0


def _write_trade_log(result, path) -> None:
    from .env import write_trade_log

    write_trade_log(result.trade_log, path)


def cmd_report(cfg: PipelineConfig, args, out: Path) -> int:
    runs_file = out / "runs.json"
    if not runs_file.exists():
        raise ConfigError(f"{runs_file} not found; run `crn backtest` first")
    doc = json.loads(runs_file.read_text())
    grouped: dict[tuple[str, str], list[bt.RunResult]] = {}
    for row in doc:
        result = bt.RunResult(
            coin=row["coin"],
            strategy=row["strategy"],
            seed=row["seed"],
            roi=row["roi"],
            annual_roi=row["annual_roi"],
            days=row["days"],
            trade_log=_read_trade_log(out / row["trade_log"]) if row["trade_log"] else [],
        )
        grouped.setdefault((result.coin, result.strategy), []).append(result)
    aggregates = [bt.aggregate_runs(results) for results in grouped.values()]
    aggregates.sort(key=lambda a: (a.coin, a.strategy))
    bt.emit_report(aggregates, out, config=cfg.raw, figures=not args.no_figures)
    print(f"report written to {out}")
    _write_meta(out, cfg, "report")
    return 0


def _read_trade_log(path):
    import csv as _csv

    from .env import ActionKind, TradeRecord

    records = []
    with open(path, newline="") as fh:
        for row in _csv.DictReader(fh):
            records.append(
                TradeRecord(
                    date=row["date"],
                    kind=ActionKind(row["kind"]),
                    fraction=float(row["fraction"]),
                    fee=float(row["fee"]),
                    balance=float(row["balance"]),
                    holdings=float(row["holdings"]),
                    value=float(row["value"]),
                    p_up=float(row["p_up"]) if row["p_up"] else float("nan"),
                    reward=float(row["reward"]),
                )
            )
    return records


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="crn", description="Causal-signal RL trading pipeline")
    parser.add_argument("--config", required=False, help="pipeline config file (TOML or JSON)")
    parser.add_argument("--seed", type=int, default=None, help="seed override for single-run stages")
    parser.add_argument("--out", default=None, help="output directory (falls back to $CRN_OUT, then config)")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command")

    sub.add_parser("ingest", help="load, align, and persist per-coin datasets")
    p = sub.add_parser("indicators", help="compute feature frames")
    p.add_argument("--group", choices=FEATURE_GROUPS, default=None)
    sub.add_parser("select-features", help="score feature groups and pick one per coin")
    sub.add_parser("train-dbn", help="fit the direction model per coin")
    p = sub.add_parser("train-agent", help="train one agent for one coin")
    p.add_argument("--coin", required=True)
    p.add_argument("--strategy", required=True, choices=[s for s in bt.STRATEGIES if s != "BUY_AND_HOLD"])
    sub.add_parser("backtest", help="run all strategies and seeds")
    p = sub.add_parser("report", help="aggregate runs into tables and figures")
    p.add_argument("--no-figures", action="store_true")
    return parser


COMMANDS = {
    "ingest": cmd_ingest,
    "indicators": cmd_indicators,
    "select-features": cmd_select_features,
    "train-dbn": cmd_train_dbn,
    "train-agent": cmd_train_agent,
    "backtest": cmd_backtest,
    "report": cmd_report,
}


def dispatch(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    if not args.command:
        parser.print_help()
        return 2
    if not args.config:
        print("error: --config is required", file=sys.stderr)
        return 2
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    out = _out_dir(cfg, args)
    out.mkdir(parents=True, exist_ok=True)
    try:
        return COMMANDS[args.command](cfg, args, out)
    except (ConfigError, MarketDataError, bt.BacktestError, pgm.PgmError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
