"""Command-line pipeline: exit codes, artifacts, and stage chaining."""

import json
import os
from pathlib import Path

import pytest

from crn.cli import build_parser, dispatch
from tests.conftest import FIXTURE_DIR


def write_config(tmp_path, strategies, train_steps=2048, seeds=(1, 2, 3, 4, 5)):
    """Fixture-data config with absolute paths, safe to place anywhere."""
    strat = ", ".join(f'"{s}"' for s in strategies)
    seed_list = ", ".join(str(s) for s in seeds)
    text = f"""
[data]
macro = "{FIXTURE_DIR / 'macro.csv'}"

[[data.coins]]
name = "synthcoin"
ohlcv = "{FIXTURE_DIR / 'synthcoin_ohlcv.csv'}"
tweets = "{FIXTURE_DIR / 'synthcoin_tweets.csv'}"

[features]
mode = "pinned"

[features.pinned]
synthcoin = "OHLCV+MACRO+TWEETS"

[agents]
train_steps = {train_steps}

[run]
seeds = [{seed_list}]
strategies = [{strat}]
"""
    path = tmp_path / "cfg.toml"
    path.write_text(text)
    return path


class TestExitCodes:
    def test_no_command_prints_help(self, capsys):
        assert dispatch([]) == 2
        assert "usage" in capsys.readouterr().out

    def test_missing_config(self, capsys):
        assert dispatch(["ingest"]) == 2
        assert "--config" in capsys.readouterr().err

    def test_bad_config_file(self, tmp_path, capsys):
        bad = tmp_path / "bad.toml"
        bad.write_text("[data]\n")
        assert dispatch(["--config", str(bad), "ingest"]) == 1
        assert "error" in capsys.readouterr().err

    def test_unknown_coin_for_train_agent(self, tmp_path, capsys):
        cfg = write_config(tmp_path, ["CRN_PPO"])
        code = dispatch(
            ["--config", str(cfg), "--out", str(tmp_path / "out"),
             "train-agent", "--coin", "nope", "--strategy", "CRN_PPO"]
        )
        assert code == 1

    def test_report_before_backtest(self, tmp_path, capsys):
        cfg = write_config(tmp_path, ["BUY_AND_HOLD"])
        assert dispatch(["--config", str(cfg), "--out", str(tmp_path / "out"), "report"]) == 1


class TestParser:
    def test_all_commands_registered(self):
        parser = build_parser()
        text = parser.format_help()
        for cmd in ("ingest", "indicators", "select-features", "train-dbn",
                    "train-agent", "backtest", "report"):
            assert cmd in text

    def test_strategy_choices_exclude_benchmark(self):
        parser = build_parser()
        with pytest.raises(SystemExit):
            parser.parse_args(["train-agent", "--coin", "c", "--strategy", "BUY_AND_HOLD"])


class TestStages:
    def test_ingest_writes_dataset(self, tmp_path):
        cfg = write_config(tmp_path, ["BUY_AND_HOLD"])
        out = tmp_path / "out"
        assert dispatch(["--config", str(cfg), "--out", str(out), "ingest"]) == 0
        assert (out / "ingest" / "synthcoin.csv").exists()
        meta = json.loads((out / "meta.json").read_text())
        assert meta["stage"] == "ingest"

    def test_indicators_writes_frames(self, tmp_path):
        cfg = write_config(tmp_path, ["BUY_AND_HOLD"])
        out = tmp_path / "out"
        dispatch(["--config", str(cfg), "--out", str(out), "ingest"])
        assert dispatch(
            ["--config", str(cfg), "--out", str(out), "indicators", "--group", "OHLCV+TI"]
        ) == 0
        assert (out / "indicators" / "synthcoin__OHLCV_TI.csv").exists()

    def test_select_features_writes_selection(self, tmp_path):
        cfg = write_config(tmp_path, ["BUY_AND_HOLD"])
        out = tmp_path / "out"
        assert dispatch(["--config", str(cfg), "--out", str(out), "select-features"]) == 0
        chosen = json.loads((out / "selection.json").read_text())
        assert "synthcoin" in chosen
        assert chosen["synthcoin"]["group"] in chosen["synthcoin"]["accuracies"]

    def test_train_dbn_writes_model(self, tmp_path):
        cfg = write_config(tmp_path, ["BUY_AND_HOLD"])
        out = tmp_path / "out"
        assert dispatch(["--config", str(cfg), "--out", str(out), "train-dbn"]) == 0
        assert (out / "models" / "synthcoin.json").exists()

    def test_train_agent_writes_checkpoints(self, tmp_path):
        cfg = write_config(tmp_path, ["CRN_PPO"])
        out = tmp_path / "out"
        code = dispatch(
            ["--config", str(cfg), "--out", str(out), "--seed", "7",
             "train-agent", "--coin", "synthcoin", "--strategy", "CRN_PPO"]
        )
        assert code == 0
        stem = "synthcoin__CRN_PPO__seed7"
        assert (out / "agents" / f"{stem}__policy.json").exists()
        assert (out / "agents" / f"{stem}__value.json").exists()
        assert (out / "agents" / f"{stem}__log.csv").exists()

    def test_crn_out_env_fallback(self, tmp_path, monkeypatch):
        cfg = write_config(tmp_path, ["BUY_AND_HOLD"])
        out = tmp_path / "env_out"
        monkeypatch.setenv("CRN_OUT", str(out))
        monkeypatch.chdir(tmp_path)
        assert dispatch(["--config", str(cfg), "ingest"]) == 0
        assert (out / "ingest" / "synthcoin.csv").exists()


class TestPipeline:
    def test_backtest_then_report(self, tmp_path):
        cfg = write_config(tmp_path, ["BUY_AND_HOLD", "CRN_PPO"])
        out = tmp_path / "out"
        assert dispatch(["--config", str(cfg), "--out", str(out), "backtest"]) == 0
        runs = json.loads((out / "runs.json").read_text())
        assert len(runs) == 10  # 2 strategies x 5 seeds
        bah = [r for r in runs if r["strategy"] == "BUY_AND_HOLD"]
        assert len({r["roi"] for r in bah}) == 1  # benchmark ignores the seed
        crn = [r for r in runs if r["strategy"] == "CRN_PPO"]
        for r in crn:
            assert Path(out / r["trade_log"]).exists()

        assert dispatch(
            ["--config", str(cfg), "--out", str(out), "report", "--no-figures"]
        ) == 0
        report = json.loads((out / "report.json").read_text())
        strategies = {row["strategy"] for row in report["rows"]}
        assert strategies == {"BUY_AND_HOLD", "CRN_PPO"}
        for row in report["rows"]:
            if row["decision"]:
                total = (
                    row["decision"]["buy_pct"]
                    + row["decision"]["sell_pct"]
                    + row["decision"]["hold_pct"]
                )
                assert total == pytest.approx(100.0, abs=0.01)
