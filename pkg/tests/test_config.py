"""Pipeline configuration parsing and validation."""

from pathlib import Path

import pytest

from crn.config import ConfigError, PipelineConfig, CoinSpec, load_config


def write_toml(tmp_path, text, name="cfg.toml"):
    path = tmp_path / name
    path.write_text(text)
    return path


MINIMAL = """
[data]
[[data.coins]]
name = "coin"
ohlcv = "coin.csv"
"""


class TestLoadConfig:
    def test_minimal_toml(self, tmp_path):
        cfg = load_config(write_toml(tmp_path, MINIMAL))
        assert cfg.coins[0].name == "coin"
        assert cfg.coins[0].ohlcv == tmp_path / "coin.csv"
        assert cfg.coins[0].tweets is None
        assert cfg.macro is None
        assert cfg.feature_mode == "auto"
        assert cfg.seeds == (1, 2, 3, 4, 5)

    def test_full_fixture_config(self, fixture_config_path):
        cfg = load_config(fixture_config_path)
        assert cfg.feature_mode == "pinned"
        assert cfg.pinned_groups == {"synthcoin": "OHLCV+MACRO+TWEETS"}
        assert cfg.macro == fixture_config_path.parent / "macro.csv"
        assert cfg.train_steps == 2048
        assert cfg.out_dir == Path("out")
        assert "BUY_AND_HOLD" in cfg.strategies

    def test_json_config(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text('{"data": {"coins": [{"name": "c", "ohlcv": "c.csv"}]}}')
        cfg = load_config(path)
        assert cfg.coins[0].name == "c"

    def test_no_coins_rejected(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(write_toml(tmp_path, "[data]\n"))

    def test_coin_without_ohlcv_rejected(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(write_toml(tmp_path, '[data]\n[[data.coins]]\nname = "c"\n'))

    def test_malformed_toml_rejected(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(write_toml(tmp_path, "not [valid\n"))

    def test_unknown_env_key_rejected(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(write_toml(tmp_path, MINIMAL + "[env]\nmystery = 1\n"))

    def test_agent_overrides_reach_dataclasses(self, tmp_path):
        text = MINIMAL + (
            "[agents]\ntrain_steps = 512\n"
            "[agents.ppo]\nrollout_length = 128\nhidden_sizes = [32, 32]\n"
            "[agents.ddpg]\nwarmup_steps = 10\n"
        )
        cfg = load_config(write_toml(tmp_path, text))
        assert cfg.train_steps == 512
        assert cfg.ppo.rollout_length == 128
        assert cfg.ppo.hidden_sizes == (32, 32)
        assert cfg.ddpg.warmup_steps == 10

    def test_env_overrides(self, tmp_path):
        cfg = load_config(write_toml(tmp_path, MINIMAL + "[env]\nfee_rate = 0.0\n"))
        assert cfg.env.fee_rate == 0.0


class TestValidation:
    def coin(self):
        return CoinSpec(name="c", ohlcv=Path("c.csv"))

    def test_empty_seeds_rejected(self):
        with pytest.raises(ConfigError):
            PipelineConfig(coins=[self.coin()], seeds=())

    def test_bad_feature_mode(self):
        with pytest.raises(ConfigError):
            PipelineConfig(coins=[self.coin()], feature_mode="magic")

    def test_invalid_pinned_group(self):
        with pytest.raises(ConfigError):
            PipelineConfig(coins=[self.coin()], pinned_groups={"c": "NOPE"})

    def test_pinned_mode_requires_complete_pins(self):
        with pytest.raises(ConfigError):
            PipelineConfig(coins=[self.coin()], feature_mode="pinned")
