"""Pipeline configuration: one TOML/JSON file drives every stage."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .agents import DdpgConfig, PpoConfig
from .env import EnvConfig
from .indicators import FEATURE_GROUPS

DEFAULT_SEEDS = (1, 2, 3, 4, 5)
DEFAULT_STRATEGIES = ("CRN_PPO", "CRN_DDPG", "BASE_PPO", "BASE_DDPG", "BUY_AND_HOLD")


class ConfigError(Exception):
    pass


@dataclass(frozen=True)
class CoinSpec:
    name: str
    ohlcv: Path
    tweets: Path | None = None


@dataclass
class PipelineConfig:
    coins: list[CoinSpec]
    macro: Path | None = None
    feature_mode: str = "auto"  # "auto" or "pinned"
    pinned_groups: dict[str, str] = field(default_factory=dict)
    bins: int = 3
    env: EnvConfig = field(default_factory=EnvConfig)
    ppo: PpoConfig = field(default_factory=PpoConfig)
    ddpg: DdpgConfig = field(default_factory=DdpgConfig)
    train_steps: int = 20_000
    seeds: tuple[int, ...] = DEFAULT_SEEDS
    strategies: tuple[str, ...] = DEFAULT_STRATEGIES
    out_dir: Path = Path("out")
    raw: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.seeds:
            raise ConfigError("seeds must be nonempty")
        if self.feature_mode not in ("auto", "pinned"):
            raise ConfigError(f"unknown feature mode {self.feature_mode!r}")
        for coin, group in self.pinned_groups.items():
            if group not in FEATURE_GROUPS:
                raise ConfigError(f"{coin}: invalid pinned group {group!r}")
        if self.feature_mode == "pinned":
            missing = [c.name for c in self.coins if c.name not in self.pinned_groups]
            if missing:
                raise ConfigError(f"pinned mode but no group pinned for: {missing}")


def _sub(doc: dict, key: str) -> dict:
    value = doc.get(key, {})
    if not isinstance(value, dict):
        raise ConfigError(f"section {key!r} must be a table")
    return value


def _dataclass_from(cls, doc: dict, section: str):
    known = cls.__dataclass_fields__
    unknown = [k for k in doc if k not in known]
    if unknown:
        raise ConfigError(f"[{section}] unknown keys: {unknown}")
    coerced = {}
    for k, v in doc.items():
        if known[k].type.startswith("tuple") and isinstance(v, list):
            v = tuple(v)
        coerced[k] = v
    return cls(**coerced)


def load_config(path) -> PipelineConfig:
    """Parse a TOML or JSON pipeline configuration."""
    path = Path(path)
    try:
        if path.suffix == ".json":
            doc = json.loads(path.read_text())
        else:
            with open(path, "rb") as fh:
                doc = tomllib.load(fh)
    except (OSError, ValueError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc

    base = path.parent
    data = _sub(doc, "data")
    coins = []
    for entry in data.get("coins", []):
        if "name" not in entry or "ohlcv" not in entry:
            raise ConfigError("each [[data.coins]] entry needs name and ohlcv")
        coins.append(
            CoinSpec(
                name=entry["name"],
                ohlcv=base / entry["ohlcv"],
                tweets=(base / entry["tweets"]) if entry.get("tweets") else None,
            )
        )
    if not coins:
        raise ConfigError(f"{path}: no coins configured")

    features = _sub(doc, "features")
    agents = _sub(doc, "agents")
    run = _sub(doc, "run")
    return PipelineConfig(
        coins=coins,
        macro=(base / data["macro"]) if data.get("macro") else None,
        feature_mode=features.get("mode", "auto"),
        pinned_groups=dict(features.get("pinned", {})),
        bins=int(features.get("bins", 3)),
        env=_dataclass_from(EnvConfig, _sub(doc, "env"), "env"),
        ppo=_dataclass_from(PpoConfig, agents.get("ppo", {}), "agents.ppo"),
        ddpg=_dataclass_from(DdpgConfig, agents.get("ddpg", {}), "agents.ddpg"),
        train_steps=int(agents.get("train_steps", 20_000)),
        seeds=tuple(run.get("seeds", DEFAULT_SEEDS)),
        strategies=tuple(run.get("strategies", DEFAULT_STRATEGIES)),
        out_dir=Path(run["out"]) if run.get("out") else Path("out"),
        raw=doc,
    )
