"""Unified training entry point for the two agent algorithms."""

from __future__ import annotations

import csv

from .ddpg import DdpgConfig, train_ddpg
from .ppo import PpoConfig, train_ppo

ALGORITHMS = ("PPO", "DDPG")


def train_agent(
    algorithm: str,
    env_factory,
    total_steps: int,
    seed: int,
    ppo_cfg: PpoConfig | None = None,
    ddpg_cfg: DdpgConfig | None = None,
):
    """Train one agent; fully determined by (config, seed).

    Returns an agent exposing ``act(obs) -> (a1, a2)`` for deterministic
    evaluation plus a ``training_log`` list of per-update diagnostics.
    """
    algorithm = algorithm.upper()
    if algorithm == "PPO":
        return train_ppo(env_factory, total_steps, seed, ppo_cfg or PpoConfig())
    if algorithm == "DDPG":
        return train_ddpg(env_factory, total_steps, seed, ddpg_cfg or DdpgConfig())
    raise ValueError(f"unknown algorithm {algorithm!r}; expected one of {ALGORITHMS}")


def write_training_log(agent, path) -> None:
    """Persist per-update diagnostics as CSV."""
    rows = agent.training_log
    if not rows:
        fields = ["step"]
    else:
        fields = list(rows[0])
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
