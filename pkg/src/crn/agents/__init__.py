"""Reinforcement-learning agents over the trading environment."""

from ..env import decode_action
from .ddpg import DdpgAgent, DdpgConfig, ReplayBuffer, ddpg_act, ddpg_update, soft_update, train_ddpg
from .ppo import GaussianPolicy, PpoAgent, PpoConfig, gae_advantages, ppo_collect, ppo_update, train_ppo
from .train import ALGORITHMS, train_agent, write_training_log

__all__ = [
    "ALGORITHMS",
    "DdpgAgent",
    "DdpgConfig",
    "GaussianPolicy",
    "PpoAgent",
    "PpoConfig",
    "ReplayBuffer",
    "ddpg_act",
    "ddpg_update",
    "decode_action",
    "gae_advantages",
    "ppo_collect",
    "ppo_update",
    "soft_update",
    "train_agent",
    "train_ddpg",
    "train_ppo",
    "write_training_log",
]
