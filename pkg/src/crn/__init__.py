"""Causal-signal reinforcement-learning trading engine.

Pipeline: load and align daily market data, compute technical-indicator
feature groups, select a group per coin with a discrete Bayesian network,
predict next-day price direction with a two-slice temporal network, and
trade through a position-sizing environment with PPO and DDPG agents.
Backtests compare against Buy-and-Hold and an OHLCV-only baseline.
"""

__version__ = "0.1.0"
