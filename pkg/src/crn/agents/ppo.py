"""Proximal policy optimization with a clipped surrogate objective.

Gaussian policy with a state-independent log-std, generalized advantage
estimation, and minibatch Adam updates. Entropy bonus is zero; diagnostics
report the mean probability ratio and the clip fraction of every update.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..neural import Adam, Network, NeuralError, mlp_spec

LOG_2PI = float(np.log(2.0 * np.pi))


@dataclass(frozen=True)
class PpoConfig:
    clip_ratio: float = 0.2
    discount: float = 0.99
    gae_lambda: float = 0.95
    epochs: int = 10
    rollout_length: int = 2048
    minibatch_size: int = 64
    learning_rate: float = 3e-4
    hidden_sizes: tuple[int, ...] = (64, 64)
    initial_log_std: float = -0.5

    def __post_init__(self):
        if not (0 < self.clip_ratio < 1):
            raise ValueError("clip ratio must be in (0, 1)")
        if not (0 <= self.discount <= 1):
            raise ValueError("discount must be in [0, 1]")


class GaussianPolicy:
    """Diagonal Gaussian over the two action channels."""

    def __init__(self, obs_size: int, act_size: int, cfg: PpoConfig, seed: int):
        self.net = Network(mlp_spec(obs_size, act_size, cfg.hidden_sizes, seed=seed))
        self.log_std = np.full(act_size, cfg.initial_log_std)

    def mean(self, obs: np.ndarray) -> np.ndarray:
        return self.net.forward(obs, cache=False)

    def sample(self, obs: np.ndarray, rng: np.random.Generator) -> tuple[np.ndarray, float]:
        mu = self.mean(obs)
        std = np.exp(self.log_std)
        action = mu + std * rng.standard_normal(mu.shape)
        return action, self.log_prob_single(action, mu)

    def log_prob_single(self, action: np.ndarray, mu: np.ndarray) -> float:
        std = np.exp(self.log_std)
        z = (action - mu) / std
        return float(np.sum(-0.5 * z * z - self.log_std - 0.5 * LOG_2PI))

    def log_prob_batch(self, actions: np.ndarray, mus: np.ndarray) -> np.ndarray:
        std = np.exp(self.log_std)
        z = (actions - mus) / std
        return np.sum(-0.5 * z * z - self.log_std - 0.5 * LOG_2PI, axis=1)


@dataclass
class Trajectory:
    observations: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    dones: np.ndarray
    log_probs: np.ndarray
    values: np.ndarray
    last_value: float
    last_done: bool


def ppo_collect(env, policy: GaussianPolicy, value_net: Network, length: int, cfg: PpoConfig, rng) -> Trajectory:
    """On-policy rollout of ``length`` transitions, resetting on episode end."""
    obs_list, act_list, rew_list, done_list, logp_list, val_list = [], [], [], [], [], []
    obs = env.observation_vector(env.reset() if env.done else env.observe())
    for _ in range(length):
        action, logp = policy.sample(obs, rng)
        value = float(value_net.forward(obs, cache=False)[0])
        result = env.step(action[0], action[1])
        obs_list.append(obs)
        act_list.append(action)
        rew_list.append(result.reward)
        done_list.append(result.done)
        logp_list.append(logp)
        val_list.append(value)
        if result.done:
            obs = env.observation_vector(env.reset())
        else:
            obs = env.observation_vector(result.observation)
    last_done = done_list[-1]
    last_value = 0.0 if last_done else float(value_net.forward(obs, cache=False)[0])
    return Trajectory(
        observations=np.array(obs_list),
        actions=np.array(act_list),
        rewards=np.array(rew_list),
        dones=np.array(done_list, dtype=bool),
        log_probs=np.array(logp_list),
        values=np.array(val_list),
        last_value=last_value,
        last_done=last_done,
    )


def gae_advantages(traj: Trajectory, cfg: PpoConfig) -> tuple[np.ndarray, np.ndarray]:
    """Generalized advantage estimates and value targets (returns)."""
    n = len(traj.rewards)
    advantages = np.zeros(n)
    gae = 0.0
    next_value = traj.last_value
    for t in reversed(range(n)):
        nonterminal = 0.0 if traj.dones[t] else 1.0
        delta = traj.rewards[t] + cfg.discount * next_value * nonterminal - traj.values[t]
        gae = delta + cfg.discount * cfg.gae_lambda * nonterminal * gae
        advantages[t] = gae
        next_value = traj.values[t]
    returns = advantages + traj.values
    return advantages, returns


def ppo_update(
    policy: GaussianPolicy,
    value_net: Network,
    policy_opt: Adam,
    log_std_opt: Adam,
    value_opt: Adam,
    traj: Trajectory,
    cfg: PpoConfig,
    rng,
) -> dict:
    """Clipped-surrogate policy update plus MSE value regression."""
    advantages, returns = gae_advantages(traj, cfg)
    adv_std = advantages.std()
    norm_adv = (advantages - advantages.mean()) / (adv_std if adv_std > 0 else 1.0)

    n = len(traj.rewards)
    ratio_sum, clip_count, sample_count = 0.0, 0, 0
    for _ in range(cfg.epochs):
        order = rng.permutation(n)
        for start in range(0, n, cfg.minibatch_size):
            idx = order[start : start + cfg.minibatch_size]
            obs = traj.observations[idx]
            actions = traj.actions[idx]
            adv = norm_adv[idx]
            old_logp = traj.log_probs[idx]

            mus = policy.net.forward(obs)
            logp = policy.log_prob_batch(actions, mus)
            ratio = np.exp(logp - old_logp)
            clipped_out = (adv > 0) & (ratio > 1 + cfg.clip_ratio) | (adv < 0) & (ratio < 1 - cfg.clip_ratio)
            ratio_sum += float(ratio.sum())
            clip_count += int(clipped_out.sum())
            sample_count += len(idx)

            # d(-surrogate)/d logp, zero where the clipped branch is active
            dlogp = np.where(clipped_out, 0.0, -adv * ratio) / len(idx)
            if not np.isfinite(dlogp).all():
                raise NeuralError("non-finite policy loss gradient")
            std = np.exp(policy.log_std)
            z = (actions - mus) / std
            dmu = dlogp[:, None] * (z / std)
            dlog_std = (dlogp[:, None] * (z * z - 1.0)).sum(axis=0)
            grads, _ = policy.net.backward(dmu)
            policy_opt.step(policy.net.parameters, grads)
            log_std_opt.step([policy.log_std], [dlog_std])

            preds = value_net.forward(obs)
            err = preds[:, 0] - returns[idx]
            vgrads, _ = value_net.backward((2.0 * err / len(idx))[:, None])
            value_opt.step(value_net.parameters, vgrads)

    return {
        "mean_ratio": ratio_sum / max(sample_count, 1),
        "clip_fraction": clip_count / max(sample_count, 1),
        "mean_reward": float(traj.rewards.mean()),
    }


@dataclass
class PpoAgent:
    policy: GaussianPolicy
    value_net: Network
    cfg: PpoConfig
    training_log: list = field(default_factory=list)

    def act(self, obs: np.ndarray) -> tuple[float, float]:
        """Deterministic evaluation action (the policy mean)."""
        mu = self.policy.mean(obs)
        return float(mu[0]), float(mu[1])


def train_ppo(env_factory, total_steps: int, seed: int, cfg: PpoConfig = PpoConfig()) -> PpoAgent:
    if total_steps < cfg.rollout_length:
        raise ValueError("total steps must cover at least one rollout")
    rng = np.random.default_rng(seed)
    env = env_factory()
    env.reset()
    obs_size = env.observation_size
    policy = GaussianPolicy(obs_size, 2, cfg, seed=seed)
    value_net = Network(mlp_spec(obs_size, 1, cfg.hidden_sizes, seed=seed + 1))
    policy_opt = Adam(cfg.learning_rate)
    log_std_opt = Adam(cfg.learning_rate)
    value_opt = Adam(cfg.learning_rate)

    agent = PpoAgent(policy=policy, value_net=value_net, cfg=cfg)
    steps = 0
    while steps + cfg.rollout_length <= total_steps:
        traj = ppo_collect(env, policy, value_net, cfg.rollout_length, cfg, rng)
        diag = ppo_update(policy, value_net, policy_opt, log_std_opt, value_opt, traj, cfg, rng)
        steps += cfg.rollout_length
        agent.training_log.append({"step": steps, **diag})
    return agent
