"""Deep deterministic policy gradient with a replay buffer and soft targets.

Tanh-bounded deterministic actor, state-action critic, Gaussian exploration
noise, and elementwise Polyak averaging of the target networks.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..neural import Adam, Network, NeuralError, mlp_spec


@dataclass(frozen=True)
class DdpgConfig:
    replay_capacity: int = 100_000
    batch_size: int = 64
    tau: float = 0.005
    actor_lr: float = 1e-4
    critic_lr: float = 1e-3
    noise_sigma: float = 0.1
    discount: float = 0.99
    hidden_sizes: tuple[int, ...] = (64, 64)
    warmup_steps: int = 1000
    update_every: int = 1

    def __post_init__(self):
        if not (0 < self.tau <= 1):
            raise ValueError("tau must be in (0, 1]")
        if self.replay_capacity < self.batch_size:
            raise ValueError("replay capacity must cover one batch")


class ReplayBuffer:
    """Fixed-capacity ring buffer of transitions."""

    def __init__(self, capacity: int, obs_size: int, act_size: int):
        self.capacity = capacity
        self.obs = np.zeros((capacity, obs_size))
        self.actions = np.zeros((capacity, act_size))
        self.rewards = np.zeros(capacity)
        self.next_obs = np.zeros((capacity, obs_size))
        self.dones = np.zeros(capacity)
        self.count = 0

    def __len__(self):
        return min(self.count, self.capacity)

    def add(self, obs, action, reward, next_obs, done) -> None:
        i = self.count % self.capacity
        self.obs[i] = obs
        self.actions[i] = action
        self.rewards[i] = reward
        self.next_obs[i] = next_obs
        self.dones[i] = float(done)
        self.count += 1

    def sample(self, batch_size: int, rng: np.random.Generator):
        """Uniform sample without replacement within the batch."""
        idx = rng.choice(len(self), size=batch_size, replace=False)
        return (
            self.obs[idx],
            self.actions[idx],
            self.rewards[idx],
            self.next_obs[idx],
            self.dones[idx],
        )


def ddpg_act(actor: Network, obs: np.ndarray, sigma: float, rng: np.random.Generator) -> np.ndarray:
    """Actor output plus Gaussian noise, clipped into [-1, 1]."""
    action = actor.forward(obs, cache=False)
    if sigma > 0:
        action = action + sigma * rng.standard_normal(action.shape)
    return np.clip(action, -1.0, 1.0)


def soft_update(target: Network, online: Network, tau: float) -> None:
    for tp, op in zip(target.parameters, online.parameters):
        tp[...] = tau * op + (1.0 - tau) * tp


def ddpg_update(
    actor: Network,
    critic: Network,
    target_actor: Network,
    target_critic: Network,
    actor_opt: Adam,
    critic_opt: Adam,
    batch,
    cfg: DdpgConfig,
) -> dict:
    """One critic regression + actor ascent + target soft update."""
    obs, actions, rewards, next_obs, dones = batch
    n = len(obs)

    next_actions = target_actor.forward(next_obs, cache=False)
    next_q = target_critic.forward(np.hstack([next_obs, next_actions]), cache=False)[:, 0]
    targets = rewards + cfg.discount * (1.0 - dones) * next_q

    q = critic.forward(np.hstack([obs, actions]))[:, 0]
    err = q - targets
    critic_loss = float(np.mean(err * err))
    if not np.isfinite(critic_loss):
        raise NeuralError("non-finite critic loss")
    cgrads, _ = critic.backward((2.0 * err / n)[:, None])
    critic_opt.step(critic.parameters, cgrads)

    # actor ascends Q(s, mu(s)): chain dQ/da through the actor
    mu = actor.forward(obs)
    q_mu = critic.forward(np.hstack([obs, mu]))
    if not np.isfinite(q_mu).all():
        raise NeuralError("non-finite actor objective")
    _, input_grad = critic.backward(-np.ones_like(q_mu) / n)
    da = input_grad[:, obs.shape[1] :]
    agrads, _ = actor.backward(da)
    actor_opt.step(actor.parameters, agrads)

    soft_update(target_actor, actor, cfg.tau)
    soft_update(target_critic, critic, cfg.tau)
    return {"critic_loss": critic_loss, "mean_q": float(q.mean())}


@dataclass
class DdpgAgent:
    actor: Network
    critic: Network
    cfg: DdpgConfig
    training_log: list = field(default_factory=list)

    def act(self, obs: np.ndarray) -> tuple[float, float]:
        """Deterministic evaluation action (no exploration noise)."""
        action = np.clip(self.actor.forward(obs, cache=False), -1.0, 1.0)
        return float(action[0]), float(action[1])


def train_ddpg(env_factory, total_steps: int, seed: int, cfg: DdpgConfig = DdpgConfig()) -> DdpgAgent:
    if total_steps < cfg.batch_size:
        raise ValueError("total steps must cover at least one batch")
    rng = np.random.default_rng(seed)
    env = env_factory()
    obs_vec = env.observation_vector(env.reset())
    obs_size = env.observation_size
    act_size = 2

    actor = Network(mlp_spec(obs_size, act_size, cfg.hidden_sizes, hidden_act="tanh", out_act="tanh", seed=seed))
    critic = Network(mlp_spec(obs_size + act_size, 1, cfg.hidden_sizes, hidden_act="tanh", seed=seed + 1))
    target_actor = actor.copy()
    target_critic = critic.copy()
    actor_opt = Adam(cfg.actor_lr)
    critic_opt = Adam(cfg.critic_lr)
    buffer = ReplayBuffer(cfg.replay_capacity, obs_size, act_size)
    agent = DdpgAgent(actor=actor, critic=critic, cfg=cfg)

    episode_rewards: list[float] = []
    episode_total = 0.0
    for step in range(1, total_steps + 1):
        if step <= cfg.warmup_steps:
            action = rng.uniform(-1.0, 1.0, size=act_size)
        else:
            action = ddpg_act(actor, obs_vec, cfg.noise_sigma, rng)
        result = env.step(action[0], action[1])
        next_vec = env.observation_vector(env.reset() if result.done else result.observation)
        buffer.add(obs_vec, action, result.reward, next_vec, result.done)
        obs_vec = next_vec
        episode_total += result.reward
        if result.done:
            episode_rewards.append(episode_total)
            episode_total = 0.0

        if len(buffer) >= cfg.batch_size and step % cfg.update_every == 0:
            diag = ddpg_update(
                actor, critic, target_actor, target_critic, actor_opt, critic_opt,
                buffer.sample(cfg.batch_size, rng), cfg,
            )
            if step % 1000 == 0:
                mean_ep = float(np.mean(episode_rewards[-10:])) if episode_rewards else 0.0
                agent.training_log.append({"step": step, "mean_reward": mean_ep, **diag})
    return agent
