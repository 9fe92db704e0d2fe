"""Episode rollouts and the DDPG training loop.

The buffer state carries over between episodes; exploration noise restarts
at the beginning of each one.
"""
from dataclasses import dataclass

import numpy as np

from ..errors import RfChargeError
from .agent import ReplayMemory


@dataclass(frozen=True)
class EpisodeMetrics:
    mean_reward: float
    mean_tx_power: float   # W
    outage_prob: float     # sum_i N_i / (K T)


def summarize(outcomes, K):
    rewards = [o.reward for o in outcomes]
    power = [o.p_tx for o in outcomes]
    unsat = sum(o.n_unsatisfied for o in outcomes)
    return EpisodeMetrics(float(np.mean(rewards)), float(np.mean(power)),
                          unsat / (K * len(outcomes)))


def run_episode(env, policy, demands, on_step=None):
    """Drive ``env`` for len(demands) slots with ``policy(state) -> action``."""
    outcomes = []
    for i, d in enumerate(demands):
        s = env.state.copy()
        out = env.step(policy(s), d)
        outcomes.append(out)
        if on_step is not None:
            on_step(i, s, out)
    return summarize(outcomes, env.K), outcomes


def train(env, agent, demand_trace, rng_noise, rng_replay, memory=None, on_step=None):
    """Train ``agent`` on ``env`` for ``len(demand_trace)`` episodes.

    ``demand_trace`` has shape (episodes, T, K). Updates start once the
    memory holds a full minibatch. Returns (agent, [EpisodeMetrics]).
    """
    c = agent.config
    if memory is None:
        memory = ReplayMemory(c.memory_size, agent.state_dim, agent.action_dim)
    if env.state is None:
        env.reset()
    metrics = []
    for ep, demands in enumerate(demand_trace):
        agent.noise.reset()
        scale = c.noise_decay ** agent.episode
        outcomes = []
        for i, d in enumerate(demands):
            s = env.state.copy()
            a = agent.act(s, rng_noise, scale)
            try:
                out = env.step(a, d)
            except RfChargeError as exc:
                raise RfChargeError(f"episode {ep}: {exc}") from exc
            memory.push(s, out.action, out.state, out.reward)
            if len(memory) >= c.batch_size:
                batch = memory.sample(rng_replay, c.batch_size)
                agent.critic_update(batch)
                agent.actor_update(batch)
                agent.soft_update_targets()
            outcomes.append(out)
            if on_step is not None:
                on_step(i, s, out)
        agent.episode += 1
        metrics.append(summarize(outcomes, env.K))
    return agent, metrics
