"""Actor-critic bundle, replay memory and exploration noise."""
from dataclasses import dataclass

import numpy as np

from ..errors import InvalidParameterError
from .mlp import Adam, Mlp


@dataclass
class DdpgConfig:
    actor_hidden: tuple = (128, 128)
    critic_hidden: tuple = (64, 64)
    tau: float = 0.001
    batch_size: int = 64
    memory_size: int = 1_000_000
    lr_actor: float = 1e-4
    lr_critic: float = 2e-4
    gamma: float = 0.99
    ou_theta: float = 0.15
    ou_sigma: float = 0.2
    noise_decay: float = 1.0
    invert_gradients: bool = True

    def __post_init__(self):
        if not 0 < self.tau <= 1:
            raise InvalidParameterError("tau must lie in (0, 1]")
        if self.batch_size < 1 or self.memory_size < self.batch_size:
            raise InvalidParameterError("need 1 <= batch_size <= memory_size")


class ReplayMemory:
    """Ring buffer of (s, a, s', r) transitions."""

    def __init__(self, capacity, state_dim, action_dim):
        self.capacity = int(capacity)
        self.s = np.zeros((self.capacity, state_dim))
        self.a = np.zeros((self.capacity, action_dim))
        self.s2 = np.zeros((self.capacity, state_dim))
        self.r = np.zeros(self.capacity)
        self.size = 0
        self.pos = 0

    def __len__(self):
        return self.size

    def push(self, s, a, s2, r):
        i = self.pos
        self.s[i], self.a[i], self.s2[i], self.r[i] = s, a, s2, r
        self.pos = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample_indices(self, rng, n):
        if n > self.size:
            raise InvalidParameterError(f"cannot draw {n} from {self.size} stored transitions")
        return rng.choice(self.size, size=n, replace=False)

    def sample(self, rng, n):
        idx = self.sample_indices(rng, n)
        return self.s[idx], self.a[idx], self.s2[idx], self.r[idx]


class OuNoise:
    """Ornstein-Uhlenbeck process with unit time step and zero long-run mean."""

    def __init__(self, dim, theta=0.15, sigma=0.2):
        self.theta = theta
        self.sigma = sigma
        self.x = np.zeros(dim)

    def reset(self):
        self.x = np.zeros_like(self.x)

    def step(self, rng):
        self.x = self.x + self.theta * (0.0 - self.x) + self.sigma * rng.standard_normal(self.x.shape)
        return self.x.copy()


def invert_gradients(dq_da, a, low=0.0, high=1.0):
    """Shrink action gradients as the action nears the bound they push toward.

    Keeps the tanh output layer out of deep saturation at the box edges.
    """
    width = high - low
    return np.where(dq_da > 0, dq_da * (high - a) / width, dq_da * (a - low) / width)


def soft_update(live, target, tau):
    """target <- tau * live + (1 - tau) * target, in place on `target`'s arrays."""
    lp, tp = live.params(), target.params()
    if len(lp) != len(tp) or any(a.shape != b.shape for a, b in zip(lp, tp)):
        raise InvalidParameterError("live and target networks differ in shape")
    for p, q in zip(lp, tp):
        q *= 1.0 - tau
        q += tau * p
    return target


class DdpgAgent:
    """Actor/critic networks, their targets and optimizers.

    States are divided by ``state_scale`` before entering either network.
    The critic sees ``concat(state, action)`` at its first layer.
    """

    def __init__(self, state_dim, action_dim, config=None, rng=None, state_scale=1.0):
        self.config = DdpgConfig() if config is None else config
        rng = np.random.default_rng() if rng is None else rng
        c = self.config
        self.state_dim = state_dim
        self.action_dim = action_dim
        self.state_scale = float(state_scale)
        self.actor = Mlp.init([state_dim, *c.actor_hidden, action_dim], rng, "tanh01")
        self.critic = Mlp.init([state_dim + action_dim, *c.critic_hidden, 1], rng, "linear")
        self.actor_target = self.actor.copy()
        self.critic_target = self.critic.copy()
        self.actor_opt = Adam(self.actor.params(), c.lr_actor)
        self.critic_opt = Adam(self.critic.params(), c.lr_critic)
        self.noise = OuNoise(action_dim, c.ou_theta, c.ou_sigma)
        self.episode = 0

    def _norm(self, s):
        return np.atleast_2d(np.asarray(s, dtype=float)) / self.state_scale

    def act(self, state, rng=None, noise_scale=1.0):
        a = self.actor(self._norm(state))[0]
        if rng is not None and noise_scale > 0:
            a = a + noise_scale * self.noise.step(rng)
        return np.clip(a, 0.0, 1.0)

    def q_value(self, s, a, target=False):
        net = self.critic_target if target else self.critic
        return net(np.hstack([self._norm(s), np.atleast_2d(a)]))[:, 0]

    def critic_target_value(self, r, s2):
        """Bellman target r + gamma * Q*(s', mu*(s')); episodes are never terminal."""
        s2n = self._norm(s2)
        a2 = self.actor_target(s2n)
        q2 = self.critic_target(np.hstack([s2n, a2]))[:, 0]
        return np.asarray(r, dtype=float) + self.config.gamma * q2

    def critic_loss_and_grads(self, s, a, y):
        q, cache = self.critic.forward(np.hstack([self._norm(s), np.atleast_2d(a)]))
        diff = q[:, 0] - y
        loss = float(np.mean(diff ** 2))
        grads, _ = self.critic.backward(cache, (2.0 / diff.shape[0]) * diff[:, None])
        return loss, grads

    def critic_update(self, batch):
        """One step on the TD loss; returns the loss before the step."""
        s, a, s2, r = batch
        y = self.critic_target_value(r, s2)
        loss, grads = self.critic_loss_and_grads(s, a, y)
        self.critic_opt.step(self.critic.params(), grads)
        return loss

    def actor_objective_and_grads(self, s):
        """Mean Q(s, mu(s)) over the batch and its (ascent) gradient w.r.t. the actor.

        With ``invert_gradients`` the action gradient is rescaled before the
        actor backward pass, so it is no longer the plain gradient of the mean.
        """
        sn = self._norm(s)
        a, a_cache = self.actor.forward(sn)
        q, q_cache = self.critic.forward(np.hstack([sn, a]))
        B = sn.shape[0]
        _, g_in = self.critic.backward(q_cache, np.full((B, 1), 1.0 / B))
        dq_da = g_in[:, self.state_dim:]
        if self.config.invert_gradients:
            dq_da = invert_gradients(dq_da, a)
        grads, _ = self.actor.backward(a_cache, dq_da)
        return float(np.mean(q)), grads

    def actor_update(self, batch):
        """Ascend the sampled policy gradient; returns its norm."""
        s = batch[0]
        _, grads = self.actor_objective_and_grads(s)
        self.actor_opt.step(self.actor.params(), [-g for g in grads])
        return float(np.sqrt(sum(np.sum(g * g) for g in grads)))

    def soft_update_targets(self):
        soft_update(self.actor, self.actor_target, self.config.tau)
        soft_update(self.critic, self.critic_target, self.config.tau)
