"""Versioned JSON checkpoints of a :class:`DdpgAgent`.

Floats are written with ``repr`` precision, so save/load round-trips bitwise.
"""
import dataclasses
import json

import numpy as np

from ..errors import InvalidParameterError
from .agent import DdpgAgent, DdpgConfig, OuNoise
from .mlp import Adam, Mlp

FORMAT = "rfcharge-ddpg-checkpoint"
VERSION = 1


def _net(net):
    return {
        "output": net.output,
        "sizes": net.sizes,
        "weights": [W.tolist() for W in net.weights],
        "biases": [b.tolist() for b in net.biases],
    }


def _load_net(d):
    return Mlp([np.array(W, dtype=float).reshape(a, b)
                for W, a, b in zip(d["weights"], d["sizes"][:-1], d["sizes"][1:])],
               [np.array(b, dtype=float) for b in d["biases"]], d["output"])


def _opt(opt):
    return {"lr": opt.lr, "t": opt.t,
            "m": [m.tolist() for m in opt.m], "v": [v.tolist() for v in opt.v]}


def _load_opt(d, params):
    opt = Adam(params, d["lr"])
    opt.t = d["t"]
    opt.m = [np.array(m, dtype=float).reshape(p.shape) for m, p in zip(d["m"], params)]
    opt.v = [np.array(v, dtype=float).reshape(p.shape) for v, p in zip(d["v"], params)]
    return opt


def agent_to_dict(agent):
    cfg = dataclasses.asdict(agent.config)
    return {
        "format": FORMAT,
        "version": VERSION,
        "state_dim": agent.state_dim,
        "action_dim": agent.action_dim,
        "state_scale": agent.state_scale,
        "config": {k: list(v) if isinstance(v, tuple) else v for k, v in cfg.items()},
        "actor": _net(agent.actor),
        "critic": _net(agent.critic),
        "actor_target": _net(agent.actor_target),
        "critic_target": _net(agent.critic_target),
        "actor_opt": _opt(agent.actor_opt),
        "critic_opt": _opt(agent.critic_opt),
        "noise": {"theta": agent.noise.theta, "sigma": agent.noise.sigma,
                  "x": agent.noise.x.tolist()},
        "episode": agent.episode,
    }


def agent_from_dict(d):
    if d.get("format") != FORMAT:
        raise InvalidParameterError("not a DDPG checkpoint")
    if d.get("version") != VERSION:
        raise InvalidParameterError(f"unsupported checkpoint version {d.get('version')}")
    cfg = dict(d["config"])
    for k in ("actor_hidden", "critic_hidden"):
        cfg[k] = tuple(cfg[k])
    agent = DdpgAgent.__new__(DdpgAgent)
    agent.config = DdpgConfig(**cfg)
    agent.state_dim = d["state_dim"]
    agent.action_dim = d["action_dim"]
    agent.state_scale = d["state_scale"]
    agent.actor = _load_net(d["actor"])
    agent.critic = _load_net(d["critic"])
    agent.actor_target = _load_net(d["actor_target"])
    agent.critic_target = _load_net(d["critic_target"])
    agent.actor_opt = _load_opt(d["actor_opt"], agent.actor.params())
    agent.critic_opt = _load_opt(d["critic_opt"], agent.critic.params())
    agent.noise = OuNoise(agent.action_dim, d["noise"]["theta"], d["noise"]["sigma"])
    agent.noise.x = np.array(d["noise"]["x"], dtype=float)
    agent.episode = d["episode"]
    return agent


def save_checkpoint(agent, path):
    with open(path, "w") as f:
        json.dump(agent_to_dict(agent), f)


def load_checkpoint(path):
    with open(path) as f:
        return agent_from_dict(json.load(f))
