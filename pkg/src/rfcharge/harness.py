"""Seeded experiment runs: heuristic baseline, DDPG training, greedy evaluation,
paired comparisons and parameter sweeps, with CSV/JSON output.
"""
import csv
import dataclasses
import hashlib
import json
import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .beamforming import SolverOptions
from .config import ExperimentConfig, parse_config
from .ddpg import DdpgAgent, DdpgConfig, load_checkpoint, run_episode, save_checkpoint, train
from .env import ChargingEnv, RewardParams, heuristic_action
from .errors import ConfigError
from .geometry import build_upa_geometry, channel_matrix, default_user_ring
from .harvesting import DemandModel, EhParams, sample_demand_trace, write_demand_trace

METRICS_HEADER = ["episode", "mean_reward", "mean_tx_power_W", "outage_prob"]
STREAMS = ("demands", "epicenters", "eval-demands", "eval-epicenters",
           "noise", "weight-init", "replay")


def substream(seed, name):
    """Generator for the named consumer; independent of every other name."""
    if name not in STREAMS:
        raise KeyError(name)
    ss = np.random.SeedSequence(int(seed), spawn_key=(zlib.crc32(name.encode()),))
    return np.random.Generator(np.random.PCG64(ss))


@dataclass
class RunMetrics:
    mean_reward: np.ndarray       # per episode
    mean_tx_power: np.ndarray     # W, per episode
    outage_prob: np.ndarray       # per episode

    @classmethod
    def from_episodes(cls, episodes):
        return cls(np.array([e.mean_reward for e in episodes], dtype=float),
                   np.array([e.mean_tx_power for e in episodes], dtype=float),
                   np.array([e.outage_prob for e in episodes], dtype=float))

    def __len__(self):
        return len(self.mean_reward)

    def summary(self):
        if not len(self):
            return {"episodes": 0, "mean_reward": None, "mean_tx_power_W": None,
                    "outage_prob": None}
        return {"episodes": len(self),
                "mean_reward": float(self.mean_reward.mean()),
                "mean_tx_power_W": float(self.mean_tx_power.mean()),
                "outage_prob": float(self.outage_prob.mean())}


def write_metrics_csv(path, metrics):
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(METRICS_HEADER)
        for i in range(len(metrics)):
            w.writerow([i, repr(float(metrics.mean_reward[i])),
                        repr(float(metrics.mean_tx_power[i])),
                        repr(float(metrics.outage_prob[i]))])


def read_metrics_csv(path):
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader)
        if header != METRICS_HEADER:
            raise ValueError(f"unexpected metrics header {header}")
        rows = [[float(x) for x in r[1:]] for r in reader]
    arr = np.array(rows, dtype=float).reshape(-1, 3)
    return RunMetrics(arr[:, 0], arr[:, 1], arr[:, 2])


def episode_trace_header(K):
    cols = ["slot"]
    cols += [f"b{k}_mW" for k in range(K)]
    cols += [f"d{k}_mW" for k in range(K)]
    cols += [f"p_rf{k}_mW" for k in range(K)]
    cols += [f"p_dc{k}_mW" for k in range(K)]
    cols += [f"alpha{k}" for k in range(K + 1)]
    return cols + ["p_tx_W", "n_unsatisfied", "deficit", "reward"]


def write_episode_trace(path, states, outcomes):
    """Per-slot CSV; ``states[i]`` is the buffer at the start of slot i."""
    K = len(states[0]) if len(states) else 0
    mw = lambda v: [repr(float(x) * 1e3) for x in v]
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(episode_trace_header(K))
        for i, (s, o) in enumerate(zip(states, outcomes)):
            w.writerow([i, *mw(s), *mw(o.demands), *mw(o.p_rf), *mw(o.p_dc),
                        *[repr(float(a)) for a in o.action],
                        repr(float(o.p_tx)), o.n_unsatisfied, repr(float(o.deficit)),
                        repr(float(o.reward))])


# ---- builders -------------------------------------------------------------

def build_channel(cfg):
    a = cfg.array
    geom = build_upa_geometry(a.rows, a.cols, a.spacing, a.center, a.wavelength, a.g)
    users = default_user_ring(cfg.K, cfg.layout.center, cfg.layout.radius, cfg.layout.height)
    return geom, users, channel_matrix(geom, users)


def eh_params(cfg):
    e = cfg.eh
    arr = lambda v: np.array(v, dtype=float) if isinstance(v, list) else float(v)
    return EhParams(arr(e.p_sat), arr(e.phi), arr(e.omega), e.p_idle, e.b_max)


def demand_model(cfg):
    d = cfg.demand
    return DemandModel(d.d_b, d.theta, d.d_max, tuple(d.area))


def solver_options(cfg):
    return SolverOptions(**dataclasses.asdict(cfg.solver))


def ddpg_config(cfg):
    return DdpgConfig(gamma=cfg.reward.gamma, **dataclasses.asdict(cfg.ddpg))


def build_env(cfg, channel=None):
    if channel is None:
        channel = build_channel(cfg)[2]
    rp = RewardParams(cfg.reward.rho1, cfg.reward.rho2, cfg.reward.gamma, cfg.p_max)
    return ChargingEnv(channel, eh_params(cfg), rp, solver_options(cfg),
                       b_init=cfg.eh.b_init, harvest_first=cfg.eh.harvest_first)


def demand_trace(cfg, n_episodes, purpose="train", users=None):
    """(n_episodes, T, K) demands from the seed's ``purpose`` substreams."""
    if users is None:
        users = default_user_ring(cfg.K, cfg.layout.center, cfg.layout.radius, cfg.layout.height)
    prefix = "" if purpose == "train" else "eval-"
    rng = substream(cfg.seed, prefix + "demands")
    rng_epi = substream(cfg.seed, prefix + "epicenters")
    flat = sample_demand_trace(rng, users, demand_model(cfg), n_episodes * cfg.T, rng_epi)
    return flat.reshape(n_episodes, cfg.T, cfg.K)


def trace_hash(trace):
    return hashlib.sha256(np.ascontiguousarray(trace, dtype=np.float64).tobytes()).hexdigest()


def new_agent(cfg):
    return DdpgAgent(cfg.K, cfg.K + 1, ddpg_config(cfg), substream(cfg.seed, "weight-init"),
                     state_scale=cfg.eh.b_max)


def _out_dir(out):
    if out is None:
        return None
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    return out


# ---- runs -----------------------------------------------------------------

def rollout(cfg, policy, trace, channel=None, trace_path=None):
    """Run ``policy`` over every episode of ``trace``; buffers carry across episodes."""
    env = build_env(cfg, channel)
    env.reset()
    episodes, states, outcomes = [], [], []
    record = (lambda i, s, o: (states.append(s), outcomes.append(o))) if trace_path else None
    for demands in trace:
        m, _ = run_episode(env, policy, demands, record)
        episodes.append(m)
    if trace_path is not None:
        write_episode_trace(trace_path, states, outcomes)
    return RunMetrics.from_episodes(episodes)


def run_heuristic(cfg, trace=None, out=None):
    """Threshold baseline over the configured episodes; persists its demand trace."""
    out = _out_dir(out)
    _, users, H = build_channel(cfg)
    if trace is None:
        trace = demand_trace(cfg, cfg.n_episodes, "train", users)
    metrics = rollout(cfg, heuristic_action, trace, H,
                      out / "episode_trace.csv" if out else None)
    if out is not None:
        write_metrics_csv(out / "metrics.csv", metrics)
        write_demand_trace(out / "demand_trace.csv", trace.reshape(-1, cfg.K))
    return metrics


def run_train(cfg, out=None, trace=None):
    """Train a fresh agent; returns (agent, RunMetrics) and writes checkpoint + metrics."""
    out = _out_dir(out)
    _, users, H = build_channel(cfg)
    if trace is None:
        trace = demand_trace(cfg, cfg.n_episodes, "train", users)
    env = build_env(cfg, H)
    env.reset()
    agent = new_agent(cfg)
    agent, episodes = train(env, agent, trace, substream(cfg.seed, "noise"),
                            substream(cfg.seed, "replay"))
    metrics = RunMetrics.from_episodes(episodes)
    if out is not None:
        save_checkpoint(agent, out / "checkpoint.json")
        write_metrics_csv(out / "metrics.csv", metrics)
    return agent, metrics


def check_compatible(cfg, agent):
    if agent.state_dim != cfg.K or agent.action_dim != cfg.K + 1:
        raise ConfigError(f"checkpoint expects K={agent.state_dim}, config has K={cfg.K}", "K")


def greedy_policy(agent):
    return lambda s: agent.act(s)


def run_eval(cfg, agent, trace=None, out=None):
    """Noise-free rollout of ``agent`` (or a checkpoint path) on a demand trace."""
    out = _out_dir(out)
    if isinstance(agent, (str, Path)):
        agent = load_checkpoint(agent)
    check_compatible(cfg, agent)
    _, users, H = build_channel(cfg)
    if trace is None:
        trace = demand_trace(cfg, cfg.n_eval_episodes, "eval", users)
    metrics = rollout(cfg, greedy_policy(agent), trace, H,
                      out / "episode_trace.csv" if out else None)
    if out is not None:
        write_metrics_csv(out / "metrics.csv", metrics)
    return metrics


def _with(cfg, **changes):
    return dataclasses.replace(cfg, **changes)


def compare(cfg, seeds, methods=("heuristic", "ddpg"), out=None):
    """Paired comparison on one evaluation trace per seed.

    Deltas are ``methods[1] - methods[0]``. A "ddpg" method is trained on
    the seed's training trace and then evaluated greedily.
    """
    seeds = list(seeds)
    if not seeds:
        raise ConfigError("need at least one seed", "seeds")
    if len(methods) != 2 or any(m not in ("heuristic", "ddpg") for m in methods):
        raise ConfigError("methods must be two of 'heuristic', 'ddpg'", "methods")
    out = _out_dir(out)
    rows = []
    for seed in seeds:
        c = _with(cfg, seed=int(seed))
        _, users, H = build_channel(c)
        trace = demand_trace(c, c.n_eval_episodes, "eval", users)
        agent = None
        results = {}
        for name in methods:
            if name == "heuristic":
                m = rollout(c, heuristic_action, trace, H)
            else:
                if agent is None:
                    agent, _ = run_train(c, out / f"seed{seed}" if out else None)
                m = rollout(c, greedy_policy(agent), trace, H)
            results[name] = m.summary()
        a, b = (results[m] for m in methods)
        rows.append({
            "seed": int(seed),
            "trace_sha256": trace_hash(trace),
            methods[0]: a,
            methods[1]: b,
            "delta_tx_power_W": b["mean_tx_power_W"] - a["mean_tx_power_W"],
            "delta_outage_prob": b["outage_prob"] - a["outage_prob"],
            "delta_reward": b["mean_reward"] - a["mean_reward"],
        })
    keys = ("delta_tx_power_W", "delta_outage_prob", "delta_reward")
    report = {
        "methods": list(methods),
        "K": cfg.K,
        "T": cfg.T,
        "eval_episodes": cfg.n_eval_episodes,
        "seeds": rows,
        "aggregate": {k: float(np.mean([r[k] for r in rows])) for k in keys},
    }
    report["aggregate"]["wins_tx_power"] = int(sum(r["delta_tx_power_W"] < 0 for r in rows))
    if out is not None:
        (out / "compare.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    return report


SWEEP_HEADER = ["key", "value", "seed", "mean_reward", "mean_tx_power_W", "outage_prob"]


def sweep(cfg, key, values, seeds=None, out=None):
    """Rerun ``cfg.mode`` for each override ``key=value`` and seed; returns result rows."""
    out = _out_dir(out)
    seeds = [cfg.seed] if seeds is None else list(seeds)
    base = cfg.to_dict()
    rows = []
    for v in values:
        for seed in seeds:
            c = parse_config(base, [f"{key}={json.dumps(v)}", f"seed={int(seed)}"])
            if c.mode == "heuristic":
                m = run_heuristic(c)
            else:
                agent, _ = run_train(c)
                m = run_eval(c, agent)
            s = m.summary()
            rows.append({"key": key, "value": v, "seed": int(seed), **{
                k: s[k] for k in ("mean_reward", "mean_tx_power_W", "outage_prob")}})
    if out is not None:
        with open(out / "sweep.csv", "w", newline="") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(SWEEP_HEADER)
            for r in rows:
                w.writerow([r["key"], json.dumps(r["value"]), r["seed"],
                            *[repr(float(r[k])) for k in SWEEP_HEADER[3:]]])
    return rows


def default_config():
    return ExperimentConfig()
