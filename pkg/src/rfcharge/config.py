"""Experiment configuration: nested dataclasses, JSON loading and dotted overrides."""
import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError

MODES = ("heuristic", "ddpg")
BACKENDS = (None, "numba", "numpy")
PER_DEVICE = ("p_sat", "phi", "omega")


@dataclass
class ArrayConfig:
    rows: int = 8
    cols: int = 8
    spacing: float = 0.0625      # m, half a wavelength
    wavelength: float = 0.125    # m
    g: float = 2.0               # boresight gain, G_t = 2(g + 1)
    center: tuple = (2.5, 2.5, 5.0)


@dataclass
class LayoutConfig:
    center: tuple = (2.5, 2.5)
    radius: float = 2.0
    height: float = 2.0


@dataclass
class EhConfig:
    # scalars or per-device lists of length K
    p_sat: object = 0.02
    phi: object = 6400.0
    omega: object = 0.003
    p_idle: float = 1e-5
    b_max: float = 0.2
    b_init: float = 0.05
    harvest_first: bool = True


@dataclass
class DemandConfig:
    d_b: float = 0.01
    theta: float = 0.5
    d_max: float = 0.05
    area: tuple = (5.0, 5.0)


@dataclass
class RewardConfig:
    rho1: float = 1.0
    rho2: float = 1.0
    gamma: float = 0.99


@dataclass
class SolverConfig:
    kappa: float = 0.05
    inner_tol: float = 1e-6
    sigma: float = 0.5
    epsilon: float = 0.5
    max_outer: int = 20
    max_inner: int = 500
    residual_tol: float = 1e-4
    max_line_search: int = 50
    n_symbols: object = None
    backend: object = None


@dataclass
class DdpgSection:
    actor_hidden: tuple = (128, 128)
    critic_hidden: tuple = (64, 64)
    tau: float = 0.001
    batch_size: int = 64
    memory_size: int = 1_000_000
    lr_actor: float = 1e-4
    lr_critic: float = 2e-4
    ou_theta: float = 0.15
    ou_sigma: float = 0.2
    noise_decay: float = 1.0
    invert_gradients: bool = True


@dataclass
class ExperimentConfig:
    K: int = 4
    T: int = 100
    n_episodes: int = 300
    n_eval_episodes: int = 20
    p_max: float = 10.0
    seed: int = 0
    mode: str = "ddpg"
    array: ArrayConfig = field(default_factory=ArrayConfig)
    layout: LayoutConfig = field(default_factory=LayoutConfig)
    eh: EhConfig = field(default_factory=EhConfig)
    demand: DemandConfig = field(default_factory=DemandConfig)
    reward: RewardConfig = field(default_factory=RewardConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)
    ddpg: DdpgSection = field(default_factory=DdpgSection)

    def to_dict(self):
        return _plain(dataclasses.asdict(self))

    def dumps(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _plain(v):
    if isinstance(v, dict):
        return {k: _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    return v


def _coerce(name, default, value):
    """Convert a JSON value to the type implied by the field's default."""
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"expected true/false, got {value!r}", name)
        return value
    if isinstance(default, int) and not isinstance(default, bool):
        if isinstance(value, bool) or not isinstance(value, (int, float)) or value != int(value):
            raise ConfigError(f"expected an integer, got {value!r}", name)
        return int(value)
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"expected a number, got {value!r}", name)
        return float(value)
    if isinstance(default, tuple):
        if not isinstance(value, (list, tuple)) or len(value) != len(default):
            raise ConfigError(f"expected a list of {len(default)} entries, got {value!r}", name)
        return tuple(_coerce(f"{name}[{i}]", d, v) for i, (d, v) in enumerate(zip(default, value)))
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigError(f"expected a string, got {value!r}", name)
        return value
    return value


def _fill(cls, data, prefix):
    if not isinstance(data, dict):
        raise ConfigError("expected an object", prefix.rstrip(".") or None)
    names = {f.name: f for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - set(names))
    if unknown:
        raise ConfigError("unknown key", prefix + unknown[0])
    obj = cls()
    for key, value in data.items():
        current = getattr(obj, key)
        if dataclasses.is_dataclass(current):
            value = _fill(type(current), value, f"{prefix}{key}.")
        elif prefix == "eh." and key in PER_DEVICE:
            pass  # number or per-device list, checked in validate()
        elif key in ("actor_hidden", "critic_hidden"):
            if (not isinstance(value, (list, tuple)) or not value
                    or not all(isinstance(v, int) and v > 0 for v in value)):
                raise ConfigError("expected a nonempty list of positive integers", prefix + key)
            value = tuple(value)
        else:
            value = _coerce(prefix + key, current, value)
        setattr(obj, key, value)
    return obj


def _check(ok, field_name, message):
    if not ok:
        raise ConfigError(message, field_name)


def _per_device(cfg, name):
    v = getattr(cfg.eh, name)
    vals = v if isinstance(v, (list, tuple)) else [v]
    _check(all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in vals),
           f"eh.{name}", "expected a number or a list of numbers")
    _check(len(vals) in (1, cfg.K) if isinstance(v, (list, tuple)) else True,
           f"eh.{name}", f"per-device list must have K={cfg.K} entries")
    _check(all(x > 0 for x in vals), f"eh.{name}", "must be positive")
    if isinstance(v, (list, tuple)):
        setattr(cfg.eh, name, [float(x) for x in vals])


def validate(cfg):
    """Range checks with field-level messages; returns ``cfg``."""
    _check(cfg.K >= 1, "K", "need at least one device")
    _check(cfg.T >= 1, "T", "need at least one slot per episode")
    _check(cfg.n_episodes >= 0, "n_episodes", "must be nonnegative")
    _check(cfg.n_eval_episodes >= 1, "n_eval_episodes", "must be positive")
    _check(cfg.p_max > 0, "p_max", "must be positive")
    _check(cfg.seed >= 0, "seed", "must be nonnegative")
    _check(cfg.mode in MODES, "mode", f"must be one of {MODES}")
    a = cfg.array
    _check(a.rows >= 1 and a.cols >= 1, "array.rows", "grid must be at least 1x1")
    _check(a.spacing > 0, "array.spacing", "must be positive")
    _check(a.wavelength > 0, "array.wavelength", "must be positive")
    _check(a.g > -1, "array.g", "boresight gain must exceed -1")
    _check(cfg.layout.radius >= 0, "layout.radius", "must be nonnegative")
    _check(cfg.layout.height < a.center[2], "layout.height", "devices must sit below the array")
    for name in PER_DEVICE:
        _per_device(cfg, name)
    e = cfg.eh
    _check(e.b_max > 0, "eh.b_max", "must be positive")
    _check(0 <= e.p_idle < e.b_max, "eh.p_idle", "need 0 <= p_idle < b_max")
    _check(0 <= e.b_init <= e.b_max, "eh.b_init", "need 0 <= b_init <= b_max")
    d = cfg.demand
    _check(0 < d.theta < 1, "demand.theta", "must lie in (0, 1)")
    _check(d.d_b > 0, "demand.d_b", "must be positive")
    n = d.d_max / d.d_b if d.d_b > 0 else 0
    _check(n >= 1 and abs(n - round(n)) < 1e-9, "demand.d_max",
           "must be a positive integer multiple of d_b")
    _check(all(x > 0 for x in d.area), "demand.area", "must be positive")
    r = cfg.reward
    _check(r.rho1 >= 1, "reward.rho1", "must be at least 1")
    _check(0 <= r.rho2 <= 1, "reward.rho2", "must lie in [0, 1]")
    _check(0 <= r.gamma <= 1, "reward.gamma", "must lie in [0, 1]")
    s = cfg.solver
    _check(0 < s.kappa <= 1, "solver.kappa", "must lie in (0, 1]")
    _check(s.inner_tol > 0, "solver.inner_tol", "must be positive")
    _check(0 <= s.sigma <= 1, "solver.sigma", "must lie in [0, 1]")
    _check(0 < s.epsilon < 1, "solver.epsilon", "must lie in (0, 1)")
    _check(s.max_outer >= 1, "solver.max_outer", "must be positive")
    _check(s.max_inner >= 1, "solver.max_inner", "must be positive")
    _check(s.residual_tol > 0, "solver.residual_tol", "must be positive")
    _check(s.n_symbols is None or (isinstance(s.n_symbols, int) and not isinstance(s.n_symbols, bool)
                                   and 1 <= s.n_symbols <= min(a.rows * a.cols, cfg.K)),
           "solver.n_symbols", "must be null or an integer in [1, min(N, K)]")
    _check(s.backend in BACKENDS, "solver.backend", "must be null, 'numba' or 'numpy'")
    g = cfg.ddpg
    _check(0 < g.tau <= 1, "ddpg.tau", "must lie in (0, 1]")
    _check(g.batch_size >= 1, "ddpg.batch_size", "must be positive")
    _check(g.memory_size >= g.batch_size, "ddpg.memory_size", "must hold at least one batch")
    _check(g.lr_actor > 0, "ddpg.lr_actor", "must be positive")
    _check(g.lr_critic > 0, "ddpg.lr_critic", "must be positive")
    _check(g.ou_theta > 0, "ddpg.ou_theta", "must be positive")
    _check(g.ou_sigma >= 0, "ddpg.ou_sigma", "must be nonnegative")
    _check(0 < g.noise_decay <= 1, "ddpg.noise_decay", "must lie in (0, 1]")
    return cfg


def parse_value(text):
    """JSON literal when possible, otherwise the raw string."""
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_overrides(data, overrides):
    """Merge ``key.sub=value`` strings into a nested dict (copied)."""
    data = json.loads(json.dumps(data))
    for item in overrides or ():
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not key=value")
        key, text = item.split("=", 1)
        parts = key.strip().split(".")
        if not all(parts):
            raise ConfigError(f"bad override key {key!r}")
        node = data
        for p in parts[:-1]:
            node = node.setdefault(p, {})
            if not isinstance(node, dict):
                raise ConfigError("cannot override inside a scalar", key)
        node[parts[-1]] = parse_value(text)
    return data


def load_document(source):
    """Read a JSON object from a path; ``None`` is the empty document."""
    if source is None:
        return {}
    if isinstance(source, dict):
        return source
    path = Path(source)
    if not path.is_file():
        raise ConfigError(f"config file {str(path)!r} not found")
    text = path.read_text()
    if not text.strip():
        return {}
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON in {str(path)!r}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("top level must be an object")
    return data


def parse_config(source=None, overrides=None):
    """Build a validated :class:`ExperimentConfig` from a path or dict plus overrides."""
    data = apply_overrides(load_document(source), overrides)
    return validate(_fill(ExperimentConfig, data, ""))
