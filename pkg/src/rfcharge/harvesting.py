"""Received RF power, sigmoid rectifier model, device buffers and demand process.

Slots have unit duration, so watts and joules-per-slot are interchangeable.
"""
import csv
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError


@dataclass(frozen=True)
class EhParams:
    """Harvester circuit constants. Fields may be scalars or per-device arrays."""
    p_sat: object = 0.02
    phi: object = 6400.0
    omega: object = 0.003
    p_idle: float = 1e-5
    b_max: float = 0.2

    def __post_init__(self):
        if np.any(np.asarray(self.p_sat) <= 0):
            raise InvalidParameterError("p_sat must be positive")
        if np.any(np.asarray(self.phi) <= 0):
            raise InvalidParameterError("phi must be positive")
        if np.any(np.asarray(self.omega) <= 0):
            raise InvalidParameterError("omega must be positive")
        if not 0 <= self.p_idle < self.b_max:
            raise InvalidParameterError("need 0 <= p_idle < b_max")

    def per_device(self, K):
        """(p_sat, phi, omega) broadcast to length-K float arrays."""
        return tuple(np.broadcast_to(np.asarray(v, dtype=float), (K,)).copy()
                     for v in (self.p_sat, self.phi, self.omega))


def rf_power(a_k, precoders):
    """sum_m |a_k^H w_m|^2 for precoders stacked as columns of an (N, M) array."""
    a_k = np.asarray(a_k)
    W = np.asarray(precoders)
    if W.ndim == 1:
        W = W[:, None]
    if W.shape[0] != a_k.shape[0]:
        raise InvalidParameterError(
            f"precoder dimension {W.shape[0]} does not match channel length {a_k.shape[0]}")
    return float(np.sum(np.abs(a_k.conj() @ W) ** 2))


def rf_powers(H, W):
    """Received RF power of every device; H is (N, K), W is (N, M)."""
    return np.sum(np.abs(H.conj().T @ W) ** 2, axis=1)


def transmit_power(precoders):
    W = np.asarray(precoders)
    return float(np.sum(np.abs(W) ** 2))


def _offset(phi, omega):
    return 1.0 / (1.0 + np.exp(phi * omega))


def harvested_dc(p_rf, p):
    """Normalized sigmoid rectifier output; zero at zero input, P_sat in the limit."""
    p_rf = np.asarray(p_rf, dtype=float)
    if np.any(p_rf < 0):
        raise InvalidParameterError("RF power must be nonnegative")
    # exp(-phi*(0 - omega)) is bit-identical to exp(phi*omega): exact zero at p_rf = 0
    psi = p.p_sat / (1.0 + np.exp(-p.phi * (p_rf - p.omega)))
    c = _offset(p.phi, p.omega)
    out = (psi - p.p_sat * c) / (1.0 - c)
    out = np.clip(out, 0.0, p.p_sat)
    return out if out.ndim else float(out)


def harvested_dc_slope(p_rf, p):
    """d P_dc / d P_rf."""
    p_rf = np.asarray(p_rf, dtype=float)
    e = np.exp(-p.phi * (p_rf - p.omega))
    return p.p_sat * p.phi * e / (1.0 + e) ** 2 / (1.0 - _offset(p.phi, p.omega))


def buffer_step(b, p_dc, d, p, harvest_first=False):
    """One slot of buffer dynamics; returns (b_next, satisfied).

    Works elementwise on arrays. The demand plus idle draw is deducted only
    when the stored energy covers it. By default "stored" means the buffer
    at the start of the slot; with ``harvest_first`` the slot's own harvest
    counts toward covering the demand.
    """
    b = np.asarray(b, dtype=float)
    p_dc = np.asarray(p_dc, dtype=float)
    need = np.asarray(d, dtype=float) + p.p_idle
    satisfied = (b + p_dc if harvest_first else b) >= need
    b_next = np.minimum(b + p_dc - need * satisfied, p.b_max)
    b_next = np.clip(b_next, 0.0, p.b_max)
    if b_next.ndim == 0:
        return float(b_next), bool(satisfied)
    return b_next, satisfied


@dataclass(frozen=True)
class DemandModel:
    d_b: float = 0.01
    theta: float = 0.5
    d_max: float = 0.05
    area: tuple = (5.0, 5.0)

    def __post_init__(self):
        if not 0 < self.theta < 1:
            raise InvalidParameterError("theta must lie in (0, 1)")
        if self.d_b <= 0:
            raise InvalidParameterError("d_b must be positive")
        n = self.d_max / self.d_b
        if n < 1 or abs(n - round(n)) > 1e-9:
            raise InvalidParameterError("d_max must be a positive integer multiple of d_b")

    @property
    def max_bursts(self):
        return int(round(self.d_max / self.d_b))


def activation_probability(chi):
    return np.exp(-np.asarray(chi, dtype=float))


def _positions(users):
    return users.positions if hasattr(users, "positions") else np.asarray(users, dtype=float)


def sample_demands(rng, users, dm, rng_epicenter=None):
    """One alarm: uniform epicenter over the device plane, per-device activation and burst size.

    The epicenter is drawn from ``rng_epicenter`` when given, else from ``rng``.
    """
    pos = _positions(users)
    K = pos.shape[0]
    epicenter = (rng if rng_epicenter is None else rng_epicenter).uniform((0.0, 0.0), dm.area)
    chi = np.linalg.norm(pos[:, :2] - epicenter, axis=1)
    active = rng.random(K) < activation_probability(chi)
    n = rng.geometric(1.0 - dm.theta, size=K)
    # truncate by resampling, which keeps the geometric shape on {1..n_max}
    bad = n > dm.max_bursts
    while np.any(bad):
        n[bad] = rng.geometric(1.0 - dm.theta, size=int(bad.sum()))
        bad = n > dm.max_bursts
    return np.where(active, n * dm.d_b, 0.0)


def sample_demand_trace(rng, users, dm, n_slots, rng_epicenter=None):
    """(n_slots, K) array of per-slot demands in watts."""
    K = _positions(users).shape[0]
    out = np.zeros((n_slots, K))
    for i in range(n_slots):
        out[i] = sample_demands(rng, users, dm, rng_epicenter)
    return out


def write_demand_trace(path, trace):
    trace = np.asarray(trace)
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["slot", "device", "demand_mW"])
        for i, row in enumerate(trace):
            for k, d in enumerate(row):
                w.writerow([i, k, repr(float(d) * 1e3)])


def read_demand_trace(path):
    with open(path, newline="") as f:
        rows = list(csv.DictReader(f))
    if not rows:
        return np.zeros((0, 0))
    n_slots = max(int(r["slot"]) for r in rows) + 1
    K = max(int(r["device"]) for r in rows) + 1
    trace = np.zeros((n_slots, K))
    for r in rows:
        trace[int(r["slot"]), int(r["device"])] = float(r["demand_mW"]) * 1e-3
    return trace
