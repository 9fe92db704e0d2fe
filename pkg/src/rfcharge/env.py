"""Slot-level charging MDP: buffers as state, weights plus power fraction as action.

Step ordering: the slot's demands are drawn before the action is applied
and the agent never sees them. With ``harvest_first`` (the default) the
slot's harvest is credited before the demand is checked, so the outage
count and deficiency are measured on the post-harvest buffer and the action
affects its own slot's reward. With ``harvest_first=False`` the check uses
the buffer at the start of the slot, exactly as in the one-slot recursion
of :func:`rfcharge.harvesting.buffer_step`.
"""
from dataclasses import dataclass

import numpy as np

from .beamforming import SolverOptions, solve_itbf
from .errors import RfChargeError
from .harvesting import EhParams, buffer_step, harvested_dc, rf_powers

CHARGE_THRESHOLD = 0.05  # W; the heuristic keeps buffers above the largest demand


@dataclass(frozen=True)
class RewardParams:
    rho1: float = 1.0
    rho2: float = 1.0
    gamma: float = 0.99
    p_max: float = 10.0


@dataclass
class StepOutcome:
    state: np.ndarray
    reward: float
    n_unsatisfied: int
    deficit: float          # normalized total energy deficiency
    p_tx: float
    p_rf: np.ndarray
    p_dc: np.ndarray
    demands: np.ndarray
    satisfied: np.ndarray
    action: np.ndarray


def reward(n_unsatisfied, deficit, p_tx, rp):
    return float(-rp.rho1 * np.exp(n_unsatisfied + rp.rho2 * deficit) - np.exp(p_tx / rp.p_max))


def discounted_return(rewards, gamma):
    R = 0.0
    for r in reversed(list(rewards)):
        R = r + gamma * R
    return R


def heuristic_action(state, threshold=CHARGE_THRESHOLD):
    """Charge every device below `threshold` at full power, weighted by its shortfall."""
    b = np.asarray(state, dtype=float)
    K = b.shape[0]
    action = np.zeros(K + 1)
    low = b < threshold
    if np.any(low):
        short = np.where(low, threshold - b, 0.0)
        action[:K] = short / short.sum()
        action[K] = 1.0
    return action


class SlotError(RfChargeError):
    """A failure inside one environment step, tagged with its slot."""


class ChargingEnv:
    """Charging environment over a fixed channel.

    ``step`` takes the action and this slot's demands and returns a
    :class:`StepOutcome`; the environment keeps the buffer state.
    """

    def __init__(self, channel, eh=None, reward_params=None, solver_options=None,
                 b_init=0.05, harvest_first=True):
        self.H = np.ascontiguousarray(getattr(channel, "coefficients", channel))
        self.K = self.H.shape[1]
        self.eh = EhParams() if eh is None else eh
        self.rp = RewardParams() if reward_params is None else reward_params
        self.solver_options = SolverOptions() if solver_options is None else solver_options
        self.b_init = b_init
        self.harvest_first = harvest_first
        self.state = None
        self.slot = 0

    @property
    def action_dim(self):
        return self.K + 1

    def reset(self, state=None):
        self.state = (np.full(self.K, float(self.b_init)) if state is None
                      else np.array(state, dtype=float))
        self.slot = 0
        return self.state.copy()

    def beamform(self, action):
        """Precoders for a clipped action; (W, p_tx)."""
        weights = action[:self.K]
        p_tx = float(action[self.K]) * self.rp.p_max
        if p_tx < np.finfo(float).tiny:
            return np.zeros((self.H.shape[0], 1), dtype=np.complex128), 0.0
        if not np.any(weights > 0):
            # no preference expressed: spread the effort evenly
            weights = np.ones(self.K)
        rep = solve_itbf(weights, p_tx, self.H, self.eh, self.solver_options)
        return rep.precoders, p_tx

    def step(self, action, demands):
        action = np.clip(np.asarray(action, dtype=float), 0.0, 1.0)
        demands = np.asarray(demands, dtype=float)
        b = self.state
        try:
            W, p_tx = self.beamform(action)
        except RfChargeError as exc:
            raise SlotError(f"slot {self.slot}: {exc}") from exc
        p_rf = rf_powers(self.H, W)
        p_dc = np.asarray(harvested_dc(p_rf, self.eh))
        b_next, satisfied = buffer_step(b, p_dc, demands, self.eh, self.harvest_first)
        unsat = ~satisfied
        n_unsat = int(unsat.sum())
        avail = b + p_dc if self.harvest_first else b
        deficit = float(np.sum((demands + self.eh.p_idle - avail) * unsat) / self.eh.b_max)
        r = reward(n_unsat, deficit, p_tx, self.rp)
        self.state = b_next
        self.slot += 1
        return StepOutcome(b_next.copy(), r, n_unsat, deficit, p_tx, p_rf, p_dc,
                           demands, satisfied, action)
