"""Iterative low-complexity beamformer (IT-BF) for one charging slot.

Maximizes sum_k alpha_k P_dc,k over precoders with sum_m ||w_m||^2 <= P_tx.
The sigmoid objective is handled through auxiliary multipliers (mu, beta):
an inner loop runs closed-form damped precoder/dual updates on the
linearized problem, and an outer loop moves (mu, beta) toward the root of
the residual system with a damped Newton step.
"""
import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from ..errors import DegenerateProblemError, InvalidParameterError, NumericalFailure
from ..harvesting import EhParams, harvested_dc, rf_powers
from . import _kernels
from ._kernels import get_kernel


@dataclass
class SolverOptions:
    kappa: float = 0.05           # damping of the precoder blend
    inner_tol: float = 1e-6       # |1 - xi/xi*| stop rule
    sigma: float = 0.5            # line-search sufficient-decrease factor
    epsilon: float = 0.5          # line-search base, zeta = epsilon^t
    max_outer: int = 20
    max_inner: int = 500
    residual_tol: float = 1e-4
    max_line_search: int = 50
    n_symbols: int = None         # None -> min(N, K)
    backend: str = None           # None -> numba when available

    def __post_init__(self):
        if not 0 < self.kappa <= 1:
            raise InvalidParameterError("kappa must lie in (0, 1]")
        if not (0 <= self.sigma <= 1 and 0 <= self.epsilon <= 1):
            raise InvalidParameterError("sigma and epsilon must lie in [0, 1]")
        if self.max_outer < 1 or self.max_inner < 1:
            raise InvalidParameterError("iteration caps must be positive")


@dataclass
class SolveReport:
    precoders: np.ndarray          # (N, M)
    objective: float               # final SCA objective
    trace: np.ndarray              # SCA objective per inner iteration
    trace_outer: np.ndarray        # outer-iteration index of each trace entry
    outer_iterations: int
    residual_norm: float           # inf-norm of the multiplier residuals
    p_rf: np.ndarray
    p_dc: np.ndarray
    weighted_dc: float             # sum_k alpha_k P_dc,k
    status: str = "converged"
    wall_time: float = 0.0
    inner_iterations: list = field(default_factory=list)
    mu: np.ndarray = None
    beta: np.ndarray = None

    @property
    def transmit_power(self):
        return float(np.sum(np.abs(self.precoders) ** 2))

    def inner_segments(self):
        """Split the trace into one array per outer iteration."""
        return [self.trace[self.trace_outer == n] for n in np.unique(self.trace_outer)]

    def to_dict(self):
        return {
            "status": self.status,
            "objective": self.objective,
            "weighted_dc_W": self.weighted_dc,
            "p_rf_mW": (self.p_rf * 1e3).tolist(),
            "p_dc_mW": (self.p_dc * 1e3).tolist(),
            "transmit_power_W": self.transmit_power,
            "outer_iterations": self.outer_iterations,
            "inner_iterations": list(self.inner_iterations),
            "residual_norm": self.residual_norm,
            "trace": self.trace.tolist(),
            "trace_outer": self.trace_outer.tolist(),
        }


def _channels(H):
    return np.ascontiguousarray(getattr(H, "coefficients", H), dtype=np.complex128)


def _exp_term(p_rf, phi, omega):
    return np.exp(-phi * (np.asarray(p_rf, dtype=float) - omega))


def mrt_init(alpha, p_tx, H, n_symbols=None):
    """Matched filters of the highest-weighted devices, equal power per owned symbol.

    Symbols that no positive-weight device can own are left at zero.
    """
    H = _channels(H)
    alpha = np.asarray(alpha, dtype=float)
    N, K = H.shape
    M = min(N, K) if n_symbols is None else int(n_symbols)
    if not 1 <= M <= min(N, K):
        raise InvalidParameterError(f"need 1 <= M <= min(N, K) = {min(N, K)}, got {M}")
    W = np.zeros((N, M), dtype=np.complex128)
    order = np.argsort(-alpha, kind="stable")
    owners = [k for k in order[:M] if alpha[k] > 0]
    if not owners or p_tx <= 0:
        return W
    per = p_tx / len(owners)
    for m, k in enumerate(owners):
        a = H[:, k]
        norm = np.linalg.norm(a)
        if norm > 0:
            W[:, m] = np.sqrt(per) * a / norm
    return W


def inner_precoder_update(H, W, nu, nu_bar, kappa):
    """Damped closed-form precoder step w + kappa (w* - w), w* = A w / nu_bar."""
    if not nu_bar > 0:
        raise NumericalFailure(f"nu_bar must be positive, got {nu_bar}")
    H = _channels(H)
    W_star = H @ (np.asarray(nu)[:, None] * (H.conj().T @ W)) / nu_bar
    return W + kappa * (W_star - W)


def update_nu_bar(H, W, nu, p_tx):
    """Power dual making the undamped update spend exactly p_tx."""
    H = _channels(H)
    G = H @ (np.asarray(nu)[:, None] * (H.conj().T @ W))
    num = float(np.sum(np.abs(G) ** 2))
    if num == 0.0:
        raise NumericalFailure("nu_bar numerator vanished (all nu_k a_k^H w_m = 0)")
    return np.sqrt(num / p_tx)


def update_nu(alpha, mu, beta, p_rf, eh):
    """RF-power duals nu_k = alpha_k mu_k beta_k phi_k exp(-phi_k (P_rf,k - omega_k))."""
    K = len(np.atleast_1d(p_rf))
    _, phi, omega = eh.per_device(K)
    return np.asarray(alpha) * mu * beta * phi * _exp_term(p_rf, phi, omega)


def residuals(mu, beta, p_rf, eh):
    """Stacked residuals [beta-block (K), mu-block (K)]; zero at the multiplier root."""
    K = len(np.atleast_1d(p_rf))
    p_sat, phi, omega = eh.per_device(K)
    s = 1.0 + _exp_term(p_rf, phi, omega)
    return np.concatenate([beta * s - p_sat, mu * s - 1.0])


def multiplier_root(p_rf, eh):
    """(mu, beta) solving the residual system exactly for the given powers."""
    K = len(np.atleast_1d(p_rf))
    p_sat, phi, omega = eh.per_device(K)
    s = 1.0 + _exp_term(p_rf, phi, omega)
    return 1.0 / s, p_sat / s


@dataclass
class NewtonStep:
    mu: np.ndarray
    beta: np.ndarray
    zeta: float
    ok: bool


def newton_outer_step(mu, beta, p_rf, eh, sigma=0.5, epsilon=0.5, max_trials=50):
    """Damped Newton step on the residuals with backtracking zeta = epsilon^t, t >= 1."""
    mu = np.asarray(mu, dtype=float)
    beta = np.asarray(beta, dtype=float)
    K = mu.shape[0]
    r = residuals(mu, beta, p_rf, eh)
    r0 = np.linalg.norm(r)
    if r0 == 0.0:
        return NewtonStep(mu.copy(), beta.copy(), 0.0, True)
    _, phi, omega = eh.per_device(K)
    # Jacobian is diagonal: d/dbeta_k and d/dmu_k of the residuals are both 1 + exp(.)
    jac = np.tile(1.0 + _exp_term(p_rf, phi, omega), 2)
    q = -r / jac
    zeta = 1.0
    for _ in range(max_trials):
        zeta *= epsilon
        mu_t = mu + zeta * q[K:]
        beta_t = beta + zeta * q[:K]
        if np.linalg.norm(residuals(mu_t, beta_t, p_rf, eh)) <= (1.0 - sigma * zeta) * r0:
            return NewtonStep(mu_t, beta_t, zeta, True)
    return NewtonStep(mu.copy(), beta.copy(), 0.0, False)


def sca_objective(alpha, mu, beta, p_rf, eh):
    K = len(np.atleast_1d(p_rf))
    p_sat, phi, omega = eh.per_device(K)
    bracket = p_sat - beta * (1.0 + _exp_term(p_rf, phi, omega))
    return float(-np.sum(np.asarray(alpha) * mu * bracket))


def weighted_dc(alpha, p_rf, eh):
    K = len(p_rf)
    p_sat, phi, omega = eh.per_device(K)
    dc = harvested_dc(p_rf, EhParams(p_sat, phi, omega, eh.p_idle, eh.b_max))
    return float(np.sum(np.asarray(alpha) * dc)), np.asarray(dc)


def _report(alpha, H, W, eh, **kw):
    p_rf = rf_powers(H, W)
    total, dc = weighted_dc(alpha, p_rf, eh)
    return SolveReport(precoders=W, p_rf=p_rf, p_dc=dc, weighted_dc=total, **kw)


def solve_itbf(alpha, p_tx, H, eh=None, options=None):
    """Solve the per-slot weighted harvested-DC maximization."""
    t0 = time.perf_counter()
    eh = EhParams() if eh is None else eh
    opts = SolverOptions() if options is None else options
    Hc = _channels(H)
    N, K = Hc.shape
    alpha = np.asarray(alpha, dtype=float).ravel()
    if alpha.shape[0] != K:
        raise InvalidParameterError(f"expected {K} weights, got {alpha.shape[0]}")
    if not (np.all(np.isfinite(alpha)) and np.isfinite(p_tx)):
        raise InvalidParameterError("weights and budget must be finite")
    if np.any(alpha < 0):
        raise InvalidParameterError("charging weights must be nonnegative")
    if not np.any(alpha > 0):
        raise DegenerateProblemError("all charging weights are zero")
    M = min(N, K) if opts.n_symbols is None else int(opts.n_symbols)

    if p_tx < np.finfo(float).tiny:
        # squared norms of subnormal budgets underflow
        warnings.warn("zero transmit budget: returning zero precoders", RuntimeWarning)
        W = np.zeros((N, M), dtype=np.complex128)
        return _report(alpha, Hc, W, eh, objective=0.0, trace=np.zeros(1),
                       trace_outer=np.zeros(1, dtype=int), outer_iterations=0,
                       residual_norm=0.0, status="zero-budget",
                       wall_time=time.perf_counter() - t0)

    p_sat, phi, omega = eh.per_device(K)
    W = mrt_init(alpha, p_tx, Hc, M)
    mu, beta = multiplier_root(rf_powers(Hc, W), eh)

    inner = get_kernel("inner_loop", opts.backend)
    buf = np.empty(opts.max_inner + 1)
    traces, owners, inner_counts = [], [], []
    status = "max-outer"
    res_norm = np.inf
    n_outer = 0
    for n in range(opts.max_outer):
        n_outer = n + 1
        W, p_rf, n_tr, code = inner(
            Hc, W, alpha * mu, beta, alpha * mu * beta, p_sat, phi, omega,
            float(p_tx), opts.kappa, opts.inner_tol, opts.max_inner, buf)
        if code == _kernels.INNER_NUMERICAL:
            raise NumericalFailure("power dual collapsed to zero inside the inner loop")
        traces.append(buf[:n_tr].copy())
        owners.append(np.full(n_tr, n))
        inner_counts.append(n_tr - 1)
        r = residuals(mu, beta, p_rf, eh)
        res_norm = float(np.max(np.abs(r)))
        if res_norm <= opts.residual_tol:
            status = "converged"
            break
        if n == opts.max_outer - 1:
            break
        step = newton_outer_step(mu, beta, p_rf, eh, opts.sigma, opts.epsilon,
                                 opts.max_line_search)
        if not step.ok:
            status = "stalled-line-search"
            break
        mu, beta = step.mu, step.beta

    trace = np.concatenate(traces)
    return _report(alpha, Hc, W, eh, objective=float(trace[-1]), trace=trace,
                   trace_outer=np.concatenate(owners), outer_iterations=n_outer,
                   residual_norm=res_norm, status=status,
                   wall_time=time.perf_counter() - t0, inner_iterations=inner_counts,
                   mu=mu, beta=beta)
