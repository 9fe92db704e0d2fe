"""Multi-restart projected-gradient reference solver.

Maximizes sum_k alpha_k P_dc,k directly on the stacked precoders, with the
power ball as the feasible set. Slow but assumption-free; meant for small
arrays when checking the iterative beamformer.
"""
import time

import numpy as np

from ..errors import InvalidParameterError
from ..harvesting import EhParams
from ._kernels import get_kernel
from .itbf import SolveReport, _channels, _report


def oracle_objective(W, alpha, H, eh):
    """sum_k alpha_k P_dc(P_rf,k(W))."""
    H = _channels(H)
    K = H.shape[1]
    p_sat, phi, omega = eh.per_device(K)
    proj = H.conj().T @ W
    p_rf = np.sum(np.abs(proj) ** 2, axis=1)
    c = 1.0 / (1.0 + np.exp(phi * omega))
    dc = (p_sat / (1.0 + np.exp(-phi * (p_rf - omega))) - p_sat * c) / (1.0 - c)
    return float(np.sum(np.asarray(alpha) * dc))


def oracle_gradient(W, alpha, H, eh):
    """Gradient w.r.t. the real and imaginary parts of W, packed as Re + 1j*Im."""
    H = _channels(H)
    K = H.shape[1]
    p_sat, phi, omega = eh.per_device(K)
    proj = H.conj().T @ W
    p_rf = np.sum(np.abs(proj) ** 2, axis=1)
    c = 1.0 / (1.0 + np.exp(phi * omega))
    e = np.exp(-phi * (p_rf - omega))
    slope = p_sat * phi * e / (1.0 + e) ** 2 / (1.0 - c)
    return H @ ((2.0 * np.asarray(alpha) * slope)[:, None] * proj)


def oracle_solver(alpha, p_tx, H, eh=None, restarts=20, rng=None, n_symbols=None,
                  max_iter=2000, tol=1e-10, max_elements=32, backend=None):
    """Best of `restarts` projected-gradient ascents.

    Restart r < K starts from device r's matched filter; the rest start from
    random complex Gaussian precoders scaled to the budget.
    """
    t0 = time.perf_counter()
    if restarts < 1:
        raise InvalidParameterError("restarts must be at least 1")
    eh = EhParams() if eh is None else eh
    rng = np.random.default_rng() if rng is None else rng
    Hc = _channels(H)
    N, K = Hc.shape
    if N > max_elements:
        raise InvalidParameterError(f"oracle limited to N <= {max_elements}, got {N}")
    alpha = np.asarray(alpha, dtype=float)[:K]
    M = min(N, K) if n_symbols is None else int(n_symbols)
    p_sat, phi, omega = eh.per_device(K)
    pga = get_kernel("pga", backend)

    best_W, best_f, history = None, -np.inf, []
    for r in range(restarts):
        if r < K:
            W0 = np.zeros((N, M), dtype=np.complex128)
            W0[:, 0] = Hc[:, r] / np.linalg.norm(Hc[:, r])
        else:
            W0 = rng.standard_normal((N, M)) + 1j * rng.standard_normal((N, M))
        W0 *= np.sqrt(p_tx / np.sum(np.abs(W0) ** 2))
        W, f, _ = pga(Hc, alpha, p_sat, phi, omega, np.ascontiguousarray(W0),
                      float(p_tx), max_iter, tol)
        if f > best_f:
            best_W, best_f = W, f
        history.append(best_f)

    rep = _report(alpha, Hc, best_W, eh, objective=-best_f, trace=np.asarray(history),
                  trace_outer=np.arange(restarts), outer_iterations=restarts,
                  residual_norm=0.0, status="converged",
                  wall_time=time.perf_counter() - t0)
    return rep
