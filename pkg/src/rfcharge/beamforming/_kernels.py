"""Hot loops of the beamforming solvers, in two interchangeable backends.

``*_loops`` functions are written for numba (explicit loops over small
dimensions); ``*_numpy`` functions are the vectorized reference path.
Both follow the same arithmetic so results agree to rounding.
"""
import numpy as np

from .._accel import HAVE_NUMBA, njit

# inner-loop status codes
INNER_CONVERGED = 0
INNER_MAX_ITER = 1
INNER_STALLED = 2   # no damped step lowers the objective
INNER_NUMERICAL = 3  # every nu_k a_k^H w_m vanished

MAX_HALVINGS = 40


# ---------------------------------------------------------------- numba path

@njit(cache=True)
def _project_channels(H, W, out):
    # out[k, m] = a_k^H w_m
    N, K = H.shape
    M = W.shape[1]
    for k in range(K):
        for m in range(M):
            s = 0j
            for n in range(N):
                s += H[n, k].conjugate() * W[n, m]
            out[k, m] = s


@njit(cache=True)
def _sca_state(H, W, proj, am, beta, p_sat, phi, omega, p_rf, expo):
    """Fill p_rf and exp(-phi (p_rf - omega)); return the SCA objective."""
    _project_channels(H, W, proj)
    K, M = proj.shape
    obj = 0.0
    for k in range(K):
        s = 0.0
        for m in range(M):
            z = proj[k, m]
            s += z.real * z.real + z.imag * z.imag
        p_rf[k] = s
        e = np.exp(-phi[k] * (s - omega[k]))
        expo[k] = e
        obj -= am[k] * (p_sat[k] - beta[k] * (1.0 + e))
    return obj


@njit(cache=True)
def _scaled_nu(cw, phi, omega, p_rf, nu):
    # nu_k up to a common factor, from logs: the precoder update only sees
    # nu / nu_bar, and exp(-phi (p_rf - omega)) underflows once a device saturates
    K = cw.shape[0]
    top = -np.inf
    for k in range(K):
        if cw[k] > 0.0:
            nu[k] = np.log(cw[k] * phi[k]) - phi[k] * (p_rf[k] - omega[k])
            if nu[k] > top:
                top = nu[k]
    for k in range(K):
        nu[k] = np.exp(nu[k] - top) if cw[k] > 0.0 else 0.0


@njit(cache=True)
def inner_loop_loops(H, W0, am, beta, cw, p_sat, phi, omega, p_tx, kappa, tol,
                     max_inner, trace):
    N, K = H.shape
    M = W0.shape[1]
    W = W0.copy()
    Wn = np.empty_like(W)
    G = np.empty_like(W)
    proj = np.empty((K, M), dtype=np.complex128)
    p_rf = np.empty(K)
    expo = np.empty(K)
    p_rf_n = np.empty(K)
    expo_n = np.empty(K)
    nu = np.empty(K)

    xi = _sca_state(H, W, proj, am, beta, p_sat, phi, omega, p_rf, expo)
    trace[0] = xi
    n_trace = 1
    status = INNER_MAX_ITER
    for _ in range(max_inner):
        xi_prev = xi
        _scaled_nu(cw, phi, omega, p_rf, nu)
        # G = sum_k nu_k a_k a_k^H W, proj still holds a_k^H W
        for n in range(N):
            for m in range(M):
                s = 0j
                for k in range(K):
                    s += nu[k] * H[n, k] * proj[k, m]
                G[n, m] = s
        # rescale G by its largest entry so tiny budgets do not underflow
        gmax = 0.0
        for n in range(N):
            for m in range(M):
                gmax = max(gmax, abs(G[n, m]))
        if not gmax > 0.0:
            status = INNER_NUMERICAL
            break
        g2 = 0.0
        for n in range(N):
            for m in range(M):
                z = G[n, m] / gmax
                G[n, m] = z
                g2 += z.real * z.real + z.imag * z.imag
        nu_bar = np.sqrt(g2 / p_tx)

        step = kappa
        accepted = False
        for _h in range(MAX_HALVINGS):
            w2 = 0.0
            for n in range(N):
                for m in range(M):
                    z = W[n, m] + step * (G[n, m] / nu_bar - W[n, m])
                    Wn[n, m] = z
                    w2 += z.real * z.real + z.imag * z.imag
            scale = np.sqrt(p_tx / w2)
            for n in range(N):
                for m in range(M):
                    Wn[n, m] *= scale
            xi_n = _sca_state(H, Wn, proj, am, beta, p_sat, phi, omega, p_rf_n, expo_n)
            if xi_n <= xi_prev:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            # restore proj for the unchanged iterate
            _project_channels(H, W, proj)
            status = INNER_STALLED
            break
        for n in range(N):
            for m in range(M):
                W[n, m] = Wn[n, m]
        for k in range(K):
            p_rf[k] = p_rf_n[k]
            expo[k] = expo_n[k]
        xi = xi_n
        trace[n_trace] = xi
        n_trace += 1
        if xi_prev != 0.0 and abs(1.0 - xi / xi_prev) < tol:
            status = INNER_CONVERGED
            break
    return W, p_rf, n_trace, status


@njit(cache=True)
def _dc_and_slope(p_rf, p_sat, phi, omega, dc, slope):
    K = p_rf.shape[0]
    for k in range(K):
        c = 1.0 / (1.0 + np.exp(phi[k] * omega[k]))
        e = np.exp(-phi[k] * (p_rf[k] - omega[k]))
        psi = p_sat[k] / (1.0 + e)
        dc[k] = (psi - p_sat[k] * c) / (1.0 - c)
        slope[k] = p_sat[k] * phi[k] * e / ((1.0 + e) * (1.0 + e)) / (1.0 - c)


@njit(cache=True)
def pga_loops(H, alpha, p_sat, phi, omega, W0, p_tx, max_iter, tol):
    N, K = H.shape
    M = W0.shape[1]
    W = W0.copy()
    Wn = np.empty_like(W)
    G = np.empty_like(W)
    proj = np.empty((K, M), dtype=np.complex128)
    p_rf = np.empty(K)
    dc = np.empty(K)
    slope = np.empty(K)

    def evaluate(Wx):
        _project_channels(H, Wx, proj)
        for k in range(K):
            s = 0.0
            for m in range(M):
                z = proj[k, m]
                s += z.real * z.real + z.imag * z.imag
            p_rf[k] = s
        _dc_and_slope(p_rf, p_sat, phi, omega, dc, slope)
        f = 0.0
        for k in range(K):
            f += alpha[k] * dc[k]
        return f

    f = evaluate(W)
    radius = np.sqrt(p_tx)
    step = 0.1 * radius
    n_iter = 0
    for it in range(max_iter):
        n_iter = it + 1
        # ascent direction: 2 sum_k alpha_k P_dc'(P_k) a_k a_k^H w_m
        for n in range(N):
            for m in range(M):
                s = 0j
                for k in range(K):
                    s += 2.0 * alpha[k] * slope[k] * H[n, k] * proj[k, m]
                G[n, m] = s
        gn = 0.0
        for n in range(N):
            for m in range(M):
                z = G[n, m]
                gn += z.real * z.real + z.imag * z.imag
        gn = np.sqrt(gn)
        if gn == 0.0:
            break
        improved = False
        f_new = f
        while step > 1e-14 * radius:
            w2 = 0.0
            for n in range(N):
                for m in range(M):
                    z = W[n, m] + step * G[n, m] / gn
                    Wn[n, m] = z
                    w2 += z.real * z.real + z.imag * z.imag
            if w2 > p_tx:
                sc = np.sqrt(p_tx / w2)
                for n in range(N):
                    for m in range(M):
                        Wn[n, m] *= sc
            f_new = evaluate(Wn)
            if f_new > f:
                improved = True
                break
            step *= 0.5
        if not improved:
            evaluate(W)
            break
        for n in range(N):
            for m in range(M):
                W[n, m] = Wn[n, m]
        rel = (f_new - f) / abs(f_new) if f_new != 0.0 else 0.0
        f = f_new
        step = min(2.0 * step, radius)
        if rel < tol:
            break
    return W, f, n_iter


# ---------------------------------------------------------------- numpy path

def _sca_state_numpy(H, W, am, beta, p_sat, phi, omega):
    proj = H.conj().T @ W
    p_rf = np.sum(proj.real ** 2 + proj.imag ** 2, axis=1)
    expo = np.exp(-phi * (p_rf - omega))
    obj = -np.sum(am * (p_sat - beta * (1.0 + expo)))
    return proj, p_rf, expo, obj


def _scaled_nu_numpy(cw, phi, omega, p_rf):
    live = cw > 0.0
    log_nu = np.full(cw.shape, -np.inf)
    log_nu[live] = np.log(cw[live] * phi[live]) - phi[live] * (p_rf[live] - omega[live])
    return np.exp(log_nu - log_nu.max())


def inner_loop_numpy(H, W0, am, beta, cw, p_sat, phi, omega, p_tx, kappa, tol,
                     max_inner, trace):
    W = W0.copy()
    proj, p_rf, expo, xi = _sca_state_numpy(H, W, am, beta, p_sat, phi, omega)
    trace[0] = xi
    n_trace = 1
    status = INNER_MAX_ITER
    for _ in range(max_inner):
        xi_prev = xi
        nu = _scaled_nu_numpy(cw, phi, omega, p_rf)
        G = H @ (nu[:, None] * proj)
        gmax = np.max(np.abs(G))
        if not gmax > 0.0:
            status = INNER_NUMERICAL
            break
        G = G / gmax
        nu_bar = np.sqrt(np.sum(G.real ** 2 + G.imag ** 2) / p_tx)
        step = kappa
        for _h in range(MAX_HALVINGS):
            Wn = W + step * (G / nu_bar - W)
            Wn *= np.sqrt(p_tx / np.sum(Wn.real ** 2 + Wn.imag ** 2))
            proj_n, p_rf_n, expo_n, xi_n = _sca_state_numpy(H, Wn, am, beta, p_sat, phi, omega)
            if xi_n <= xi_prev:
                break
            step *= 0.5
        else:
            status = INNER_STALLED
            break
        W, proj, p_rf, expo, xi = Wn, proj_n, p_rf_n, expo_n, xi_n
        trace[n_trace] = xi
        n_trace += 1
        if xi_prev != 0.0 and abs(1.0 - xi / xi_prev) < tol:
            status = INNER_CONVERGED
            break
    return W, p_rf, n_trace, status


def _pga_eval_numpy(H, W, alpha, p_sat, phi, omega):
    proj = H.conj().T @ W
    p_rf = np.sum(proj.real ** 2 + proj.imag ** 2, axis=1)
    c = 1.0 / (1.0 + np.exp(phi * omega))
    e = np.exp(-phi * (p_rf - omega))
    dc = (p_sat / (1.0 + e) - p_sat * c) / (1.0 - c)
    slope = p_sat * phi * e / ((1.0 + e) * (1.0 + e)) / (1.0 - c)
    return proj, slope, float(np.sum(alpha * dc))


def pga_numpy(H, alpha, p_sat, phi, omega, W0, p_tx, max_iter, tol):
    W = W0.copy()
    proj, slope, f = _pga_eval_numpy(H, W, alpha, p_sat, phi, omega)
    radius = np.sqrt(p_tx)
    step = 0.1 * radius
    n_iter = 0
    for it in range(max_iter):
        n_iter = it + 1
        G = H @ ((2.0 * alpha * slope)[:, None] * proj)
        gn = np.sqrt(np.sum(G.real ** 2 + G.imag ** 2))
        if gn == 0.0:
            break
        improved = False
        while step > 1e-14 * radius:
            Wn = W + step * G / gn
            w2 = np.sum(Wn.real ** 2 + Wn.imag ** 2)
            if w2 > p_tx:
                Wn *= np.sqrt(p_tx / w2)
            proj_n, slope_n, f_new = _pga_eval_numpy(H, Wn, alpha, p_sat, phi, omega)
            if f_new > f:
                improved = True
                break
            step *= 0.5
        if not improved:
            break
        rel = (f_new - f) / abs(f_new) if f_new != 0.0 else 0.0
        W, proj, slope, f = Wn, proj_n, slope_n, f_new
        step = min(2.0 * step, radius)
        if rel < tol:
            break
    return W, f, n_iter


KERNELS = {
    "numpy": {"inner_loop": inner_loop_numpy, "pga": pga_numpy},
    "numba": {"inner_loop": inner_loop_loops, "pga": pga_loops},
}


def get_kernel(name, backend=None):
    if backend is None:
        backend = "numba" if HAVE_NUMBA else "numpy"
    if backend == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba backend requested but numba is unavailable or disabled")
    return KERNELS[backend][name]
