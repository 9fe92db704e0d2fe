"""Time full IT-BF solves and oracle runs on the numba and numpy backends.

    python3 benchmarks/bench_kernels.py [--repeat 20]

Also checks that both backends land on the same weighted DC.
"""
import argparse
import time

import numpy as np

from rfcharge import HAVE_NUMBA
from rfcharge.beamforming import SolverOptions, oracle_solver, solve_itbf
from rfcharge.geometry import build_upa_geometry, channel_matrix, default_user_ring

CASES = [(4, 2, 1.0), (4, 3, 1.0), (8, 4, 10.0), (8, 6, 10.0)]


def instance(side, K, seed):
    geom = build_upa_geometry(side, side, 0.0625, (2.5, 2.5, 5.0), 0.125)
    H = channel_matrix(geom, default_user_ring(K)).coefficients
    alpha = np.random.default_rng(seed).uniform(0.1, 1.0, K)
    return alpha, H


def time_solves(alpha, H, p_tx, backend, repeat):
    opts = SolverOptions(backend=backend)
    rep = solve_itbf(alpha, p_tx, H, options=opts)   # warm-up / compile
    t = time.perf_counter()
    for _ in range(repeat):
        rep = solve_itbf(alpha, p_tx, H, options=opts)
    return (time.perf_counter() - t) / repeat, rep.weighted_dc


def time_oracle(alpha, H, p_tx, backend):
    oracle_solver(alpha, p_tx, H, restarts=2, rng=np.random.default_rng(0), backend=backend)
    t = time.perf_counter()
    rep = oracle_solver(alpha, p_tx, H, restarts=20, rng=np.random.default_rng(0), backend=backend)
    return time.perf_counter() - t, rep.weighted_dc


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args()
    if not HAVE_NUMBA:
        print("numba unavailable or disabled; nothing to compare")
        return
    print(f"{'N':>4} {'K':>2} {'P_tx':>5} | {'numba ms':>9} {'numpy ms':>9} {'speedup':>7} | dc diff")
    for side, K, p_tx in CASES:
        alpha, H = instance(side, K, 0)
        t_nb, f_nb = time_solves(alpha, H, p_tx, "numba", args.repeat)
        t_np, f_np = time_solves(alpha, H, p_tx, "numpy", max(1, args.repeat // 4))
        print(f"{side * side:>4} {K:>2} {p_tx:>5.1f} | {t_nb * 1e3:9.2f} {t_np * 1e3:9.2f} "
              f"{t_np / t_nb:7.1f} | {abs(f_nb - f_np):.2e}")
    alpha, H = instance(4, 3, 1)
    t_nb, f_nb = time_oracle(alpha, H, 1.0, "numba")
    t_np, f_np = time_oracle(alpha, H, 1.0, "numpy")
    print(f"oracle N=16 K=3, 20 restarts: numba {t_nb:.2f} s, numpy {t_np:.2f} s, "
          f"weighted DC diff {abs(f_nb - f_np):.2e}")


if __name__ == "__main__":
    main()
