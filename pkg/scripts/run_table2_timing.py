#!/usr/bin/env python3
"""Wall-clock comparison of the march methods across truncation orders
at strong coupling (the timing-table experiment, desk scale).

Counts scale like B^[(m+1)/2] (2t)^m / (m-1)!!, so raise --m0 with care:
the order-7 column dominates everything.
"""

import argparse

from openqmc.driver import config_from_mapping, run_experiment


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--m0", type=float, default=3e4)
    ap.add_argument("--omega-c", type=float, default=2.5, choices=[2.5, 5.0])
    ap.add_argument("--orders", type=int, nargs="+", default=[1, 3, 5, 7])
    ap.add_argument("--seed", type=int, default=31)
    args = ap.parse_args()

    base = dict(
        epsilon=1.0, delta=1.0, L=400, omega_c=args.omega_c, xi=0.4, beta=5.0,
        dt=0.05, steps=60, m0=args.m0, seed=args.seed, b_table=True,
    )
    if args.omega_c == 5.0:
        base["omega_max"] = 20.0

    # warm the correlation table and compiled kernels so the timing
    # columns measure the solvers, not one-time setup
    for method in ("dyson-reuse", "btb"):
        run_experiment(config_from_mapping({**base, "method": method, "m0": 100}))

    print(f"omega_c={args.omega_c}  M0={args.m0:g}")
    print(f"{'order':>5} | {'dyson-reuse':>12} | {'btb':>12} | {'ratio':>6}")
    for mbar in args.orders:
        wall = {}
        for method in ("dyson-reuse", "btb"):
            traj = run_experiment(
                config_from_mapping({**base, "method": method, "mbar": mbar})
            )
            wall[method] = traj.metadata["wall_times_s"]["total_s"]
        ratio = wall["btb"] / wall["dyson-reuse"]
        print(f"{mbar:>5} | {wall['dyson-reuse']:>11.2f}s | {wall['btb']:>11.2f}s "
              f"| {ratio:>6.3f}")


if __name__ == "__main__":
    main()
