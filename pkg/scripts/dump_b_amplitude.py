#!/usr/bin/env python3
"""Dump |B(dtau)| curves for the bath parameter sets used in the
experiments (the amplitude figure).  One CSV per parameter set, columns
``dtau,abs_b``; plot with `openqmc-plot --kind b_amplitude`.
"""

import argparse
import json
from pathlib import Path

import numpy as np

from openqmc.bath import BathSpec, correlation_dtau, discretize_bath

PARAM_SETS = [
    dict(omega_c=2.5, xi=0.2),
    dict(omega_c=2.5, xi=0.4),
    dict(omega_c=5.0, xi=0.4),
]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--outdir", default="results/b_amplitude")
    ap.add_argument("--horizon", type=float, default=6.0)
    ap.add_argument("--points", type=int, default=601)
    args = ap.parse_args()

    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    grid = np.linspace(-args.horizon, args.horizon, args.points)
    for params in PARAM_SETS:
        modes = discretize_bath(BathSpec(L=400, beta=5.0, **params))
        amp = np.abs(correlation_dtau(modes, grid))
        name = f"wc{params['omega_c']:g}_xi{params['xi']:g}"
        out = outdir / f"{name}.csv"
        lines = ["dtau,abs_b"] + [
            f"{d:.10g},{a:.10g}" for d, a in zip(grid, amp)
        ]
        out.write_text("\n".join(lines) + "\n")
        label = f"omega_c={params['omega_c']:g}, xi={params['xi']:g}"
        Path(str(out) + ".meta.json").write_text(
            json.dumps({"label": label, "bath": {**params, "L": 400, "beta": 5.0}})
            + "\n"
        )
        print(f"wrote {out} (max |B| = {amp.max():.4f})")


if __name__ == "__main__":
    main()
