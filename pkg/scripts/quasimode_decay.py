"""Rayleigh quotients of cutoff peak sections at a point of positive curvature.

    python3 scripts/quasimode_decay.py --A 1.0 --x0 0.5 0.5 --radius 0.12 --width 0.08
"""

import argparse

import numpy as np

from tunnellab.bundle import LineBundleModel
from tunnellab.fitting import fit_exponential
from tunnellab.grid import TorusGrid
from tunnellab.profiles import cos_y
from tunnellab.torsion import quasimode_bound


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--k", type=int, nargs="+", default=[8, 12, 16, 24, 32])
    p.add_argument("--A", type=float, default=1.0)
    p.add_argument("--x0", type=float, nargs=2, default=[0.5, 0.5])
    p.add_argument("--radius", type=float, default=0.12)
    p.add_argument("--width", type=float, default=0.08)
    p.add_argument("--profile", default="bergman", choices=["bergman", "gaussian"])
    args = p.parse_args()
    vals = []
    for k in args.k:
        N = int(np.ceil(12 * np.sqrt(k)))
        g = TorusGrid(N)
        m = LineBundleModel(g, k, 1, cos_y(g, args.A))
        vals.append(quasimode_bound(m, tuple(args.x0), args.width, args.radius, args.profile))
        print(f"k={k:3d} N={N:3d} rayleigh={vals[-1]:.6g}")
    slope, icpt, r2 = fit_exponential(args.k, vals)
    print(f"fit exp(-c k): c={-slope:.5f} r2={r2:.4f}")


if __name__ == "__main__":
    main()
