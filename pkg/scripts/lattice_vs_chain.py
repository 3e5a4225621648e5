"""Lowest small eigenvalues on the 2-D lattice against the exact x-reduction.

    python3 scripts/lattice_vs_chain.py --k 8 --N 34 48 68
"""

import argparse

import numpy as np

from tunnellab.bundle import LineBundleModel
from tunnellab.grid import TorusGrid
from tunnellab.profiles import cos_y
from tunnellab.spectrum import logsum_small, partition_small, spectra


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--k", type=int, default=8)
    p.add_argument("--N", type=int, nargs="+", default=[34, 48, 68])
    p.add_argument("--eps", type=float, default=0.25)
    args = p.parse_args()
    for N in args.N:
        g = TorusGrid(N)
        m = LineBundleModel(g, args.k, 1, cos_y(g))
        _, d1 = spectra(m, "dense", vectors=False)
        _, r1 = spectra(m, "reduced", vectors=False)
        pd, pr = partition_small(d1, args.eps), partition_small(r1, args.eps)
        lat, red = d1.eigenvalues[pd.small], r1.eigenvalues[pr.small]
        print(f"N={N:3d} lattice: n={lat.size} lowest={lat[:3]} excluded={pd.excluded_doublers} "
              f"logsum={logsum_small(pd, d1):.5f}")
        print(f"      reduced: n={red.size} lowest={red[:3]} logsum={logsum_small(pr, r1):.5f}")


if __name__ == "__main__":
    main()
