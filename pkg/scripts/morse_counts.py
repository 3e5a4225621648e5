"""Small-eigenvalue counts and one-point densities for cos_y against the Morse constant.

Uses the exact x-reduction, so k can go well past the lattice range.

    python3 scripts/morse_counts.py --k 16 24 32 64 128
"""

import argparse
import time

import numpy as np

from tunnellab.bundle import LineBundleModel
from tunnellab.grid import TorusGrid, curvature_density
from tunnellab.profiles import cos_y, morse_constant
from tunnellab.spectrum import one_point_density, partition_small, spectra


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--k", type=int, nargs="+", default=[16, 24, 32, 64])
    p.add_argument("--eps", type=float, default=0.25)
    args = p.parse_args()
    target = morse_constant(1.0, 1)
    print(f"Morse constant {target:.5f}")
    for k in args.k:
        t = time.time()
        N = int(np.ceil(12 * np.sqrt(k)))
        g = TorusGrid(N)
        f = cos_y(g)
        _, s1 = spectra(LineBundleModel(g, k, 1, f), "reduced", vectors=True)
        part = partition_small(s1, args.eps)
        rho = one_point_density(s1, part.small)
        bm = np.maximum(-curvature_density(f, 1).values, 0.0)
        err = np.abs(rho / k - bm).sum() / bm.sum()
        n = part.small.size
        print(f"k={k:4d} N={N:4d} count={n:4d} count/k={n / k:.4f} ({n / k / target - 1:+.1%}) "
              f"density L1={err:.4f} ({time.time() - t:.1f}s)")


if __name__ == "__main__":
    main()
