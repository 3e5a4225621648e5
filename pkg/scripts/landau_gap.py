"""First Landau level of the flat lattice operator against 2 pi k.

For each grid constant c (N = round(c sqrt(k))) prints lambda_{k+1}/(2 pi k)
and (1 - ratio) N^2 / k, which is constant when the error is O(h^2).

    python3 scripts/landau_gap.py --c 8 12 16 24 --k 1 2 4
"""

import argparse

import numpy as np

from tunnellab.bundle import flat_model, reference_kernel_basis


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--c", type=float, nargs="+", default=[8, 12, 16, 24])
    p.add_argument("--k", type=int, nargs="+", default=[1, 2, 4])
    args = p.parse_args()
    for c in args.c:
        for k in args.k:
            N = int(round(c * np.sqrt(k)))
            _, lam = reference_kernel_basis(flat_model(N, k))
            r = lam[k] / (2 * np.pi * k)
            print(f"c={c:4.1f} k={k} N={N:3d} kernel={k} level/(2 pi k)={r:.5f} "
                  f"err*N^2/k={(1 - r) * N * N / k:.4f}")


if __name__ == "__main__":
    main()
