"""Multiprecision reference for the tiniest chain eigenvalue.

Rebuilds d_W d_W^T of chain n (profile cos 2 pi y, d = 1) in 60-digit
arithmetic and diagonalizes it with mpmath, then compares with the
double-precision bisection.  The printed values are the ones frozen in
tests/test_chains.py.

    python3 scripts/chain_oracle.py --k 32 64
"""

import argparse
import time

import mpmath as mp
import numpy as np

from tunnellab.chains import build_chain, chain_singular_values


def mp_lowest(k, n, h1_den, wcut, dps=60):
    h1 = 1.0 / h1_den
    ch = build_chain(k, 1, n, lambda y: np.cos(2 * np.pi * y), h1, wcut=wcut)
    mp.mp.dps = dps
    H = mp.mpf(1) / h1_den
    idx = np.round(ch.y / h1).astype(int)
    W = [k * (mp.pi * (i * H) ** 2 + mp.cos(2 * mp.pi * i * H) / 2) + 2 * mp.pi * n * i * H
         for i in idx]
    m = len(W) - 1
    a = [-mp.exp(-(W[i + 1] - W[i]) / 2) / H for i in range(m)]
    b = [mp.exp((W[i + 1] - W[i]) / 2) / H for i in range(m)]
    T = mp.zeros(m, m)
    for i in range(m):
        T[i, i] = a[i] ** 2 + b[i] ** 2
        if i + 1 < m:
            T[i, i + 1] = T[i + 1, i] = b[i] * a[i + 1]
    E = sorted(mp.eigsy(T, eigvals_only=True))
    s = chain_singular_values(ch, 1.0)
    return E[0] / 2, 0.5 * s[1] ** 2, m + 1


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--k", type=int, nargs="+", default=[32, 64])
    p.add_argument("--n", type=int, default=0)
    p.add_argument("--h1-den", type=int, default=32)
    p.add_argument("--wcut", type=float, default=100.0)
    args = p.parse_args()
    for k in args.k:
        t = time.time()
        ref, fl, size = mp_lowest(k, args.n, args.h1_den, args.wcut)
        rel = float(abs(fl - ref) / ref)
        print(f"k={k} vertices={size} mp={mp.nstr(ref, 20)} float={float(fl)!r} rel={rel:.2e} "
              f"({time.time() - t:.1f}s)")


if __name__ == "__main__":
    main()
