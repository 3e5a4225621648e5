"""Exact Fourier reduction in x for weights that depend on y only.

For f = f(y) the x-translations commute with the Dolbeault operator, and
in the holomorphic frame the sections of kL split into k*d chains on the
real line.  On chain n the weight is

    W_n(y) = k (pi d y^2 + f(y)/2) + 2 pi n y,

the kernel is spanned by exp(-W_n) and Delta00 restricted to the chain is
(1/2) d_W^* d_W with d_W = exp(-W) d/dy exp(W) (conjugated to the unitary
frame).  A vertex-to-edge discretization keeps the structure exactly:

    (d_W u)_i = (exp(dW_i/2) u_{i+1} - exp(-dW_i/2) u_i) / h1,

a rectangular upper-bidiagonal matrix with a one-dimensional kernel and
no fermion doubling.  Its singular values follow from the Golub-Kahan
tridiagonal by bisection, which keeps high relative accuracy, so
exponentially small eigenvalues are resolved down to underflow.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
from scipy.special import logsumexp

from .bundle import LineBundleModel
from .spectrum import SpectrumError, SpectrumResult

TINY_TOL = 4 * np.finfo(float).tiny
DEFAULT_H1 = 1.0 / 1024


def row_interpolant(values: np.ndarray):
    """Trigonometric interpolant of one period of samples on [0, 1)."""
    v = np.asarray(values, dtype=float)
    n = v.size
    c = np.fft.rfft(v) / n
    freqs = np.arange(c.size)
    weights = np.full(c.size, 2.0)
    weights[0] = 1.0
    if n % 2 == 0:
        weights[-1] = 1.0

    def fy(y):
        y = np.asarray(y, dtype=float)
        phase = np.exp(2j * np.pi * np.multiply.outer(y, freqs))
        return np.real(phase @ (weights * c))

    return fy


def model_profile(model: LineBundleModel):
    if not model.f.is_x_independent():
        raise ValueError("the chain reduction needs a weight that depends on y only")
    return row_interpolant(model.f.values[0])


@dataclass(frozen=True, eq=False)
class Chain:
    n: int
    y: np.ndarray       # vertices, y = i*h1 with integer i
    W: np.ndarray       # W_n at vertices
    a: np.ndarray       # diagonal of d_W (times h1 already divided)
    b: np.ndarray       # superdiagonal of d_W
    h1: float


def window_cut(k: int, fy_osc: float) -> float:
    return 60.0 + k * (2.0 * fy_osc + 2.0)


def build_chain(k: int, d: int, n: int, fy, h1: float, wcut: float | None = None,
                osc: float | None = None) -> Chain:
    kd = k * d
    yc = -n / kd
    if osc is None:
        probe = fy(np.linspace(0.0, 1.0, 513))
        osc = float(probe.max() - probe.min())
    if wcut is None:
        wcut = window_cut(k, osc)
    L = np.sqrt((wcut + k * osc) / (k * np.pi * d)) + 4 * h1
    i0 = int(np.floor((yc - L) / h1))
    i1 = int(np.ceil((yc + L) / h1))
    y = np.arange(i0, i1 + 1) * h1
    W = k * (np.pi * d * y * y + 0.5 * fy(y)) + 2 * np.pi * n * y
    keep = np.nonzero(W - W.min() < wcut)[0]
    y, W = y[keep[0]:keep[-1] + 1], W[keep[0]:keep[-1] + 1]
    dW = np.diff(W)
    a = -np.exp(-0.5 * dW) / h1
    b = np.exp(0.5 * dW) / h1
    return Chain(n, y, W, a, b, h1)


def chain_singular_values(ch: Chain, smax: float) -> np.ndarray:
    """Singular values of d_W below smax (ascending); entry 0 is the kernel.

    The Golub-Kahan matrix has eigenvalues -s_i, 0, +s_i.  The whole window
    (-smax, smax) is bisected and the middle eigenvalue is taken as the
    kernel, so a zero computed with either sign is never confused with a
    tiny positive singular value.
    """
    off = np.empty(2 * ch.a.size)
    off[0::2] = ch.a
    off[1::2] = ch.b
    w = sla.eigh_tridiagonal(np.zeros(off.size + 1), off, eigvals_only=True,
                             lapack_driver="stebz", tol=TINY_TOL, select="v",
                             select_range=(-smax, smax))
    w = np.sort(w)
    if w.size % 2 == 0:
        raise SpectrumError("singular value window is not symmetric; move smax off an eigenvalue")
    mid = w.size // 2
    pos = w[mid + 1:]
    if not np.allclose(pos, -w[:mid][::-1], rtol=1e-8, atol=0):
        raise SpectrumError("Golub-Kahan eigenvalues are not paired")
    return np.concatenate([[0.0], pos])


def _tridiag_lowest(diag, off, m):
    w, V = sla.eigh_tridiagonal(diag, off, select="i", select_range=(0, m - 1),
                                lapack_driver="stemr")
    # stemr hands back a square work array; keep only the m columns asked for
    return w[:m], V[:, :m].copy()


def chain_small_vectors(ch: Chain, s: int):
    """Vertex (q=0) and edge (q=1) vectors of the s lowest positive levels.

    Edge vectors are eigenvectors of d_W d_W^T (no kernel there).  Vertex
    vectors come from the s+1 lowest eigenvectors of d_W^T d_W with the exact
    kernel exp(-W) projected out, then Ritz-ordered.
    """
    a, b = ch.a, ch.b
    T1d = a * a + b * b
    T1o = b[:-1] * a[1:]
    _, U = _tridiag_lowest(T1d, T1o, s)
    T0d = np.zeros(a.size + 1)
    T0d[:-1] += a * a
    T0d[1:] += b * b
    T0o = a * b
    _, V = _tridiag_lowest(T0d, T0o, s + 1)
    kern = np.exp(-(ch.W - ch.W.min()))
    kern /= np.linalg.norm(kern)
    V = V - np.outer(kern, kern @ V)
    Q, sv, _ = np.linalg.svd(V, full_matrices=False)
    Q = Q[:, :s]
    T0Q = T0d[:, None] * Q
    T0Q[:-1] += T0o[:, None] * Q[1:]
    T0Q[1:] += T0o[:, None] * Q[:-1]
    w, R = np.linalg.eigh(Q.T @ T0Q)
    return Q @ R[:, np.argsort(w)], U


def chain_spectra(model: LineBundleModel, h1: float | None = None, vectors: bool = True,
                  lam_max: float | None = None, vec_max: float | None = None, fy=None,
                  wcut: float | None = None):
    """(q=0, q=1) spectra of the reduced operator below lam_max.

    q = 0 carries the k*d exact kernel eigenvalues (reported as 0); q = 1
    has no kernel.  Vectors are kept for eigenvalues below vec_max.
    """
    k, d = model.k, model.d
    fy = fy or model_profile(model)
    h = model.grid.h
    h1 = DEFAULT_H1 if h1 is None else h1
    r = max(1, int(round(h / h1)))
    h1 = h / r
    lam_max = 2.0 * k if lam_max is None else lam_max
    vec_max = k ** 0.8 if vec_max is None else vec_max
    smax = np.sqrt(2.0 * lam_max)
    probe = fy(np.linspace(0.0, 1.0, 513))
    osc = float(probe.max() - probe.min())
    pos, vec0, vec1 = [], [], []
    for n in range(k * d):
        ch = build_chain(k, d, n, fy, h1, wcut=wcut, osc=osc)
        s = chain_singular_values(ch, smax)
        if s.size == 0:
            raise SpectrumError(f"chain {n}: kernel singular value not found")
        lam = 0.5 * s[1:] ** 2
        pos.append(lam)
        if vectors:
            nv = int(np.sum(lam < vec_max))
            if nv:
                V, U = chain_small_vectors(ch, nv)
            for i in range(lam.size):
                if i < nv:
                    vec0.append((ch.n, ch.y, V[:, i]))
                    vec1.append((ch.n, 0.5 * (ch.y[:-1] + ch.y[1:]), U[:, i]))
                else:
                    vec0.append(None)
                    vec1.append(None)
    lam = np.concatenate(pos) if pos else np.zeros(0)
    order = np.argsort(lam, kind="stable")
    lam = lam[order]
    meta = dict(k=k, d=d, N=model.grid.N, profile=model.profile, cutoff=float(lam_max),
                solver="reduced")
    c0 = c1 = None
    if vectors:
        c0 = [None] * (k * d) + [vec0[i] for i in order]
        c1 = [vec1[i] for i in order]
    s0 = SpectrumResult(q=0, eigenvalues=np.concatenate([np.zeros(k * d), lam]),
                        kernel_count=k * d, chain_vectors=c0, **meta)
    s1 = SpectrumResult(q=1, eigenvalues=lam.copy(), kernel_count=0, chain_vectors=c1,
                        **meta)
    return s0, s1


def _vectors(spec: SpectrumResult, idx):
    out = []
    for i in idx:
        rec = spec.chain_vectors[i]
        if rec is None:
            raise SpectrumError(f"no vector stored for eigenvalue index {i}")
        out.append(rec)
    return out


def chain_density_rows(spec: SpectrumResult, idx) -> np.ndarray:
    """Density per torus row: sum |psi|^2 / h binned to the nearest row."""
    N = spec.N
    rows = np.zeros(N)
    for _, y, v in _vectors(spec, idx):
        l = np.floor(y * N + 0.5).astype(np.int64) % N
        rows += np.bincount(l, weights=v * v, minlength=N) * N
    return rows


def chain_moment(spec: SpectrumResult, idx, vy) -> float:
    """sum_i <psi_i, v psi_i> with v evaluated at vertices or edge midpoints."""
    tot = 0.0
    for _, y, v in _vectors(spec, idx):
        tot += float(np.sum(vy(y) * v * v))
    return tot


def chain_edge_moment(spec: SpectrumResult, idx, vy) -> float:
    """Edge version with v averaged over the two endpoints (exact derivative weight)."""
    tot = 0.0
    for _, ym, u in _vectors(spec, idx):
        h1 = ym[1] - ym[0] if ym.size > 1 else 1.0
        vm = 0.5 * (vy(ym - 0.5 * h1) + vy(ym + 0.5 * h1))
        tot += float(np.sum(vm * u * u))
    return tot


def chain_gram_log_det(k: int, d: int, fy, h1: float = DEFAULT_H1) -> float:
    """log det of the Gram matrix of the f = 0 orthonormal kernel basis at weight k f.

    The chains are mutually orthogonal, so the Gram matrix is diagonal with
    entries sum exp(-2 W_n^f) / sum exp(-2 W_n^0) over the chain vertices.
    """
    kd = k * d
    probe = fy(np.linspace(0.0, 1.0, 513))
    osc = float(probe.max() - probe.min())
    L = np.sqrt((200.0 + k * osc) / (k * np.pi * d)) + 1.0
    tot = 0.0
    for n in range(kd):
        yc = -n / kd
        i0, i1 = int(np.floor((yc - L) / h1)), int(np.ceil((yc + L) / h1))
        y = np.arange(i0, i1 + 1) * h1
        W0 = k * np.pi * d * y * y + 2 * np.pi * n * y
        Wf = W0 + 0.5 * k * fy(y)
        tot += float(logsumexp(-2 * Wf) - logsumexp(-2 * W0))
    return tot
