"""Lattice Dolbeault operator for sections of kL on the unit torus.

The flux k*d is carried by Peierls link phases U = exp(-i A h) of a fixed
connection, the metric perturbation f only by the weight E = diag(exp(-k f)).
With forward shifts (S_x u)[j, l] = u[j+1, l], (S_y u)[j, l] = u[j, l+1]

    D = ((U_x S_x - I)/h + i (U_y S_y - I)/h) / sqrt(2)
    M = E^{1/2} D E^{-1/2}

so that Delta00 = M^H M and Delta01 = M M^H.  The 1/sqrt(2) is the norm of
(0,1)-forms on the flat torus; with it the Landau levels sit at 2 pi k d m.
Vectors are flattened with index j*N + l.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import gcd

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .grid import ScalarField, TorusGrid, zeros

SCALE = 1.0 / np.sqrt(2.0)
ITERATIVE_BLOCK = 1500


@dataclass(frozen=True, eq=False)
class LineBundleModel:
    grid: TorusGrid
    k: int
    d: int
    f: ScalarField
    profile: str = "custom"

    def __post_init__(self):
        if self.k < 1 or self.d < 1:
            raise ValueError("k and d must be positive integers")
        if self.f.grid.N != self.grid.N:
            raise ValueError("field grid does not match model grid")
        if self.grid.N ** 2 <= 2 * self.k * self.d:
            raise ValueError(
                f"flux bound violated: N^2 = {self.grid.N ** 2} <= 2kd = {2 * self.k * self.d}")

    @property
    def flux(self) -> int:
        return self.k * self.d

    @property
    def plaquette_flux(self) -> float:
        return 2 * np.pi * self.flux / self.grid.N ** 2

    def with_f(self, f: ScalarField, profile: str | None = None) -> "LineBundleModel":
        return LineBundleModel(self.grid, self.k, self.d, f,
                               self.profile if profile is None else profile)


def flat_model(N: int, k: int, d: int = 1) -> LineBundleModel:
    g = TorusGrid(N)
    return LineBundleModel(g, k, d, zeros(g), "flat")


@dataclass(frozen=True, eq=False)
class DbarOperator:
    model: LineBundleModel
    M: sp.csr_matrix
    D: sp.csr_matrix
    Ux: np.ndarray
    Uy: np.ndarray


def landau_links(N: int, flux: int, period: int | None = None):
    """Link phases (U_x, U_y), shape (N, N), for uniform flux 2 pi flux / N^2.

    U_y[j, l] = exp(-i Phi (j mod p)) and the x-links leaving column
    j = p-1 (mod p) carry exp(i Phi p l), with p = N by default.  Any p
    dividing N with p*flux/N integral gives a gauge-equivalent field.
    """
    p = N if period is None else period
    if N % p or (p * flux) % N:
        raise ValueError(f"period {p} is not compatible with N={N}, flux={flux}")
    phi = 2 * np.pi * flux / N ** 2
    j = np.arange(N)[:, None]
    l = np.arange(N)[None, :]
    Uy = np.exp(-1j * phi * (j % p)) * np.ones((1, N))
    Ux = np.where((j % p) == p - 1, np.exp(1j * phi * p * l), 1.0 + 0j)
    return Ux, Uy


def _shift(N1: int, N2: int, axis: int, wrap_phase: complex = 1.0):
    """Sparse forward shift on an N1 x N2 periodic grid (index j*N2 + l)."""
    idx = np.arange(N1 * N2).reshape(N1, N2)
    tgt = np.roll(idx, -1, axis=axis)
    vals = np.ones((N1, N2), dtype=complex)
    if axis == 0:
        vals[-1, :] = wrap_phase
    else:
        vals[:, -1] = wrap_phase
    n = N1 * N2
    return sp.csr_matrix((vals.ravel(), (idx.ravel(), tgt.ravel())), shape=(n, n))


def _assemble(Ux, Uy, h, weight, wrap_x=1.0):
    N1, N2 = Ux.shape
    n = N1 * N2
    Sx = _shift(N1, N2, 0, wrap_x)
    Sy = _shift(N1, N2, 1)
    I = sp.identity(n, dtype=complex, format="csr")
    D = SCALE * ((sp.diags(Ux.ravel()) @ Sx - I) / h
                 + 1j * (sp.diags(Uy.ravel()) @ Sy - I) / h)
    D = D.tocsr()
    w = weight.ravel()
    M = (sp.diags(np.exp(-0.5 * w)) @ D @ sp.diags(np.exp(0.5 * w))).tocsr()
    return D, M


def build_dbar(model: LineBundleModel) -> DbarOperator:
    N = model.grid.N
    Ux, Uy = landau_links(N, model.flux)
    D, M = _assemble(Ux, Uy, model.grid.h, model.k * model.f.values)
    return DbarOperator(model, M, D, Ux, Uy)


def laplacian_q(op: DbarOperator, q: int):
    """Delta00 = M^H M (q=0) or Delta01 = M M^H (q=1), as a sparse matrix."""
    if q == 0:
        return (op.M.conj().T @ op.M).tocsr()
    if q == 1:
        return (op.M @ op.M.conj().T).tocsr()
    raise ValueError("q must be 0 or 1")


def plaquette_phases(Ux, Uy) -> np.ndarray:
    """Counter-clockwise holonomy exp(i oint A) of every plaquette."""
    w = (Ux * np.roll(Uy, -1, 0) * np.conj(np.roll(Ux, -1, 1)) * np.conj(Uy))
    return np.conj(w)


def wilson_loops(Ux, Uy):
    """Holonomies around the two torus cycles, per row / per column."""
    return np.conj(np.prod(Ux, axis=0)), np.conj(np.prod(Uy, axis=1))


def covariant_laplacian(op: DbarOperator) -> sp.csr_matrix:
    """Unweighted covariant 5-point operator 4I - U_xS_x - (U_xS_x)^H - U_yS_y - (U_yS_y)^H.

    For a unit vector v, <v, L v>/4 is near 0 for slowly varying sections
    and near 1 for sections living at the doubler momentum.  The spectrum
    module uses it as the species weight.
    """
    N = op.model.grid.N
    Sx = sp.diags(op.Ux.ravel()) @ _shift(N, N, 0)
    Sy = sp.diags(op.Uy.ravel()) @ _shift(N, N, 1)
    n = N * N
    L = 4 * sp.identity(n, dtype=complex) - Sx - Sx.conj().T - Sy - Sy.conj().T
    return L.tocsr()


# ---------------------------------------------------------------- Bloch blocks
@dataclass(frozen=True, eq=False)
class BlochBlock:
    """Twisted cell operator for y-only weights.

    In the gauge with x-period p the magnetic translation by p columns
    commutes with M; its eigenvalue exp(i theta) labels the block.  Cell
    vectors live on p x N sites.
    """

    a: int
    theta: float
    period: int
    M: sp.csr_matrix
    D: sp.csr_matrix
    cov: sp.csr_matrix


def bloch_period(N: int, flux: int) -> int:
    return N // gcd(N, flux)


def bloch_blocks(model: LineBundleModel, with_cov: bool = False) -> list[BlochBlock]:
    """Split M into gcd(N, kd) twisted blocks; requires f independent of x."""
    if not model.f.is_x_independent():
        raise ValueError("Bloch reduction needs a weight that depends on y only")
    N, flux, h = model.grid.N, model.flux, model.grid.h
    p = bloch_period(N, flux)
    g = N // p
    Ux, Uy = landau_links(N, flux, period=p)
    Ux, Uy = Ux[:p], Uy[:p]
    w = model.k * model.f.values[:p]
    out = []
    for a in range(g):
        theta = 2 * np.pi * a / g
        D, M = _assemble(Ux, Uy, h, w, wrap_x=np.exp(1j * theta))
        cov = None
        if with_cov:
            Sx = sp.diags(Ux.ravel()) @ _shift(p, N, 0, np.exp(1j * theta))
            Sy = sp.diags(Uy.ravel()) @ _shift(p, N, 1)
            n = p * N
            cov = (4 * sp.identity(n, dtype=complex) - Sx - Sx.conj().T
                   - Sy - Sy.conj().T).tocsr()
        out.append(BlochBlock(a, theta, p, M.tocsr(), D.tocsr(), cov))
    return out


def bloch_gauge(N: int, flux: int) -> np.ndarray:
    """Diagonal unitary G with U_landau(s) = G(s) U_bloch(s) conj(G(s + mu))."""
    p = bloch_period(N, flux)
    Ux0, _ = landau_links(N, flux)
    Ux1, _ = landau_links(N, flux, period=p)
    G = np.ones((N, N), dtype=complex)
    for j in range(N - 1):
        G[j + 1] = G[j] * Ux1[j] / Ux0[j]
    return G


def bloch_to_full(block: BlochBlock, cell_vecs: np.ndarray, N: int, flux: int) -> np.ndarray:
    """Lift cell vectors (p*N, m) of a block to unit vectors on the full grid (Landau gauge)."""
    p = block.period
    g = N // p
    cv = cell_vecs.reshape(p, N, -1)
    phases = np.exp(1j * block.theta * np.arange(g))
    full = (phases[:, None, None, None] * cv[None]).reshape(N, N, -1) / np.sqrt(g)
    G = bloch_gauge(N, flux)
    return (G[:, :, None] * full).reshape(N * N, -1)


# ---------------------------------------------------------------- kernel basis
def _lowest_right_singular(Mdense: np.ndarray, m: int):
    _, s, Vh = sla.svd(Mdense, lapack_driver="gesdd")
    order = np.argsort(s)
    return s[order], Vh.conj().T[:, order[:m]]


def reference_kernel_basis(model: LineBundleModel, gap_ratio: float = 10.0):
    """The k*d lowest eigenvectors of M^H M at f = 0, with a gap certificate.

    Blocks larger than ITERATIVE_BLOCK sites go through shift-invert Lanczos
    for their kd + 1 lowest pairs, so the returned eigenvalue list is then
    only complete up to index kd.
    Returns (basis of shape (N^2, kd), eigenvalues sorted ascending).
    """
    if np.any(model.f.values != 0):
        raise ValueError("reference basis is defined at f = 0")
    N, kd = model.grid.N, model.flux
    vals, vecs = [], []
    for blk in bloch_blocks(model):
        if blk.M.shape[0] > ITERATIVE_BLOCK:
            from .spectrum import eigensolve
            lam, V = eigensolve((blk.M.conj().T @ blk.M).tocsc(), "lowest", kd + 1,
                                vectors=True)
            lam, V = np.maximum(lam, 0.0), V[:, :kd]
        else:
            s, V = _lowest_right_singular(blk.M.toarray(), kd)
            lam = s ** 2
        vals.append(lam)
        vecs.append((lam, blk, V))
    lam_all = np.sort(np.concatenate(vals))
    lo, hi = lam_all[kd - 1], lam_all[kd]
    if not hi >= gap_ratio * max(lo, np.finfo(float).tiny):
        raise ValueError(
            f"kernel gap certificate failed: lambda_kd={lo:.3e}, lambda_kd+1={hi:.3e}; refine N")
    cols = []
    for lam, blk, V in vecs:
        sel = lam <= lo
        if np.any(sel):
            cols.append(bloch_to_full(blk, V[:, sel[: V.shape[1]]], N, model.flux))
    B = np.concatenate(cols, axis=1)
    if B.shape[1] != kd:
        raise ValueError("degenerate kernel selection; refine N")
    Q, _ = np.linalg.qr(B)
    return Q, lam_all


# ---------------------------------------------------------------- theta check
def theta_sections(model: LineBundleModel, jmax: int = 8) -> np.ndarray:
    """Continuum lowest-Landau-level sections matched to the Landau gauge.

    theta_r(x, y) = sum_j exp(-B (x - x_m)^2 / 2 + 2 pi i m y),
    m = r + j k d, x_m = m / (k d), B = 2 pi k d.  Columns are unit vectors
    of the samples, to be compared with the gauge seam at x = 1.
    """
    N, kd = model.grid.N, model.flux
    B = 2 * np.pi * kd
    X, Y = model.grid.coords()
    cols = []
    for r in range(kd):
        acc = np.zeros((N, N), dtype=complex)
        tail = 0.0
        for j in range(-jmax, jmax + 1):
            m = r + j * kd
            xm = m / kd
            term = np.exp(-0.5 * B * (X - xm) ** 2 + 2j * np.pi * m * Y)
            acc += term
            if abs(j) == jmax:
                tail = max(tail, float(np.max(np.abs(term))))
        if tail > 1e-14 * np.max(np.abs(acc)):
            raise ValueError("theta series truncation not converged")
        cols.append(acc.ravel())
    T = np.stack(cols, axis=1)
    Q, _ = np.linalg.qr(T)
    return Q


def principal_angle(A: np.ndarray, B: np.ndarray) -> float:
    """Largest principal angle between the column spans of A and B."""
    return float(np.max(sla.subspace_angles(A, B)))


def theta_crosscheck(model: LineBundleModel) -> float:
    basis, _ = reference_kernel_basis(model)
    return principal_angle(basis, theta_sections(model))
