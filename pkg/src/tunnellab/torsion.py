"""Truncated torsion, Gram determinants, the truncated Quillen anomaly,
the torsion variation formula and cutoff quasi-modes.

Conventions.  For n = 1 the truncated torsion is log T = sum log lambda over
the small window of Delta01.  The determinant line is the inverse of
det H^0, so its L2 metric has logarithm L = -log det Gram and the truncated
Quillen metric is Q_k(f) = -log det Gram(k f) + log T(k f).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bundle import LineBundleModel, build_dbar, flat_model, reference_kernel_basis
from .energy import WeightPath
from .grid import ScalarField, curvature_density
from .spectrum import (SpectrumError, SpectrumResult, ThresholdPartition, logsum_small,
                       one_point_density, partition_small, spectra)


@dataclass(frozen=True, eq=False)
class GramRecord:
    basis_id: str
    k: int
    profile: str
    gram: np.ndarray = field(repr=False)
    log_det: float


def truncated_torsion(spec_q1: SpectrumResult, part: ThresholdPartition) -> float:
    return logsum_small(part, spec_q1)


def gram_log_det(basis: np.ndarray, model: LineBundleModel, basis_id: str = "reference") -> GramRecord:
    """Gram matrix sum_site psi_i conj(psi_j) exp(-k f) of a section basis.

    The basis is orthonormal for the plain grid sum at f = 0, so the Gram
    matrix is the identity there.
    """
    if basis.shape[1] != model.flux:
        raise ValueError(f"basis has {basis.shape[1]} vectors, expected k*d = {model.flux}")
    w = np.exp(-model.k * model.f.values.ravel())
    G = basis.T @ (w[:, None] * basis.conj())
    G = 0.5 * (G + G.conj().T)
    try:
        L = np.linalg.cholesky(G)
    except np.linalg.LinAlgError as exc:
        raise ValueError("Gram matrix is not positive definite for this weight") from exc
    logdet = float(2.0 * np.sum(np.log(np.real(np.diag(L)))))
    return GramRecord(basis_id, model.k, model.profile, G, logdet)


def l_functional(f: ScalarField, g: ScalarField, base: LineBundleModel,
                 basis: np.ndarray | None = None) -> float:
    """L(f, g) = -log det Gram(f) + log det Gram(g) for a shared basis."""
    if basis is None:
        basis, _ = reference_kernel_basis(flat_model(base.grid.N, base.k, base.d))
    gf = gram_log_det(basis, base.with_f(f)).log_det
    gg = gram_log_det(basis, base.with_f(g)).log_det
    return -gf + gg


def chain_l_functional(f_y, g_y, k: int, d: int, h1: float | None = None) -> float:
    """L(f, g) in the chain reduction, f_y and g_y callables of y."""
    from .chains import DEFAULT_H1, chain_gram_log_det
    h1 = DEFAULT_H1 if h1 is None else h1
    return -chain_gram_log_det(k, d, f_y, h1) + chain_gram_log_det(k, d, g_y, h1)


def quillen_value(model: LineBundleModel, epsilon: float = 0.25, solver: str = "dense",
                  basis: np.ndarray | None = None, h1: float | None = None):
    """Q_k(f) = -log det Gram + log T_tr for the model's weight.

    Returns (Q, log det Gram, log T_tr, small count).
    """
    if solver == "reduced":
        from .chains import DEFAULT_H1, chain_gram_log_det, model_profile
        fy = model_profile(model)
        gld = chain_gram_log_det(model.k, model.d, fy, DEFAULT_H1 if h1 is None else h1)
        s0, s1 = spectra(model, "reduced", vectors=False, h1=h1)
    else:
        if basis is None:
            basis, _ = reference_kernel_basis(flat_model(model.grid.N, model.k, model.d))
        gld = gram_log_det(basis, model).log_det
        s0, s1 = spectra(model, solver, vectors=False)
    part = partition_small(s1, epsilon)
    tt = truncated_torsion(s1, part)
    return -gld + tt, gld, tt, int(part.small.size)


def quillen_anomaly(f: ScalarField, g: ScalarField, k: int, d: int = 1, epsilon: float = 0.25,
                    solver: str = "dense", profile: str = "custom", h1: float | None = None) -> float:
    """Q_k(f) - Q_k(g)."""
    from .grid import TorusGrid
    grid = TorusGrid(f.grid.N)
    basis = None
    if solver != "reduced":
        basis, _ = reference_kernel_basis(flat_model(grid.N, k, d))
    qf = quillen_value(LineBundleModel(grid, k, d, f, profile), epsilon, solver, basis, h1)[0]
    qg = quillen_value(LineBundleModel(grid, k, d, g, profile), epsilon, solver, basis, h1)[0]
    return qf - qg


# --------------------------------------------------------- variation formula
def _check_generic(lams, threshold: float, dt: float):
    """No eigenvalue may come within 5*dt*|dlog(lambda)/dt| of the threshold.

    lams holds the positive eigenvalue lists at t - dt, t, t + dt; slopes
    are estimated per index from the two outer lists.
    """
    lo, mid, hi = lams
    n = min(lo.size, mid.size, hi.size)
    lo, mid, hi = lo[:n], mid[:n], hi[:n]
    slope = np.abs(np.log(hi) - np.log(lo)) / (2 * dt)
    dist = np.abs(np.log(mid / threshold))
    bad = np.nonzero(dist <= 5 * dt * np.maximum(slope, 1.0))[0]
    if bad.size:
        raise SpectrumError(
            f"threshold not generic: eigenvalue {mid[bad[0]]:.6g} within the 5*dt band of "
            f"lambda_k = {threshold:.6g}")


def _small_logsum(model, epsilon, solver, h1, vectors=False):
    s0, s1 = spectra(model, solver, vectors=vectors, h1=h1)
    p1 = partition_small(s1, epsilon)
    p0 = partition_small(s0, epsilon)
    return s0, s1, p0, p1


def torsion_derivative_check(path: WeightPath, k: int, d: int, t: float, dt: float,
                             epsilon: float = 0.25, solver: str = "reduced",
                             profile: str = "path", h1: float | None = None):
    """(central difference of t -> log T_tr(k f_t), predicted variation).

    predicted = k (sum_small <v, w v>_{q=0} - sum_small <u, w u>_{q=1}) with
    w the path direction, i.e. k h^2 sum (B00_small - B01_small) w.
    """
    from .grid import TorusGrid
    if dt <= 0:
        raise ValueError("dt must be positive")
    grid = TorusGrid(path.base.grid.N)
    v = path.direction

    def model_at(s):
        return LineBundleModel(grid, k, d, path.at(s), profile)

    s0, s1, p0, p1 = _small_logsum(model_at(t), epsilon, solver, h1, vectors=True)
    vals, lists = [], []
    for s in (t - dt, t + dt):
        a0, a1, q0, q1 = _small_logsum(model_at(s), epsilon, solver, h1)
        if q1.small.size != p1.small.size:
            raise SpectrumError("small-window count changed across the stencil")
        vals.append(truncated_torsion(a1, q1))
        lists.append(a1.eigenvalues[a1.kernel_count:])
    mid = s1.eigenvalues[s1.kernel_count:]
    pos = [x[x > 0] for x in (lists[0], mid, lists[1])]
    _check_generic(pos, p1.threshold, dt)
    numeric = (vals[1] - vals[0]) / (2 * dt)

    if solver == "reduced":
        from .chains import chain_edge_moment, chain_moment, row_interpolant
        vy = row_interpolant(v.values[0])
        m0 = chain_moment(s0, p0.small, vy)
        m1 = chain_edge_moment(s1, p1.small, vy)
    else:
        h2 = grid.h ** 2
        m0 = h2 * float(np.sum(one_point_density(s0, p0.small) * v.values))
        m1 = h2 * float(np.sum(one_point_density(s1, p1.small) * v.values))
    return float(numeric), float(k * (m0 - m1))


# ---------------------------------------------------------------- quasi-modes
def smooth_cutoff(r: np.ndarray, radius: float, width: float) -> np.ndarray:
    """C^2 radial bump: 1 on r <= radius, quintic smoothstep down to 0 at radius + width."""
    s = np.clip((r - radius) / width, 0.0, 1.0)
    return 1.0 - s ** 3 * (10 - 15 * s + 6 * s * s)


def _periodic_offsets(grid, x0):
    X, Y = grid.coords()
    dx = (X - x0[0] + 0.5) % 1.0 - 0.5
    dy = (Y - x0[1] + 0.5) % 1.0 - 0.5
    return dx, dy


def weighted_kernel_basis(model: LineBundleModel) -> np.ndarray:
    """The k*d lowest right singular vectors of M at the model's own weight.

    Weighting an approximate f = 0 kernel by exp(-k f / 2) amplifies its
    lattice residual, so peak sections are built from this basis instead.
    """
    s0, _ = spectra(model, "dense", vectors=True)
    return s0.eigenvectors[:, : model.flux]


def quasimode_bound(model: LineBundleModel, x0, width: float, radius: float = 0.12,
                    profile: str = "bergman", basis: np.ndarray | None = None) -> float:
    """Rayleigh quotient ||M alpha||^2 / ||alpha||^2 of alpha = chi * g.

    chi is the C^2 bump equal to 1 within `radius` of x0 and vanishing
    beyond radius + width.  With profile "bergman", g is the Bergman kernel
    at x0 of the pinned lattice kernel for the weight k f, i.e. the
    lattice-exact lowest-Landau-level peak section; with "gaussian"
    it is the continuum Gaussian exp(-B |z - x0|^2 / 4), B = 2 pi k beta(x0),
    written in the Landau gauge.
    """
    grid = model.grid
    N = grid.N
    beta = curvature_density(model.f, model.d).values
    dx, dy = _periodic_offsets(grid, x0)
    r = np.hypot(dx, dy)
    j0 = int(round(x0[0] * N)) % N
    l0 = int(round(x0[1] * N)) % N
    if beta[j0, l0] <= 0:
        raise ValueError("quasi-mode centre must have positive curvature")
    supp = r < radius + width
    if np.any(beta[supp] <= 0):
        raise ValueError("cutoff support touches the region where beta <= 0")
    if radius + width >= 0.5:
        raise ValueError("cutoff support wraps around the torus")
    chi = smooth_cutoff(r, radius, width)
    op = build_dbar(model)
    if profile == "bergman":
        if basis is None:
            basis = weighted_kernel_basis(model)
        Q, _ = np.linalg.qr(basis)
        gvec = Q @ Q[j0 * N + l0].conj()
    elif profile == "gaussian":
        B = 2 * np.pi * model.k * beta[j0, l0]
        X, _ = grid.coords()
        # symmetric-gauge Gaussian moved to the Landau gauge A = (0, B_ref x)
        Bref = 2 * np.pi * model.flux
        phase = np.exp(1j * Bref * (x0[0] * dy + 0.5 * dx * dy))
        gvec = (phase * np.exp(-0.25 * B * r * r)).ravel()
    else:
        raise ValueError(f"unknown quasi-mode profile {profile!r}")
    alpha = chi.ravel() * gvec
    Ma = op.M @ alpha
    return float(np.vdot(Ma, Ma).real / np.vdot(alpha, alpha).real)
