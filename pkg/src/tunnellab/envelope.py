"""Obstacle-problem envelope: largest u <= f with laplacian5(u) >= -4 pi d.

Solved by projected SOR in a fixed raster order, starting from u = f.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numba
import numpy as np

from .grid import ScalarField, curvature_density, laplacian5_array


@dataclass(frozen=True, eq=False)
class EnvelopeResult:
    envelope: ScalarField
    contact: np.ndarray = field(repr=False)
    residual: float
    iterations: int
    converged: bool
    feasibility: float = 0.0
    complementarity: float = 0.0
    tol: float = 1e-10
    omega_relax: float = 1.8


@numba.njit(cache=True)
def _psor_sweep(u, f, rhs, omega):
    # one raster sweep; rhs = 4 pi d h^2. Returns sup of the update.
    N = u.shape[0]
    change = 0.0
    for j in range(N):
        jp = j + 1 if j + 1 < N else 0
        jm = j - 1 if j > 0 else N - 1
        for l in range(N):
            lp = l + 1 if l + 1 < N else 0
            lm = l - 1 if l > 0 else N - 1
            gs = 0.25 * (u[jp, l] + u[jm, l] + u[j, lp] + u[j, lm] + rhs)
            new = u[j, l] + omega * (gs - u[j, l])
            if new > f[j, l]:
                new = f[j, l]
            c = abs(new - u[j, l])
            if c > change:
                change = c
            u[j, l] = new
    return change


@numba.njit(cache=True)
def _psor_sweep_1d(u, f, rhs, omega):
    n = u.shape[0]
    change = 0.0
    for i in range(n):
        ip = i + 1 if i + 1 < n else 0
        im = i - 1 if i > 0 else n - 1
        gs = 0.5 * (u[ip] + u[im] + rhs)
        new = u[i] + omega * (gs - u[i])
        if new > f[i]:
            new = f[i]
        c = abs(new - u[i])
        if c > change:
            change = c
        u[i] = new
    return change


def _certificates(u, f, h, d):
    beta = d + laplacian5_array(u, h) / (4 * np.pi)
    gap = f - u
    feas = max(float(np.max(-gap)), float(np.max(-beta)), 0.0)
    comp = float(np.max(np.abs(gap * beta)))
    return beta, feas, comp


def project_envelope(f: ScalarField, d: int = 1, tol: float = 1e-10,
                     omega_relax: float = 1.8, max_iter: int = 500_000,
                     check_every: int = 50) -> EnvelopeResult:
    """Discrete envelope Pf by projected SOR.

    Converged when the constraint violation, the complementarity product
    and the sup-change of a sweep all drop below `tol`.
    """
    if not (1.0 <= omega_relax < 2.0):
        raise ValueError(f"omega_relax must lie in [1, 2), got {omega_relax}")
    if tol <= 0:
        raise ValueError("tol must be positive")
    h = f.grid.h
    fv = np.ascontiguousarray(f.values, dtype=float)

    beta_f = curvature_density(f, d).values
    if np.min(beta_f) >= -tol:
        return EnvelopeResult(f, np.ones_like(fv, dtype=bool), 0.0, 0, True,
                              0.0, 0.0, tol, omega_relax)

    u = fv.copy()
    rhs = 4 * np.pi * d * h * h
    it = 0
    residual = np.inf
    feas = comp = np.inf
    while it < max_iter:
        change = _psor_sweep(u, fv, rhs, omega_relax)
        it += 1
        if change < tol and it % check_every == 0:
            _, feas, comp = _certificates(u, fv, h, d)
            residual = max(feas, comp, change)
            if residual < tol:
                break
    else:
        _, feas, comp = _certificates(u, fv, h, d)
        residual = max(feas, comp)
    converged = residual < tol
    contact = (fv - u) <= tol
    return EnvelopeResult(f.with_values(u), contact, float(residual), it,
                          bool(converged), float(feas), float(comp), tol,
                          omega_relax)


def orthogonality_residual(f: ScalarField, result: EnvelopeResult, d: int = 1) -> float:
    """|h^2 sum (Pf - f) beta(Pf)|."""
    if not result.converged:
        raise ValueError("envelope did not converge")
    pf = result.envelope
    beta = curvature_density(pf, d).values
    return float(abs(f.grid.h ** 2 * np.sum((pf.values - f.values) * beta)))


def envelope_1d(fvals: np.ndarray, d: int = 1, tol: float = 1e-13,
                omega_relax: float | None = None, max_iter: int = 5_000_000):
    """Periodic 1-D envelope: max g <= f with g'' >= -4 pi d on n points of [0, 1).

    Brute-force PSOR used as the reference for y-only profiles. The default
    relaxation is the optimal SOR factor for the 1-D periodic Laplacian.
    Returns (g, sweeps).
    """
    f = np.ascontiguousarray(fvals, dtype=float)
    n = f.size
    h = 1.0 / n
    if omega_relax is None:
        omega_relax = 2.0 / (1.0 + np.sin(np.pi / n))
    g = f.copy()
    rhs = 4 * np.pi * d * h * h
    for it in range(1, max_iter + 1):
        change = _psor_sweep_1d(g, f, rhs, omega_relax)
        if change < tol:
            gpp = (np.roll(g, 1) + np.roll(g, -1) - 2 * g) / (h * h)
            beta = d + gpp / (4 * np.pi)
            if min(beta.min(), 0.0) > -1e-6 and np.max(np.abs((f - g) * beta)) < 1e-6:
                return g, it
    raise RuntimeError("1-D envelope did not converge")
