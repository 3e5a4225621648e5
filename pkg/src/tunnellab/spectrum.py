"""Eigensolvers, the small-eigenvalue window, log-sums, one-point densities.

Two discretizations feed the same result type:

* the 2-D lattice operator of `bundle` (modes "dense" and "iterative");
* the exact Fourier reduction in x of `chains` for y-only weights
  (mode "reduced").

The forward-difference lattice carries a second, opposite-chirality
species at momentum (pi/2h, -pi/2h).  Each lattice eigenvector gets a
species weight g = <v, L v>/4 with L the covariant 5-point operator;
g ~ 0 for the physical species and g ~ 1 for the doubler.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .bundle import (DbarOperator, LineBundleModel, bloch_blocks, bloch_to_full,
                     build_dbar, covariant_laplacian, laplacian_q)
from .grid import ScalarField

DENSE_LIMIT = 8192
SPECIES_CUT = 0.5
SPECIES_AMBIGUOUS = (0.25, 0.75)


@dataclass(frozen=True, eq=False)
class SpectrumResult:
    """Ascending eigenvalues of one Laplacian plus optional vectors.

    `cutoff` is the largest value below which the list is known to be
    complete (inf for a full decomposition).  `kernel_count` is the number
    of lowest eigenvalues pinned as kernel (or kernel partners).
    """

    q: int
    eigenvalues: np.ndarray
    k: int
    d: int
    N: int
    profile: str = "custom"
    eigenvectors: np.ndarray | None = field(default=None, repr=False)
    kernel_count: int = 0
    cutoff: float = np.inf
    species: np.ndarray | None = field(default=None, repr=False)
    solver: str = "dense"
    chain_vectors: list | None = field(default=None, repr=False)
    ambiguous: int = 0

    @property
    def complete(self) -> bool:
        return bool(np.isinf(self.cutoff))


@dataclass(frozen=True)
class ThresholdPartition:
    kernel_count: int
    small: np.ndarray
    rest: np.ndarray
    threshold: float
    rule: str
    excluded_doublers: int = 0


class SpectrumError(RuntimeError):
    pass


# ------------------------------------------------------------------- solvers
def eigensolve(H, mode: str = "full", m: int | None = None, vectors: bool = False,
               tol: float = 1e-9):
    """Ascending eigenpairs of a Hermitian PSD matrix.

    mode "full" is a dense decomposition; "lowest" uses shift-invert
    Lanczos for the m lowest and certifies ||Hv - lam v|| <= tol * ||H||.
    Returns (eigenvalues, eigenvectors or None).
    """
    n = H.shape[0]
    if mode == "full":
        if n > DENSE_LIMIT:
            raise SpectrumError(f"dense mode limited to dimension {DENSE_LIMIT}, got {n}")
        A = H.toarray() if sp.issparse(H) else np.asarray(H)
        if vectors:
            w, V = sla.eigh(A)
            return w, V
        return sla.eigh(A, eigvals_only=True), None
    if mode != "lowest":
        raise ValueError(f"unknown mode {mode!r}")
    if m is None or not (1 <= m < n - 1):
        raise ValueError("lowest mode needs 1 <= m < dim - 1")
    Hs = sp.csc_matrix(H)
    scale = spla.norm(Hs, 1)
    if scale == 0:
        return np.zeros(m), (np.eye(n, m) if vectors else None)
    sigma = -1e-3 * scale / n
    v0 = np.ones(n) / np.sqrt(n)
    w, V = spla.eigsh(Hs, k=m, sigma=sigma, which="LM", v0=v0, tol=0)
    order = np.argsort(w)
    w, V = w[order], V[:, order]
    res = np.linalg.norm(Hs @ V - V * w, axis=0)
    if np.max(res) > tol * scale:
        raise SpectrumError(f"Lanczos residuals not certified: max {np.max(res):.3e} "
                            f"> {tol * scale:.3e}")
    return w, (V if vectors else None)


def _svd_pairs(M: np.ndarray):
    U, s, Vh = sla.svd(M, lapack_driver="gesdd")
    order = np.argsort(s)
    return s[order], U[:, order], Vh.conj().T[:, order]


def _species(cov, V) -> np.ndarray:
    return np.real(np.einsum("ij,ij->j", V.conj(), cov @ V)) / 4.0


def _shared_species(g0, g1, kd):
    """One species label per positive singular triple, used by both degrees.

    Kernel triples keep their own labels: the cokernel partner of a
    physical zero mode sits at the doubler, so the two sides disagree there.
    """
    g = 0.5 * (g0 + g1)
    a, b = g.copy(), g.copy()
    a[:kd], b[:kd] = g0[:kd], g1[:kd]
    return a, b


def lattice_spectra(model: LineBundleModel, mode: str = "dense", vectors: bool = True,
                    n_lowest: int | None = None, op: DbarOperator | None = None):
    """Spectra of Delta00 and Delta01 for the 2-D lattice operator.

    Dense mode works from the singular value decomposition of M (exact
    pairing; Bloch-reduced when f depends on y only), iterative mode from
    shift-invert Lanczos on each Laplacian separately.
    Returns (SpectrumResult q=0, SpectrumResult q=1).
    """
    N, kd = model.grid.N, model.flux
    meta = dict(k=model.k, d=model.d, N=N, profile=model.profile)
    if mode == "dense":
        lam_all, V_all, U_all, g0_all, g1_all = [], [], [], [], []
        if model.f.is_x_independent():
            for blk in bloch_blocks(model, with_cov=True):
                s, U, V = _svd_pairs(blk.M.toarray())
                lam_all.append(s ** 2)
                g0_all.append(_species(blk.cov, V))
                g1_all.append(_species(blk.cov, U))
                if vectors:
                    V_all.append(bloch_to_full(blk, V, N, kd))
                    U_all.append(bloch_to_full(blk, U, N, kd))
        else:
            op = op or build_dbar(model)
            if N * N > DENSE_LIMIT:
                raise SpectrumError(f"dense mode limited to N^2 <= {DENSE_LIMIT}")
            s, U, V = _svd_pairs(op.M.toarray())
            cov = covariant_laplacian(op)
            lam_all.append(s ** 2)
            g0_all.append(_species(cov, V))
            g1_all.append(_species(cov, U))
            if vectors:
                V_all.append(V)
                U_all.append(U)
        lam = np.concatenate(lam_all)
        order = np.argsort(lam, kind="stable")
        lam = lam[order]
        g0 = np.concatenate(g0_all)[order]
        g1 = np.concatenate(g1_all)[order]
        g0, g1 = _shared_species(g0, g1, kd)
        V = np.concatenate(V_all, axis=1)[:, order] if vectors else None
        U = np.concatenate(U_all, axis=1)[:, order] if vectors else None
        cutoff = np.inf
    elif mode == "iterative":
        op = op or build_dbar(model)
        m = n_lowest or min(N * N - 2, 4 * kd + 8)
        cov = covariant_laplacian(op)
        lam0, V = eigensolve(laplacian_q(op, 0), "lowest", m, vectors=True)
        lam1, U = eigensolve(laplacian_q(op, 1), "lowest", m, vectors=True)
        lam0, lam1 = np.maximum(lam0, 0.0), np.maximum(lam1, 0.0)
        # above the kernel, pair q=1 with q=0 through u = M v / sigma
        sig = np.sqrt(lam0[kd:])
        U = U.copy()
        U[:, kd:] = (op.M @ V[:, kd:]) / sig
        lam1 = np.concatenate([lam1[:kd], lam0[kd:]])
        g0, g1 = _shared_species(_species(cov, V), _species(cov, U), kd)
        cutoff = float(min(lam0[-1], lam1[-1]))
        s0 = _attach(0, lam0, V if vectors else None, g0, kd, cutoff, "iterative", meta)
        s1 = _attach(1, lam1, U if vectors else None, g1, kd, cutoff, "iterative", meta)
        return s0, s1
    else:
        raise ValueError(f"unknown lattice mode {mode!r}")
    return (_attach(0, lam, V, g0, kd, cutoff, "dense", meta),
            _attach(1, lam.copy(), U, g1, kd, cutoff, "dense", meta))


def _attach(q, lam, vecs, species, kd, cutoff, solver, meta):
    lo, hi = SPECIES_AMBIGUOUS
    amb = int(np.sum((species > lo) & (species < hi)))
    # On the square lattice Delta01 has the same spectrum as Delta00, so the
    # lowest k*d eigenvalues are pinned for both q.
    return SpectrumResult(q=q, eigenvalues=np.maximum(lam, 0.0), eigenvectors=vecs,
                          kernel_count=kd, cutoff=cutoff, species=species,
                          solver=solver, ambiguous=amb, **meta)


def spectra(model: LineBundleModel, solver: str = "dense", vectors: bool = True,
            h1: float | None = None, **kw):
    """Front door: (q=0, q=1) spectra for the requested solver."""
    if solver in ("dense", "iterative"):
        return lattice_spectra(model, solver, vectors=vectors, **kw)
    if solver == "reduced":
        from .chains import chain_spectra
        return chain_spectra(model, h1=h1, vectors=vectors, **kw)
    raise ValueError(f"unknown solver {solver!r}")


# ----------------------------------------------------------------- partition
def threshold_power(k: int, epsilon: float) -> float:
    if not (0.0 < epsilon < 1.0):
        raise ValueError("epsilon must lie in (0, 1)")
    return float(k) ** (1.0 - epsilon)


def partition_small(spec: SpectrumResult, epsilon: float = 0.25, rule: str = "power",
                    species_filter: bool = True) -> ThresholdPartition:
    """Split eigenvalues into pinned kernel, small window ]0, lambda_k[ and rest.

    rule "power": lambda_k = k^(1 - epsilon).  rule "relative-gap": the
    threshold sits at the geometric middle of the widest log-gap among the
    non-kernel eigenvalues below pi k d.
    """
    lam = spec.eigenvalues
    kc = spec.kernel_count
    if rule == "power":
        thr = threshold_power(spec.k, epsilon)
    elif rule == "relative-gap":
        thr = _relative_gap_threshold(lam[kc:], 0.5 * 2 * np.pi * spec.k * spec.d)
    else:
        raise ValueError(f"unknown threshold rule {rule!r}")
    if spec.cutoff < thr:
        raise SpectrumError(
            f"spectrum only complete below {spec.cutoff:.4g} < threshold {thr:.4g}; "
            "request more eigenvalues")
    idx = np.arange(lam.size)
    window = (idx >= kc) & (lam < thr)
    excluded = 0
    if species_filter and spec.species is not None:
        doubler = spec.species >= SPECIES_CUT
        excluded = int(np.sum(window & doubler))
        window &= ~doubler
    small = idx[window]
    rest = idx[(idx >= kc) & ~window]
    if small.size and np.any(lam[small] <= 0):
        raise SpectrumError("non-positive eigenvalue inside the small window")
    desc = f"{rule}:eps={epsilon}" if rule == "power" else rule
    return ThresholdPartition(kc, small, rest, thr, desc, excluded)


def _relative_gap_threshold(lam: np.ndarray, upper: float) -> float:
    vals = np.sort(lam[(lam > 0) & (lam < upper)])
    pts = np.concatenate([vals, [upper]])
    if pts.size == 1:
        return upper
    gaps = np.diff(np.log(pts))
    i = int(np.argmax(gaps))
    return float(np.sqrt(pts[i] * pts[i + 1]))


def logsum_small(part: ThresholdPartition, spec: SpectrumResult) -> float:
    if part.small.size == 0:
        return 0.0
    lam = spec.eigenvalues[part.small]
    if np.any(lam <= 0):
        raise SpectrumError("non-positive eigenvalue inside the small window")
    return float(np.sum(np.log(lam)))


def log_of_sum_small(part: ThresholdPartition, spec: SpectrumResult) -> float:
    """log of the sum of small eigenvalues (the alternative reading); -inf if empty."""
    if part.small.size == 0:
        return float("-inf")
    return float(np.log(np.sum(spec.eigenvalues[part.small])))


# ----------------------------------------------------------------- densities
def one_point_density(spec: SpectrumResult, indices) -> np.ndarray:
    """rho(site) = sum_i |psi_i(site)|^2 / h^2 as an (N, N) array."""
    idx = np.asarray(indices, dtype=int)
    N = spec.N
    if spec.chain_vectors is not None:
        from .chains import chain_density_rows
        rows = chain_density_rows(spec, idx)
        return np.broadcast_to(rows[None, :], (N, N)).copy()
    if spec.eigenvectors is None:
        raise SpectrumError("eigenvectors were not computed")
    V = spec.eigenvectors[:, idx]
    rho = np.sum(np.abs(V) ** 2, axis=1) * N * N
    return rho.reshape(N, N)


def density_field(spec: SpectrumResult, indices, grid) -> ScalarField:
    return ScalarField(grid, one_point_density(spec, indices))


def heat_trace(spec: SpectrumResult, t: float) -> float:
    """Sum of exp(-t nu) over positive (non-kernel) eigenvalues."""
    if t <= 0:
        raise ValueError("t must be positive")
    if not spec.complete:
        raise SpectrumError("heat trace needs the complete spectrum")
    lam = spec.eigenvalues[spec.kernel_count:]
    return float(np.sum(np.exp(-t * lam)))


def spectrum_rows(spec: SpectrumResult):
    """CSV rows (k, d, N, profile, q, index, eigenvalue)."""
    for i, lam in enumerate(spec.eigenvalues):
        yield (spec.k, spec.d, spec.N, spec.profile, spec.q, i, repr(float(lam)))


def with_profile(spec: SpectrumResult, profile: str) -> SpectrumResult:
    return replace(spec, profile=profile)
