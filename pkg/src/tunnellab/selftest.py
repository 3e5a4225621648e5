"""Fast trivial-tier invariants, run by `tunnellab selftest`."""

from __future__ import annotations

import numpy as np
import scipy.linalg as sla


def _checks():
    from .bundle import LineBundleModel, build_dbar, laplacian_q, plaquette_phases
    from .config import ConfigError, parse_config
    from .energy import mixed_energy
    from .envelope import project_envelope
    from .fitting import fit_rate
    from .grid import (TorusGrid, ScalarField, curvature_density, dirichlet_norm, integrate,
                       laplacian5, zeros)

    rng = np.random.default_rng(0)
    g = TorusGrid(12)
    u = ScalarField(g, rng.standard_normal((12, 12)))
    w = ScalarField(g, rng.standard_normal((12, 12)))
    z = ScalarField(g, rng.standard_normal((12, 12)))
    lap = laplacian5(u).values
    yield "laplacian sums to zero", abs(lap.sum()) <= 1e-10 * np.abs(lap).sum()
    yield "curvature mass = d", abs(integrate(curvature_density(u, 2)) - 2) <= 1e-12
    sbp = -g.h ** 2 * np.sum(u.values * lap) / (4 * np.pi)
    yield "summation by parts", abs(sbp - dirichlet_norm(u)) <= 1e-12 * dirichlet_norm(u)
    e = mixed_energy(u, w) + mixed_energy(w, z) + mixed_energy(z, u)
    yield "energy cocycle", abs(e) <= 1e-12
    yield "energy antisymmetry", abs(mixed_energy(u, w) + mixed_energy(w, u)) <= 1e-12
    env = project_envelope(zeros(g), 1)
    yield "envelope of 0 is 0", env.converged and np.all(env.envelope.values == 0)
    m = LineBundleModel(g, 2, 1, u * 0.3)
    op = build_dbar(m)
    plaq = plaquette_phases(op.Ux, op.Uy)
    yield "uniform plaquette flux", np.allclose(plaq, np.exp(1j * m.plaquette_flux), atol=1e-13)
    H0, H1 = laplacian_q(op, 0).toarray(), laplacian_q(op, 1).toarray()
    yield "hermitian laplacians", np.max(np.abs(H0 - H0.conj().T)) == 0
    a, b = sla.eigvalsh(H0), sla.eigvalsh(H1)
    pos = a > 1e-5 * a[-1]
    yield "pairing", np.allclose(a[pos], b[pos], rtol=1e-10, atol=0)
    fit = fit_rate([(k, 2.0 - 3.0 / k) for k in (4, 8, 16)])
    yield "exact rate fit", abs(fit.a - 2) < 1e-10 and abs(fit.b + 3) < 1e-10
    try:
        parse_config("[model]\nfoo = 1\n")
        yield "unknown key rejected", False
    except ConfigError:
        yield "unknown key rejected", True


def run_selftest() -> list[str]:
    return [name for name, ok in _checks() if not ok]
