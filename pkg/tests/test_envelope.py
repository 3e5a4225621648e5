import numpy as np
import pytest
from hypothesis import given, strategies as st

from tunnellab.energy import mixed_energy, tunneling_target
from tunnellab.envelope import envelope_1d, orthogonality_residual, project_envelope
from tunnellab.grid import ScalarField, TorusGrid, curvature_density, dirichlet_norm, zeros
from tunnellab.profiles import cos_y

# 1-D PSOR reference on 8192 points for f = cos(2 pi y), d = 1.
R_1D_8192 = 0.1795197529707021


def tangent_parabola_envelope(y, d=1):
    """Exact envelope of cos(2 pi y) for the constraint g'' >= -4 pi d.

    Off contact g is the parabola c - 2 pi d y^2 around the maximum y = 0,
    tangent to f at y = +-b with 2 pi b = s and sin s = s / pi (d = 1).
    """
    from scipy.optimize import brentq
    s = brentq(lambda s: np.sin(s) - d * s / np.pi, 0.1, np.pi)
    b = s / (2 * np.pi)
    c = np.cos(s) + 2 * np.pi * d * b * b
    g = np.cos(2 * np.pi * y)
    r = (y + 0.5) % 1.0 - 0.5
    inside = np.abs(r) < b
    g[inside] = c - 2 * np.pi * d * r[inside] ** 2
    return g, b


def test_admissible_input_is_fixed_point():
    f = cos_y(TorusGrid(32), 0.2)
    env = project_envelope(f, 1)
    assert env.converged and env.iterations == 0
    np.testing.assert_array_equal(env.envelope.values, f.values)
    assert tunneling_target(f, env) == 0.0


def test_envelope_certificates_cos_y():
    f = cos_y(TorusGrid(48), 1.0)
    env = project_envelope(f, 1, tol=1e-10)
    assert env.converged
    u = env.envelope
    assert np.all(u.values <= f.values + 1e-12)
    assert curvature_density(u, 1).values.min() >= -1e-8
    assert orthogonality_residual(f, env) <= 1e-8
    assert env.contact.any() and not env.contact.all()


def test_energy_identity_on_envelope():
    f = cos_y(TorusGrid(48), 1.0)
    env = project_envelope(f, 1, tol=1e-11)
    R = tunneling_target(f, env)
    assert mixed_energy(env.envelope, f) == pytest.approx(R, rel=1e-6)
    assert R > 0


def test_envelope_1d_matches_tangent_parabola():
    n = 2048
    y = np.arange(n) / n
    g, sweeps = envelope_1d(np.cos(2 * np.pi * y))
    exact, b = tangent_parabola_envelope(y)
    assert b == pytest.approx(0.368242224, abs=1e-8)
    # first-order contact error of the discrete obstacle problem
    assert np.max(np.abs(g - exact)) < 2e-6


def test_envelope_1d_frozen_rate():
    n = 8192
    y = np.arange(n) / n
    f = np.cos(2 * np.pi * y)
    g, _ = envelope_1d(f)
    d = np.roll(f - g, -1) - (f - g)
    R = 0.5 * np.sum(d * d) * n / (4 * np.pi)
    assert R == pytest.approx(R_1D_8192, rel=1e-9)


def test_2d_envelope_of_y_profile_agrees_with_1d():
    N = 64
    f = cos_y(TorusGrid(N), 1.0)
    env = project_envelope(f, 1, tol=1e-11)
    g, _ = envelope_1d(f.values[0])
    np.testing.assert_allclose(env.envelope.values, np.broadcast_to(g, (N, N)), atol=1e-8)


@given(st.floats(-3, 3), st.floats(0.5, 2.0))
def test_envelope_shifts_and_is_below(c, A):
    f = cos_y(TorusGrid(16), A)
    e1 = project_envelope(f, 1, tol=1e-11)
    e2 = project_envelope(f + c, 1, tol=1e-11)
    np.testing.assert_allclose(e2.envelope.values, e1.envelope.values + c, atol=1e-8)
    assert np.all(e1.envelope.values <= f.values + 1e-12)


def test_envelope_monotone_in_f():
    g = TorusGrid(16)
    f = cos_y(g, 1.0)
    lo = project_envelope(f - 0.1 * (1 + np.sin(2 * np.pi * g.coords()[0])), 1, tol=1e-11)
    hi = project_envelope(f, 1, tol=1e-11)
    assert np.all(lo.envelope.values <= hi.envelope.values + 1e-9)


def test_bad_parameters():
    f = zeros(TorusGrid(8))
    with pytest.raises(ValueError):
        project_envelope(f, 1, omega_relax=2.0)
    with pytest.raises(ValueError):
        project_envelope(f, 1, tol=0)


def test_unconverged_is_reported():
    f = cos_y(TorusGrid(32), 1.0)
    env = project_envelope(f, 1, max_iter=10)
    assert not env.converged
    with pytest.raises(ValueError):
        tunneling_target(f, env)
