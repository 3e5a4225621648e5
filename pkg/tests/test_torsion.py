import numpy as np
import pytest
from hypothesis import given, strategies as st

from tunnellab.bundle import LineBundleModel, flat_model, reference_kernel_basis
from tunnellab.energy import WeightPath
from tunnellab.grid import ScalarField, TorusGrid, zeros
from tunnellab.profiles import cos_xy, cos_y
from tunnellab.spectrum import SpectrumError
from tunnellab.torsion import (_check_generic, chain_l_functional, gram_log_det, l_functional,
                               quasimode_bound, quillen_anomaly, quillen_value, smooth_cutoff,
                               torsion_derivative_check)

N, K = 16, 2
G = TorusGrid(N)
BASE = flat_model(N, K)
BASIS, _ = reference_kernel_basis(BASE)


def test_gram_is_identity_at_zero():
    rec = gram_log_det(BASIS, BASE)
    np.testing.assert_allclose(rec.gram, np.eye(K), atol=1e-12)
    assert abs(rec.log_det) < 1e-12


@given(st.floats(-2, 2))
def test_constant_shift_scales_gram(c):
    rec = gram_log_det(BASIS, BASE.with_f(zeros(G) + c))
    assert rec.log_det == pytest.approx(-K * c * K, abs=1e-10)


def test_basis_change_cancels_in_L(rng):
    A = rng.standard_normal((K, K)) + 1j * rng.standard_normal((K, K))
    f, g = cos_y(G, 0.4), cos_xy(G, 0.3)
    assert l_functional(f, g, BASE, BASIS @ A) == pytest.approx(
        l_functional(f, g, BASE, BASIS), abs=1e-10)


def test_L_cocycle():
    f, g, w = cos_y(G, 0.4), cos_xy(G, 0.3), zeros(G) + 0.1
    tot = (l_functional(f, g, BASE, BASIS) + l_functional(g, w, BASE, BASIS)
           + l_functional(w, f, BASE, BASIS))
    assert abs(tot) <= 1e-10


def test_chain_L_cocycle_and_shift():
    fy = lambda y: np.cos(2 * np.pi * np.asarray(y))
    gy = lambda y: 0.3 * np.sin(2 * np.pi * np.asarray(y))
    zy = lambda y: 0.0 * np.asarray(y)
    tot = (chain_l_functional(fy, gy, 8, 1) + chain_l_functional(gy, zy, 8, 1)
           + chain_l_functional(zy, fy, 8, 1))
    assert abs(tot) <= 1e-10
    shifted = lambda y: 0.0 * np.asarray(y) + 0.5
    assert chain_l_functional(shifted, zy, 8, 1) == pytest.approx(8 * 8 * 0.5, rel=1e-12)


def test_gram_dimension_check():
    with pytest.raises(ValueError):
        gram_log_det(BASIS[:, :1], BASE)


def test_quillen_value_decomposition():
    m = LineBundleModel(G, K, 1, cos_y(G, 0.8))
    q, gld, tt, n = quillen_value(m, 0.25, "dense", basis=BASIS)
    assert q == pytest.approx(-gld + tt)
    assert quillen_anomaly(m.f, m.f, K, 1) == 0.0


def test_reduced_quillen_of_flat_is_zero():
    q, gld, tt, n = quillen_value(flat_model(32, 8), 0.25, "reduced")
    assert q == 0.0 and n == 0


def test_generic_guard():
    lo = np.array([0.9, 5.0])
    mid = np.array([1.0, 5.0])
    hi = np.array([1.1, 5.0])
    with pytest.raises(SpectrumError):
        _check_generic((lo, mid, hi), 1.02, 0.01)
    _check_generic((lo, mid, hi), 3.0, 0.01)


def test_torsion_derivative_reduced_richardson():
    g = TorusGrid(32)
    path = WeightPath(zeros(g), cos_y(g))
    errs = []
    for dt in (1e-2, 5e-3):
        num, pred = torsion_derivative_check(path, 8, 1, 1.0, dt)
        errs.append(abs(num - pred))
    assert 3.5 <= errs[0] / errs[1] <= 4.5
    assert errs[1] < 1e-3 * abs(pred)


def test_torsion_derivative_dense_matches():
    g = TorusGrid(24)
    path = WeightPath(zeros(g), cos_y(g))
    num, pred = torsion_derivative_check(path, 6, 1, 1.0, 2e-3, solver="dense")
    assert num == pytest.approx(pred, rel=1e-4)


def test_torsion_derivative_rejects_dt():
    with pytest.raises(ValueError):
        torsion_derivative_check(WeightPath(zeros(G), cos_y(G)), 2, 1, 0.0, 0.0)


@given(st.floats(0.0, 0.6), st.floats(0.05, 0.2), st.floats(0.05, 0.2))
def test_smooth_cutoff_shape(r, radius, width):
    v = smooth_cutoff(np.array([r]), radius, width)[0]
    assert 0.0 <= v <= 1.0
    if r <= radius:
        assert v == 1.0
    if r >= radius + width:
        assert v == 0.0


def test_smooth_cutoff_monotone_and_flat_ends():
    r = np.linspace(0, 1, 2001)
    c = smooth_cutoff(r, 0.3, 0.2)
    assert np.all(np.diff(c) <= 0)
    dc = np.gradient(c, r)
    assert abs(dc[600]) < 1e-3 and abs(dc[1000]) < 1e-3


def test_quasimode_guards():
    g = TorusGrid(24)
    m = LineBundleModel(g, 4, 1, cos_y(g))
    with pytest.raises(ValueError):
        quasimode_bound(m, (0.0, 0.0), 0.05)          # beta < 0 at the well
    with pytest.raises(ValueError):
        quasimode_bound(m, (0.5, 0.5), 0.05, radius=0.3)   # support reaches beta <= 0
    with pytest.raises(ValueError):
        quasimode_bound(flat_model(24, 4), (0.5, 0.5), 0.2, radius=0.35)
    with pytest.raises(ValueError):
        quasimode_bound(flat_model(24, 4), (0.5, 0.5), 0.1, profile="other")


def test_quasimode_decays_with_k():
    vals = []
    for k in (4, 8):
        N = int(np.ceil(12 * np.sqrt(k)))
        vals.append(quasimode_bound(flat_model(N, k), (0.5, 0.5), 0.08, radius=0.3))
    assert vals[1] < 0.5 * vals[0]
    g = quasimode_bound(flat_model(24, 4), (0.5, 0.5), 0.08, radius=0.3, profile="gaussian")
    assert g > 0
