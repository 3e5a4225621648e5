import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given, strategies as st

from tunnellab.bundle import LineBundleModel, build_dbar, flat_model, laplacian_q
from tunnellab.grid import ScalarField, TorusGrid
from tunnellab.profiles import cos_xy, cos_y
from tunnellab.spectrum import (SpectrumError, SpectrumResult, eigensolve, heat_trace,
                                lattice_spectra, log_of_sum_small, logsum_small,
                                one_point_density, partition_small, spectra, spectrum_rows,
                                threshold_power, with_profile)


def random_model(seed, N=8, k=2):
    rng = np.random.default_rng(seed)
    g = TorusGrid(N)
    return LineBundleModel(g, k, 1, ScalarField(g, 0.3 * rng.standard_normal((N, N))))


@given(st.integers(0, 10_000), st.integers(6, 10), st.integers(1, 3))
def test_pairing_of_separate_eigensolves(seed, N, k):
    op = build_dbar(random_model(seed, N, k))
    a = sla.eigvalsh(laplacian_q(op, 0).toarray())
    b = sla.eigvalsh(laplacian_q(op, 1).toarray())
    # a backward-stable eigensolver resolves 1e-10 relative only above ~eps/1e-10 * ||H||
    pos = a > 1e-5 * a[-1]
    np.testing.assert_allclose(a[pos], b[pos], rtol=1e-10, atol=0)


def test_bloch_dense_matches_full_svd():
    g = TorusGrid(12)
    m = LineBundleModel(g, 3, 1, cos_y(g, 0.8))
    s0, s1 = lattice_spectra(m, "dense")
    full = np.sort(sla.svdvals(build_dbar(m).M.toarray()) ** 2)
    np.testing.assert_allclose(s0.eigenvalues, full, atol=1e-9)
    np.testing.assert_array_equal(s0.eigenvalues, s1.eigenvalues)
    V = s0.eigenvectors
    np.testing.assert_allclose(V.conj().T @ V, np.eye(144), atol=1e-10)


def test_iterative_agrees_with_dense():
    g = TorusGrid(16)
    m = LineBundleModel(g, 2, 1, cos_xy(g, 0.5))
    d0, d1 = lattice_spectra(m, "dense", vectors=False)
    i0, i1 = lattice_spectra(m, "iterative", n_lowest=12)
    np.testing.assert_allclose(i0.eigenvalues, d0.eigenvalues[:12], rtol=1e-8, atol=1e-10)
    np.testing.assert_allclose(i1.eigenvalues, d1.eigenvalues[:12], rtol=1e-8, atol=1e-10)
    assert not i0.complete and d0.complete
    assert i0.cutoff == pytest.approx(min(i0.eigenvalues[-1], i1.eigenvalues[-1]))


def test_eigensolve_argument_checks():
    H = laplacian_q(build_dbar(flat_model(8, 1)), 0)
    with pytest.raises(ValueError):
        eigensolve(H, "lowest", m=None)
    with pytest.raises(ValueError):
        eigensolve(H, "bogus")
    w, V = eigensolve(H, "full", vectors=True)
    assert V.shape == (64, 64) and np.all(np.diff(w) >= -1e-12)


def test_species_of_flat_kernel_is_physical():
    s0, s1 = lattice_spectra(flat_model(24, 2))
    assert np.all(s0.species[:2] < 0.1)
    # the cokernel of M lives at the opposite-chirality doubler
    assert np.all(s1.species[:2] > 0.9)
    np.testing.assert_array_equal(s0.species[2:], s1.species[2:])
    assert np.all((s0.species >= -1e-12) & (s0.species <= 2 + 1e-12))


def test_threshold_power():
    assert threshold_power(16, 0.25) == pytest.approx(8.0)
    with pytest.raises(ValueError):
        threshold_power(16, 1.0)


@given(st.floats(0.05, 0.95), st.floats(0.05, 0.95))
def test_partition_monotone_in_epsilon(e1, e2):
    lo, hi = sorted((e1, e2))
    spec = _cos_spec()
    a = partition_small(spec, lo)
    b = partition_small(spec, hi)
    assert set(b.small) <= set(a.small)
    assert b.threshold <= a.threshold


_CACHE = {}


def _cos_spec():
    if "s" not in _CACHE:
        g = TorusGrid(24)
        _CACHE["s"] = lattice_spectra(LineBundleModel(g, 4, 1, cos_y(g)), "dense")[1]
    return _CACHE["s"]


def test_partition_structure():
    spec = _cos_spec()
    p = partition_small(spec, 0.25)
    assert p.kernel_count == 4
    allidx = np.concatenate([np.arange(4), p.small, p.rest])
    assert allidx.size == spec.eigenvalues.size
    assert np.sum(spec.species[p.rest] >= 0.5) >= p.excluded_doublers
    assert np.all(spec.eigenvalues[p.small] < p.threshold)
    assert np.all(spec.species[p.small] < 0.5)
    q = partition_small(spec, 0.25, species_filter=False)
    assert q.small.size == p.small.size + p.excluded_doublers
    r = partition_small(spec, 0.25, rule="relative-gap")
    assert r.rule == "relative-gap" and r.threshold > 0
    with pytest.raises(ValueError):
        partition_small(spec, 0.25, rule="nope")


def test_incomplete_spectrum_is_refused():
    spec = SpectrumResult(q=1, eigenvalues=np.array([0.0, 0.1, 0.2]), k=16, d=1, N=8,
                          kernel_count=1, cutoff=1.0)
    with pytest.raises(SpectrumError):
        partition_small(spec, 0.25)
    with pytest.raises(SpectrumError):
        heat_trace(spec, 1.0)


def test_logsums():
    spec = SpectrumResult(q=1, eigenvalues=np.array([0.0, 1e-3, 1e-2, 50.0]), k=16, d=1, N=8,
                          kernel_count=1)
    p = partition_small(spec, 0.25)
    assert list(p.small) == [1, 2]
    assert logsum_small(p, spec) == pytest.approx(np.log(1e-5))
    assert log_of_sum_small(p, spec) == pytest.approx(np.log(1.1e-2))
    empty = partition_small(SpectrumResult(q=1, eigenvalues=np.array([0.0, 50.0]), k=16, d=1,
                                           N=8, kernel_count=1), 0.25)
    assert logsum_small(empty, spec) == 0.0
    assert log_of_sum_small(empty, spec) == -np.inf


def test_heat_trace_properties():
    g = TorusGrid(12)
    s0, s1 = lattice_spectra(LineBundleModel(g, 2, 1, cos_y(g, 0.5)), vectors=False)
    ts = [0.01, 0.1, 1.0]
    h = [heat_trace(s1, t) for t in ts]
    assert h[0] > h[1] > h[2] > 0
    assert heat_trace(s0, 0.1) == pytest.approx(heat_trace(s1, 0.1), rel=1e-12)
    with pytest.raises(ValueError):
        heat_trace(s1, 0.0)


def test_density_integrates_to_count():
    spec = _cos_spec()
    idx = np.arange(4, 10)
    rho = one_point_density(spec, idx)
    assert rho.shape == (24, 24)
    assert np.sum(rho) / 24 ** 2 == pytest.approx(6.0, rel=1e-10)


def test_density_needs_vectors():
    g = TorusGrid(8)
    _, s1 = lattice_spectra(LineBundleModel(g, 1, 1, cos_y(g, 0.2)), vectors=False)
    with pytest.raises(SpectrumError):
        one_point_density(s1, [1])


def test_rows_and_profile():
    g = TorusGrid(8)
    _, s1 = lattice_spectra(LineBundleModel(g, 1, 1, cos_y(g, 0.2), "cos_y"), vectors=False)
    rows = list(spectrum_rows(with_profile(s1, "renamed")))
    assert len(rows) == 64 and rows[0][3] == "renamed" and rows[5][5] == 5


def test_unknown_solver():
    with pytest.raises(ValueError):
        spectra(flat_model(8, 1), "magic")
