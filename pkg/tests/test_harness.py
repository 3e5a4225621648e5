import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from tunnellab.cli import main
from tunnellab.config import ConfigError, RunConfig, parse_config
from tunnellab.fitting import fit_exponential, fit_rate
from tunnellab.sweep import RESULT_HEADER, run_sweep, write_outputs

MINIMAL = """
[profile]
name = cos_y
A = 1.0
[model]
d = 1
k = [8, 12, 16]
epsilon = 0.25
"""


def test_minimal_config_accepted():
    cfg = parse_config(MINIMAL)
    assert cfg.ks == (8, 12, 16) and cfg.A == 1.0 and cfg.epsilon == 0.25
    assert cfg.grid_size(8) == 34


def test_flux_bound_rejected_naming_pair():
    with pytest.raises(ConfigError, match=r"k=40, N=6"):
        parse_config("[model]\nk = 8, 40\nN = 6\n")


@pytest.mark.parametrize("text,where", [
    ("[model]\nfoo = 1\n", "line 2"),
    ("[nope]\n", "line 1"),
    ("[model]\nk = 8\nk = 12\n", "line 3"),
    ("k = 8\n", "line 1"),
    ("[model]\nk 8\n", "line 2"),
    ("[model]\nd = one\n", "line 2"),
    ("[model]\nk = 12, 8\n", "strictly increasing"),
    ("[model]\nsolver = magic\n", "solver"),
    ("[model]\nepsilon = 1.5\n", "epsilon"),
    ("[profile]\nname = table\n", "table"),
])
def test_config_errors(text, where):
    with pytest.raises(ConfigError, match=where):
        parse_config(text)


def test_comments_and_sections():
    cfg = parse_config("# run\n[run]\nout = x  # dir\nthreads = 2\n[envelope]\nN = 64\n")
    assert cfg.out == "x" and cfg.threads == 2 and cfg.envelope_N == 64


@given(st.floats(-10, 10), st.floats(-10, 10))
def test_fit_recovers_exact_model(a, b):
    fit = fit_rate([(k, a + b / k) for k in (8, 12, 16, 24)])
    assert fit.ok
    assert fit.a == pytest.approx(a, abs=1e-10) and fit.b == pytest.approx(b, abs=1e-9)


def test_fit_constant_data():
    fit = fit_rate([(k, 3.5) for k in (4, 8, 16)])
    assert fit.a == pytest.approx(3.5, abs=1e-12) and fit.b == pytest.approx(0, abs=1e-10)
    assert fit.r2 == 1.0


@given(st.floats(-5, 5), st.floats(-5, 5), st.floats(-20, 20))
def test_fit_with_quadratic_contamination(a, b, c):
    ks = (8, 12, 16, 24, 32)
    fit = fit_rate([(k, a + b / k + c / k ** 2) for k in ks])
    assert abs(fit.a - a) <= abs(c) * max(1 / k ** 2 for k in ks) + 1e-12


def test_fit_refusal_and_degenerate():
    fit = fit_rate([(8, 1.0), (16, 2.0)])
    assert not fit.ok and np.isnan(fit.a) and "refused" in fit.note
    with pytest.raises(ValueError):
        fit_rate([(8, 1.0), (8, 2.0), (8, 3.0)])
    with pytest.raises(ValueError):
        fit_rate([(8, 1.0)] * 3, model="a*k")


def test_fit_log_model():
    pts = [(k, 1.0 - 2.0 / k + 0.5 * np.log(k) / k) for k in (8, 12, 16, 24, 32)]
    fit = fit_rate(pts, "a+b/k+c*log(k)/k")
    assert fit.a == pytest.approx(1.0, abs=1e-10) and fit.c == pytest.approx(0.5, abs=1e-10)


def test_fit_exponential():
    ks = np.array([8, 16, 24, 32])
    slope, icpt, r2 = fit_exponential(ks, 3.0 * np.exp(-0.2 * ks))
    assert slope == pytest.approx(-0.2) and icpt == pytest.approx(np.log(3.0)) and r2 == 1.0


def small_cfg(tmp_path, **kw):
    base = dict(ks=(2, 3, 4), N_c=8.0, envelope_N=32, solver="dense", out=str(tmp_path))
    base.update(kw)
    return RunConfig(**base)


def test_admissible_sweep_has_empty_windows(tmp_path):
    rows, _, man = run_sweep(small_cfg(tmp_path, A=0.2))
    get = {(r[0], r[5]): r[6] for r in rows}
    for k in (2, 3, 4):
        assert get[(k, "small_count_q1")] == "0"
        assert float(get[(k, "rate_sample")]) == 0.0
    assert float(get[("all", "target_R")]) == 0.0
    assert man["tolerances"]["envelope_tol"] == 1e-10


def test_sweep_is_deterministic(tmp_path):
    cfg = small_cfg(tmp_path, ks=(2, 4))
    a = write_outputs(tmp_path / "a", *run_sweep(cfg))
    b = write_outputs(tmp_path / "b", *run_sweep(cfg))
    for name in ("results.csv", "spectra.csv", "manifest.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    header = (a / "results.csv").read_text().splitlines()[0].split(",")
    assert tuple(header) == RESULT_HEADER
    man = json.loads((a / "manifest.json").read_text())
    assert {"envelope_tol", "epsilon", "h1", "species_cut"} <= set(man["tolerances"])


def test_failing_k_is_isolated(tmp_path):
    # built directly (no validation): k = 100 violates the flux bound on N = 10
    cfg = small_cfg(tmp_path, ks=(2, 100), N=10)
    rows, _, _ = run_sweep(cfg)
    errs = [r for r in rows if r[7] == "error"]
    assert errs and errs[0][0] == 100
    assert any(r[0] == 2 and r[5] == "small_count_q1" for r in rows)


def test_cli_exit_codes(tmp_path, capsys):
    assert main(["selftest"]) == 0
    assert main(["bogus"]) == 2
    assert main(["sweep", "--k", "12,8"]) == 2
    assert main(["sweep", "--config", str(tmp_path / "missing.cfg")]) == 2
    # flux bound passes validation for N = 10, but the kernel basis at k = 40 is rejected
    assert main(["operator", "--k", "40", "--N", "10", "--out", str(tmp_path)]) == 1


def test_cli_envelope_writes_csv(tmp_path, capsys):
    assert main(["envelope", "--profile", "cos_y", "--A", "1", "--d", "1", "--N", "48",
                 "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    R = float(out.split("R=")[1])
    assert 0.17 < R < 0.19
    vals = np.loadtxt(tmp_path / "envelope.csv", delimiter=",")
    assert vals.shape == (48, 48)


def test_threads_env_fallback(monkeypatch):
    from tunnellab.sweep import resolve_threads
    monkeypatch.setenv("TUNNELLAB_THREADS", "3")
    assert resolve_threads(None) == 3
    assert resolve_threads(2) == 2
    monkeypatch.delenv("TUNNELLAB_THREADS")
    assert resolve_threads(None) == 1
