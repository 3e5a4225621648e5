"""k-sweep orchestration and persistence (CSV rows plus a JSON manifest)."""

from __future__ import annotations

import csv
import json
import os
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from . import __version__
from .bundle import LineBundleModel, flat_model, reference_kernel_basis
from .config import RunConfig
from .energy import mixed_energy, tunneling_target
from .envelope import project_envelope
from .fitting import fit_rate
from .grid import TorusGrid, curvature_density, zeros
from .profiles import make_profile, morse_constant
from .spectrum import (SpectrumError, log_of_sum_small, logsum_small, one_point_density,
                       partition_small, spectra, spectrum_rows)
from .torsion import gram_log_det, quillen_value

RESULT_HEADER = ("k", "d", "N", "profile", "solver", "quantity", "value", "status",
                 "epsilon", "h1", "envelope_tol", "version")
SPECTRUM_HEADER = ("k", "d", "N", "profile", "solver", "q", "index", "eigenvalue",
                   "epsilon", "h1", "envelope_tol", "version")


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _meta(cfg: RunConfig):
    return (_fmt(cfg.epsilon), _fmt(cfg.h1), _fmt(cfg.envelope_tol), __version__)


def _field(cfg: RunConfig, N: int):
    return make_profile(cfg.profile, TorusGrid(N), cfg.A, cfg.sigma, cfg.table)


def envelope_summary(cfg: RunConfig) -> dict:
    f = _field(cfg, cfg.envelope_N)
    env = project_envelope(f, cfg.d, cfg.envelope_tol, cfg.omega_relax)
    out = {"converged": env.converged, "iterations": env.iterations,
           "residual": env.residual, "N": cfg.envelope_N,
           "E_f_0": mixed_energy(f, zeros(f.grid), cfg.d)}
    out["R"] = tunneling_target(f, env) if env.converged else float("nan")
    return out


def sweep_one(cfg: RunConfig, k: int):
    """All per-k quantities; returns (result rows, spectrum rows)."""
    N = cfg.grid_size(k)
    base = (k, cfg.d, N, cfg.profile, cfg.solver)
    rows, srows = [], []

    def put(name, value, status="ok"):
        rows.append(base + (name, _fmt(value), status) + _meta(cfg))

    with threadpool_limits(limits=cfg.threads):
        f = _field(cfg, N)
        model = LineBundleModel(TorusGrid(N), k, cfg.d, f, cfg.profile)
        s0, s1 = spectra(model, cfg.solver, vectors=True, h1=cfg.h1)
        p0 = partition_small(s0, cfg.epsilon)
        p1 = partition_small(s1, cfg.epsilon)
        ls1 = logsum_small(p1, s1)
        put("small_count_q0", p0.small.size)
        put("small_count_q1", p1.small.size)
        put("morse_ratio", p1.small.size / k)
        put("logsum_q0", logsum_small(p0, s0))
        put("logsum_q1", ls1)
        put("rate_sample", ls1 / k ** 2)
        lam = s1.eigenvalues[p1.small]
        put("scaled_rate_sample", float(np.sum(np.log(lam / k))) / k ** 2 if lam.size else 0.0)
        put("log_of_sum_small", log_of_sum_small(p1, s1))
        put("threshold", p1.threshold)
        put("doublers_excluded", p1.excluded_doublers)
        put("species_ambiguous", s1.ambiguous)
        for e in cfg.epsilon_alt:
            pe = partition_small(s1, e)
            put(f"rate_sample_eps{e}", logsum_small(pe, s1) / k ** 2)
        if p1.small.size:
            rho = one_point_density(s1, p1.small)
            bm = np.maximum(-curvature_density(f, cfg.d).values, 0.0)
            if bm.sum() > 0:
                put("density_l1_error", float(np.abs(rho / k - bm).sum() / bm.sum()))
        if cfg.solver == "reduced":
            qf, gld, tt, _ = quillen_value(model, cfg.epsilon, "reduced", h1=cfg.h1)
            q0 = quillen_value(model.with_f(zeros(model.grid)), cfg.epsilon, "reduced",
                               h1=cfg.h1)[0]
        else:
            basis, _ = reference_kernel_basis(flat_model(N, k, cfg.d))
            gld = gram_log_det(basis, model).log_det
            qf = -gld + ls1
            q0 = quillen_value(model.with_f(zeros(model.grid)), cfg.epsilon, cfg.solver,
                               basis=basis)[0]
        put("gram_log_det", gld)
        put("quillen_anomaly", qf - q0)
        put("quillen_rate_sample", (qf - q0) / k ** 2)
        srows.extend(spectrum_rows(s0))
        srows.extend(spectrum_rows(s1))
    srows = [tuple(_fmt(x) for x in r[:4]) + (cfg.solver,) + tuple(_fmt(x) for x in r[4:])
             + _meta(cfg) for r in srows]
    return rows, srows


def _safe_one(args):
    cfg, k = args
    try:
        return sweep_one(cfg, k)
    except (SpectrumError, ValueError, np.linalg.LinAlgError) as exc:
        N = cfg.grid_size(k)
        row = (k, cfg.d, N, cfg.profile, cfg.solver, "error",
               f"{type(exc).__name__}: {exc}".replace("\n", " "), "error") + _meta(cfg)
        return [row], []


def run_sweep(cfg: RunConfig):
    """Run the sweep; returns (result rows, spectrum rows, manifest dict)."""
    env = envelope_summary(cfg)
    jobs = [(cfg, k) for k in cfg.ks]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as ex:
            parts = list(ex.map(_safe_one, jobs))
    else:
        parts = [_safe_one(j) for j in jobs]
    rows = [r for p in parts for r in p[0]]
    srows = [r for p in parts for r in p[1]]

    def summary(name, value):
        rows.append(("all", cfg.d, "", cfg.profile, cfg.solver, name, _fmt(value), "ok")
                    + _meta(cfg))

    summary("target_R", env["R"])
    summary("target_minus_R", -env["R"])
    summary("E_f_0", env["E_f_0"])
    if cfg.profile == "cos_y":
        summary("morse_constant", morse_constant(cfg.A, cfg.d))
    for q, label in (("rate_sample", "rate"), ("scaled_rate_sample", "scaled_rate"),
                     ("quillen_rate_sample", "quillen_rate")):
        pts = [(int(r[0]), float(r[6])) for r in rows if r[5] == q and r[7] == "ok"]
        fit = fit_rate(pts)
        summary(f"{label}_fit_a", fit.a)
        summary(f"{label}_fit_b", fit.b)
        summary(f"{label}_fit_r2", fit.r2)
        if label == "rate":
            fit3 = fit_rate(pts, "a+b/k+c*log(k)/k")
            summary("rate_logfit_a", fit3.a)
    manifest = {
        "version": __version__,
        "config": cfg.as_dict(),
        "solver": cfg.solver,
        "threads": cfg.threads,
        "workers": cfg.workers,
        "tolerances": {"envelope_tol": cfg.envelope_tol, "omega_relax": cfg.omega_relax,
                       "epsilon": cfg.epsilon, "epsilon_alt": list(cfg.epsilon_alt),
                       "h1": cfg.h1, "lanczos_residual": 1e-9, "species_cut": 0.5},
        "envelope": env,
        "files": ["results.csv", "spectra.csv"],
    }
    return rows, srows, manifest


def write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def write_outputs(out_dir, rows, srows, manifest):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / "results.csv", RESULT_HEADER, rows)
    write_csv(out / "spectra.csv", SPECTRUM_HEADER, srows)
    with open(out / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True, default=_fmt)
        fh.write("\n")
    return out


def resolve_threads(cli_value: int | None) -> int:
    if cli_value is not None:
        return cli_value
    env = os.environ.get("TUNNELLAB_THREADS")
    return int(env) if env else 1
