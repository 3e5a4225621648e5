"""Command line entry point: python -m tunnellab <subcommand> [flags]."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .config import SOLVERS, ConfigError, RunConfig, parse_config, validate
from .spectrum import SpectrumError

SUBCOMMANDS = ("envelope", "operator", "spectrum", "torsion", "quillen", "sweep", "selftest")


def _klist(s):
    try:
        return tuple(int(x) for x in s.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad k list {s!r}") from None


def build_parser():
    p = argparse.ArgumentParser(prog="tunnellab", description=__doc__)
    sub = p.add_subparsers(dest="cmd", required=True, metavar="{" + ",".join(SUBCOMMANDS) + "}")
    for name in SUBCOMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", type=Path)
        s.add_argument("--profile")
        s.add_argument("--A", type=float)
        s.add_argument("--d", type=int)
        s.add_argument("--k", type=_klist)
        s.add_argument("--N", type=int)
        s.add_argument("--epsilon", type=float)
        s.add_argument("--solver", choices=SOLVERS)
        s.add_argument("--out", type=Path)
        s.add_argument("--threads", type=int)
    return p


def make_config(args) -> RunConfig:
    from .sweep import resolve_threads
    cfg = parse_config(args.config.read_text()) if args.config else RunConfig()
    over = {}
    for flag, name in (("profile", "profile"), ("A", "A"), ("d", "d"), ("k", "ks"),
                       ("N", "N"), ("epsilon", "epsilon"), ("solver", "solver")):
        v = getattr(args, flag)
        if v is not None:
            over[name] = v
    if args.out is not None:
        over["out"] = str(args.out)
    over["threads"] = resolve_threads(args.threads if args.threads is not None
                                      else (cfg.threads if args.config else None))
    return validate(replace(cfg, **over))


def _out_dir(cfg):
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_envelope(cfg, args):
    from .energy import tunneling_target
    from .envelope import orthogonality_residual, project_envelope
    from .grid import TorusGrid
    from .profiles import make_profile
    N = args.N or cfg.envelope_N
    f = make_profile(cfg.profile, TorusGrid(N), cfg.A, cfg.sigma, cfg.table)
    env = project_envelope(f, cfg.d, cfg.envelope_tol, cfg.omega_relax)
    if not env.converged:
        raise SpectrumError(f"envelope did not converge (residual {env.residual:.3e})")
    R = tunneling_target(f, env)
    out = _out_dir(cfg)
    np.savetxt(out / "envelope.csv", env.envelope.values, delimiter=",", fmt="%.17g")
    print(f"N={N} iterations={env.iterations} residual={env.residual:.3e} "
          f"orthogonality={orthogonality_residual(f, env, cfg.d):.3e}")
    print(f"R={R!r}")


def _model(cfg, k):
    from .bundle import LineBundleModel
    from .grid import TorusGrid
    from .profiles import make_profile
    N = cfg.grid_size(k)
    g = TorusGrid(N)
    return LineBundleModel(g, k, cfg.d, make_profile(cfg.profile, g, cfg.A, cfg.sigma, cfg.table),
                           cfg.profile)


def cmd_operator(cfg, args):
    from .bundle import build_dbar, flat_model, plaquette_phases, reference_kernel_basis
    for k in cfg.ks:
        m = _model(cfg, k)
        op = build_dbar(m)
        plaq = np.max(np.abs(plaquette_phases(op.Ux, op.Uy) - np.exp(1j * m.plaquette_flux)))
        _, lam = reference_kernel_basis(flat_model(m.grid.N, k, cfg.d))
        kd = m.flux
        print(f"k={k} N={m.grid.N} nnz={op.M.nnz} plaquette_err={plaq:.2e} "
              f"kernel_top={lam[kd - 1]:.3e} first_level={lam[kd]:.6g} "
              f"level/(2 pi k d)={lam[kd] / (2 * np.pi * kd):.5f}")


def cmd_spectrum(cfg, args):
    from .spectrum import logsum_small, partition_small, spectra, spectrum_rows
    from .sweep import SPECTRUM_HEADER, _fmt, _meta, write_csv
    rows = []
    for k in cfg.ks:
        s0, s1 = spectra(_model(cfg, k), cfg.solver, vectors=False, h1=cfg.h1)
        p1 = partition_small(s1, cfg.epsilon)
        print(f"k={k} N={s1.N} small={p1.small.size} logsum={logsum_small(p1, s1)!r} "
              f"threshold={p1.threshold:.6g} doublers_excluded={p1.excluded_doublers}")
        for r in list(spectrum_rows(s0)) + list(spectrum_rows(s1)):
            rows.append(tuple(_fmt(x) for x in r[:4]) + (cfg.solver,)
                        + tuple(_fmt(x) for x in r[4:]) + _meta(cfg))
    write_csv(_out_dir(cfg) / "spectra.csv", SPECTRUM_HEADER, rows)


def cmd_torsion(cfg, args):
    from .torsion import quillen_value
    for k in cfg.ks:
        q, gld, tt, n = quillen_value(_model(cfg, k), cfg.epsilon, cfg.solver, h1=cfg.h1)
        print(f"k={k} small={n} log_T={tt!r} log_T/k^2={tt / k ** 2:.6g} log_det_gram={gld!r}")


def cmd_quillen(cfg, args):
    from .fitting import fit_rate
    from .grid import zeros
    from .torsion import quillen_value
    pts = []
    for k in cfg.ks:
        m = _model(cfg, k)
        qf = quillen_value(m, cfg.epsilon, cfg.solver, h1=cfg.h1)[0]
        q0 = quillen_value(m.with_f(zeros(m.grid)), cfg.epsilon, cfg.solver, h1=cfg.h1)[0]
        pts.append((k, (qf - q0) / k ** 2))
        print(f"k={k} anomaly/k^2={pts[-1][1]!r}")
    fit = fit_rate(pts)
    print(f"fit a={fit.a!r} b={fit.b!r} r2={fit.r2:.4f}" if fit.ok else fit.note)


def cmd_sweep(cfg, args):
    from .sweep import run_sweep, write_outputs
    rows, srows, manifest = run_sweep(cfg)
    out = write_outputs(cfg.out, rows, srows, manifest)
    errors = [r for r in rows if r[7] != "ok"]
    for r in rows:
        if r[0] == "all":
            print(f"{r[5]} = {r[6]}")
    print(f"wrote {out}/results.csv ({len(rows)} rows, {len(errors)} errors)")


def cmd_selftest(cfg, args):
    from .selftest import run_selftest
    failures = run_selftest()
    if failures:
        for f in failures:
            print(f"FAIL {f}", file=sys.stderr)
        raise SpectrumError(f"{len(failures)} self-test checks failed")
    print("selftest ok")


COMMANDS = {"envelope": cmd_envelope, "operator": cmd_operator, "spectrum": cmd_spectrum,
            "torsion": cmd_torsion, "quillen": cmd_quillen, "sweep": cmd_sweep,
            "selftest": cmd_selftest}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 2
    try:
        cfg = make_config(args)
    except (ConfigError, OSError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    try:
        COMMANDS[args.cmd](cfg, args)
    except (ValueError, SpectrumError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
