"""Run configuration: a line-oriented `key = value` format with [section] headers.

Example::

    [profile]
    name = cos_y
    A = 1.0

    [model]
    d = 1
    k = 8, 12, 16
    epsilon = 0.25
    solver = reduced

Lists are comma separated (brackets optional); `#` starts a comment.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

from .profiles import PROFILES

SOLVERS = ("dense", "iterative", "reduced")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    profile: str = "cos_y"
    A: float = 1.0
    sigma: float = 0.12
    table: str | None = None
    d: int = 1
    ks: tuple = (8, 12, 16)
    N: int | None = None
    N_c: float = 12.0
    epsilon: float = 0.25
    epsilon_alt: tuple = ()
    solver: str = "dense"
    h1: float = 1.0 / 1024
    envelope_N: int = 128
    envelope_tol: float = 1e-10
    omega_relax: float = 1.8
    out: str = "runs/default"
    seed: int = 0
    threads: int = 1
    workers: int = 1

    def grid_size(self, k: int) -> int:
        if self.N is not None:
            return self.N
        return int(math.ceil(self.N_c * math.sqrt(k * self.d)))

    def as_dict(self) -> dict:
        out = asdict(self)
        out["ks"] = list(self.ks)
        out["epsilon_alt"] = list(self.epsilon_alt)
        out["N_per_k"] = {str(k): self.grid_size(k) for k in self.ks}
        return out


# key -> (section, field, converter)
def _ints(s):
    return tuple(int(x) for x in s.strip().strip("[]").split(",") if x.strip())


def _floats(s):
    return tuple(float(x) for x in s.strip().strip("[]").split(",") if x.strip())


SCHEMA = {
    "profile": {"name": ("profile", str), "A": ("A", float), "sigma": ("sigma", float),
                "table": ("table", str)},
    "model": {"d": ("d", int), "k": ("ks", _ints), "N": ("N", int), "N_c": ("N_c", float),
              "epsilon": ("epsilon", float), "epsilon_alt": ("epsilon_alt", _floats),
              "solver": ("solver", str), "h1": ("h1", float)},
    "envelope": {"N": ("envelope_N", int), "tol": ("envelope_tol", float),
                 "omega_relax": ("omega_relax", float)},
    "run": {"out": ("out", str), "seed": ("seed", int), "threads": ("threads", int),
            "workers": ("workers", int)},
}


def parse_config(text: str) -> RunConfig:
    values = {}
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError(f"line {lineno}: malformed section header {raw.strip()!r}")
            section = line[1:-1].strip()
            if section not in SCHEMA:
                raise ConfigError(f"line {lineno}: unknown section [{section}]")
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        if section is None:
            raise ConfigError(f"line {lineno}: key outside any [section]")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in SCHEMA[section]:
            raise ConfigError(f"line {lineno}: unknown key {key!r} in [{section}]")
        name, conv = SCHEMA[section][key]
        if name in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        try:
            values[name] = conv(val)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key!r}: {exc}") from None
    return validate(RunConfig(**values))


def validate(cfg: RunConfig) -> RunConfig:
    if cfg.profile not in PROFILES:
        raise ConfigError(f"unknown profile {cfg.profile!r}")
    if cfg.profile == "table" and not cfg.table:
        raise ConfigError("profile 'table' needs a table path")
    if cfg.d < 1:
        raise ConfigError("d must be a positive integer")
    if not cfg.ks:
        raise ConfigError("k list is empty")
    if any(k < 1 for k in cfg.ks):
        raise ConfigError("k values must be positive")
    if any(b <= a for a, b in zip(cfg.ks, cfg.ks[1:])):
        raise ConfigError(f"k list must be strictly increasing: {list(cfg.ks)}")
    for k in cfg.ks:
        N = cfg.grid_size(k)
        if N < 4 or N * N <= 2 * k * cfg.d:
            raise ConfigError(f"flux bound violated for (k={k}, N={N}): need N^2 > 2kd = {2 * k * cfg.d}")
    for e in (cfg.epsilon,) + tuple(cfg.epsilon_alt):
        if not 0 < e < 1:
            raise ConfigError(f"epsilon must lie in (0, 1), got {e}")
    if cfg.solver not in SOLVERS:
        raise ConfigError(f"unknown solver {cfg.solver!r}; choose from {', '.join(SOLVERS)}")
    if not 1 <= cfg.omega_relax < 2:
        raise ConfigError("omega_relax must lie in [1, 2)")
    if cfg.envelope_tol <= 0 or cfg.h1 <= 0:
        raise ConfigError("tolerances and h1 must be positive")
    if cfg.threads < 1 or cfg.workers < 1:
        raise ConfigError("threads and workers must be >= 1")
    return cfg
