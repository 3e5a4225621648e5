"""Least-squares extrapolation of k-sweeps."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

MODELS = {
    "a+b/k": lambda k: [np.ones_like(k), 1 / k],
    "a+b/k+c*log(k)/k": lambda k: [np.ones_like(k), 1 / k, np.log(k) / k],
}


@dataclass(frozen=True)
class RateFit:
    samples: tuple
    model: str
    a: float
    b: float
    r2: float
    residuals: tuple = field(default=())
    c: float = 0.0
    ok: bool = True
    note: str = ""


def fit_rate(samples, model: str = "a+b/k") -> RateFit:
    """Fit value = a + b/k (+ c log(k)/k) by least squares; a is the k -> oo limit."""
    if model not in MODELS:
        raise ValueError(f"unknown fit model {model!r}")
    pts = tuple((float(k), float(v)) for k, v in samples)
    ncoef = len(MODELS[model](np.ones(1)))
    if len(pts) < ncoef + 1:
        return RateFit(pts, model, np.nan, np.nan, np.nan, ok=False,
                       note="extrapolation refused: too few samples")
    k = np.array([p[0] for p in pts])
    v = np.array([p[1] for p in pts])
    X = np.column_stack(MODELS[model](k))
    if np.linalg.matrix_rank(X) < X.shape[1]:
        raise ValueError("degenerate design matrix (repeated k values?)")
    coef, *_ = np.linalg.lstsq(X, v, rcond=None)
    res = v - X @ coef
    ss_res = float(res @ res)
    ss_tot = float(np.sum((v - v.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    c = float(coef[2]) if coef.size > 2 else 0.0
    return RateFit(pts, model, float(coef[0]), float(coef[1]), r2, tuple(res.tolist()), c)


def fit_exponential(ks, values):
    """Fit log(value) = c0 + c1*k; returns (slope, intercept, r2)."""
    k = np.asarray(ks, dtype=float)
    y = np.log(np.asarray(values, dtype=float))
    A = np.column_stack([np.ones_like(k), k])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    res = y - A @ coef
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - float(res @ res) / ss_tot
    return float(coef[1]), float(coef[0]), r2
