"""Registry of weight perturbations f on the torus."""

from __future__ import annotations

import numpy as np

from .grid import ScalarField, TorusGrid, from_function

PROFILES = ("cos_y", "cos_xy", "bump", "table", "flat")


def cos_y(grid: TorusGrid, A: float = 1.0) -> ScalarField:
    return from_function(grid, lambda x, y: A * np.cos(2 * np.pi * y))


def cos_xy(grid: TorusGrid, A: float = 1.0) -> ScalarField:
    return from_function(grid, lambda x, y: A * (np.cos(2 * np.pi * x) + np.cos(2 * np.pi * y)))


def bump(grid: TorusGrid, A: float = 1.0, sigma: float = 0.12,
         center=(0.5, 0.5)) -> ScalarField:
    """Periodic Gaussian well of depth A and width sigma."""
    X, Y = grid.coords()
    acc = np.zeros_like(X)
    for sx in (-1, 0, 1):
        for sy in (-1, 0, 1):
            dx = X - center[0] + sx
            dy = Y - center[1] + sy
            acc += np.exp(-(dx * dx + dy * dy) / (2 * sigma * sigma))
    return ScalarField(grid, -A * acc)


def table(grid: TorusGrid, path: str) -> ScalarField:
    """Values from a comma separated N x N file, rows indexed by j (x)."""
    vals = np.loadtxt(path, delimiter=",", ndmin=2)
    if vals.shape != (grid.N, grid.N):
        raise ValueError(f"table {path} has shape {vals.shape}, expected {(grid.N, grid.N)}")
    return ScalarField(grid, vals)


def make_profile(name: str, grid: TorusGrid, A: float = 1.0, sigma: float = 0.12,
                 path: str | None = None) -> ScalarField:
    if name == "cos_y":
        return cos_y(grid, A)
    if name == "cos_xy":
        return cos_xy(grid, A)
    if name == "bump":
        return bump(grid, A, sigma)
    if name == "table":
        if not path:
            raise ValueError("profile 'table' needs a file path")
        return table(grid, path)
    if name == "flat":
        return ScalarField(grid, np.zeros((grid.N, grid.N)))
    raise ValueError(f"unknown profile {name!r}; choose from {', '.join(PROFILES)}")


def morse_constant(A: float = 1.0, d: int = 1) -> float:
    """Integral of max(-beta, 0) for the continuum cos_y profile.

    beta = d - pi A cos(2 pi y) is negative where cos(2 pi y) > d/(pi A).
    """
    r = d / (np.pi * A)
    if r >= 1:
        return 0.0
    t0 = np.arccos(r)
    return float((np.pi * A * np.sin(t0) - d * t0) / np.pi)
