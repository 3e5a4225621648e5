"""Periodic unit-square torus, scalar fields and the 5-point calculus.

Curvature densities use the normalization in which ddc f has density
laplacian5(f) / (4 pi), so a degree-d reference weight has density d.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class TorusGrid:
    """N x N periodic grid on the unit square torus, spacing h = 1/N.

    Site (j, l) sits at x = j*h, y = l*h. Arrays are indexed [j, l].
    """

    N: int

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 4:
            raise ValueError(f"grid needs an integer N >= 4, got {self.N}")

    @property
    def h(self) -> float:
        return 1.0 / self.N

    @property
    def size(self) -> int:
        return self.N * self.N

    def coords(self):
        """Return (X, Y) site coordinates, each of shape (N, N)."""
        t = np.arange(self.N) * self.h
        return np.meshgrid(t, t, indexing="ij")


@dataclass(frozen=True, eq=False)
class ScalarField:
    """Real field sampled on a TorusGrid; `values` has shape (N, N)."""

    grid: TorusGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.N, self.grid.N):
            v = v.reshape(self.grid.N, self.grid.N)
        if not np.all(np.isfinite(v)):
            raise ValueError("field has non-finite values")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def with_values(self, values) -> "ScalarField":
        return ScalarField(self.grid, values)

    def __add__(self, other):
        if isinstance(other, ScalarField):
            _same_grid(self, other)
            return self.with_values(self.values + other.values)
        return self.with_values(self.values + other)

    def __sub__(self, other):
        if isinstance(other, ScalarField):
            _same_grid(self, other)
            return self.with_values(self.values - other.values)
        return self.with_values(self.values - other)

    def __mul__(self, c):
        if isinstance(c, ScalarField):
            _same_grid(self, c)
            return self.with_values(self.values * c.values)
        return self.with_values(self.values * c)

    __rmul__ = __mul__

    def __neg__(self):
        return self.with_values(-self.values)

    def is_x_independent(self, tol: float = 0.0) -> bool:
        """True if the field depends on y only."""
        v = self.values
        return bool(np.max(np.abs(v - v[:1, :])) <= tol)


def _same_grid(a: ScalarField, b: ScalarField):
    if a.grid.N != b.grid.N:
        raise ValueError(f"grid mismatch: N={a.grid.N} vs N={b.grid.N}")


def zeros(grid: TorusGrid) -> ScalarField:
    return ScalarField(grid, np.zeros((grid.N, grid.N)))


def from_function(grid: TorusGrid, fun) -> ScalarField:
    """Sample fun(x, y) on the grid sites."""
    X, Y = grid.coords()
    return ScalarField(grid, np.broadcast_to(fun(X, Y), X.shape))


def laplacian5_array(u: np.ndarray, h: float) -> np.ndarray:
    return (np.roll(u, 1, 0) + np.roll(u, -1, 0) + np.roll(u, 1, 1)
            + np.roll(u, -1, 1) - 4.0 * u) / (h * h)


def laplacian5(u: ScalarField) -> ScalarField:
    """Periodic 5-point Laplacian."""
    return u.with_values(laplacian5_array(u.values, u.grid.h))


def stencil_factor(N: int) -> float:
    """c_N = (2 - 2cos(2 pi h)) / (2 pi h)^2, the 5-point symbol of the first mode."""
    h = 1.0 / N
    return (2.0 - 2.0 * np.cos(2 * np.pi * h)) / (2 * np.pi * h) ** 2


def curvature_density(f: ScalarField, d: int) -> ScalarField:
    """beta = d + laplacian5(f) / (4 pi)."""
    if d < 1:
        raise ValueError("degree d must be >= 1")
    return f.with_values(d + laplacian5_array(f.values, f.grid.h) / (4 * np.pi))


def dirichlet_norm(u: ScalarField) -> float:
    """(1/4pi) h^2 sum of squared forward differences over h^2."""
    v = u.values
    gx = np.roll(v, -1, 0) - v
    gy = np.roll(v, -1, 1) - v
    # h^2 * (g/h)^2 = g^2
    return float(np.sum(gx * gx + gy * gy) / (4 * np.pi))


def integrate(u: ScalarField) -> float:
    return float(u.grid.h ** 2 * np.sum(u.values))


def inner(u: ScalarField, v: ScalarField) -> float:
    """L2 pairing h^2 sum u v."""
    _same_grid(u, v)
    return float(u.grid.h ** 2 * np.sum(u.values * v.values))
