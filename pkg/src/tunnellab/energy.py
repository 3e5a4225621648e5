"""Mixed Monge-Ampere energy for n = 1 and the tunneling target."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .envelope import EnvelopeResult
from .grid import ScalarField, _same_grid, curvature_density, dirichlet_norm, laplacian5_array


@dataclass(frozen=True, eq=False)
class WeightPath:
    """f_t = base + t * direction."""

    base: ScalarField
    direction: ScalarField

    def __post_init__(self):
        _same_grid(self.base, self.direction)

    def at(self, t: float) -> ScalarField:
        return self.base.with_values(self.base.values + t * self.direction.values)


def mixed_energy(f: ScalarField, g: ScalarField, d: int = 1) -> float:
    """E(f, g) = 1/2 h^2 sum (f - g)(2d + (lap f + lap g)/(4 pi))."""
    _same_grid(f, g)
    h = f.grid.h
    lap = laplacian5_array(f.values + g.values, h)
    return float(0.5 * h * h * np.sum((f.values - g.values) * (2 * d + lap / (4 * np.pi))))


def energy_derivative_check(path: WeightPath, t: float, dt: float, d: int = 1):
    """(central difference of t -> E(f_t, f_0), h^2 sum beta(f_t) v)."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    f0 = path.base
    num = (mixed_energy(path.at(t + dt), f0, d) - mixed_energy(path.at(t - dt), f0, d)) / (2 * dt)
    beta = curvature_density(path.at(t), d).values
    h = f0.grid.h
    pred = float(h * h * np.sum(beta * path.direction.values))
    return float(num), pred


def tunneling_target(f: ScalarField, envelope: EnvelopeResult) -> float:
    """R = 1/2 dirichlet_norm(f - Pf); the predicted rate is -R."""
    if not envelope.converged:
        raise ValueError("envelope did not converge")
    return 0.5 * dirichlet_norm(f - envelope.envelope)
