"""Problem data: Lagrangian parameters, potentials, obstacles, boundary data.

The Lagrangian is ``L(x, v) = |v|^2 / (2 beta) + Q(x, t)``, so the Hamiltonian
is ``H(x, p) = beta |p|^2 / 2 - Q(x, t)``. ``Q`` is stored per time interval,
shape ``(n_t, n_x1, n_x2)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from nlmfg.exceptions import ConfigurationError
from nlmfg.grid import Grid, integrate
from nlmfg.kernels import FeatureBasis


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    grid: Grid
    rho0: np.ndarray
    g: np.ndarray
    Q: np.ndarray
    basis: FeatureBasis
    beta: float = 1.0
    time_scale: float = 1.0
    name: str = "custom"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        grid = self.grid
        if self.rho0.shape != grid.shape or self.g.shape != grid.shape:
            raise ConfigurationError("rho0 and g must be cell fields on the grid")
        if self.Q.shape != (grid.n_t,) + grid.shape:
            raise ConfigurationError(f"Q must have shape {(grid.n_t,) + grid.shape}, got {self.Q.shape}")
        if self.basis.grid != grid:
            raise ConfigurationError("basis was built on a different grid")
        if not self.beta > 0:
            raise ConfigurationError(f"kinetic coefficient beta must be positive, got {self.beta}")
        if np.any(self.rho0 < 0):
            raise ConfigurationError("initial density must be nonnegative")
        if abs(integrate(self.rho0, grid) - 1.0) > 1e-12:
            raise ConfigurationError("initial density must have unit mass")
        if not (np.all(np.isfinite(self.Q)) and np.all(np.isfinite(self.g))):
            raise ConfigurationError("Q and g must be finite")


def normalize_density(rho: np.ndarray, grid: Grid) -> np.ndarray:
    mass = integrate(rho, grid)
    if not mass > 0:
        raise ConfigurationError("density has zero total mass")
    return rho / mass


def gaussian_density(c1: float, c2: float, sigma: float, grid: Grid) -> np.ndarray:
    """Isotropic Gaussian bump sampled at cell centers, renormalized to unit discrete mass."""
    if not sigma > 0:
        raise ConfigurationError(f"sigma must be positive, got {sigma}")
    x1, x2 = grid.mesh()
    return normalize_density(np.exp(-((x1 - c1) ** 2 + (x2 - c2) ** 2) / (2.0 * sigma**2)), grid)


def gaussian_mixture(centers: Sequence[tuple[float, float]], sigma: float, grid: Grid,
                     weights: Sequence[float] | None = None) -> np.ndarray:
    """Weighted sum of unit-mass Gaussian bumps, renormalized as the last step."""
    if weights is None:
        weights = [1.0 / len(centers)] * len(centers)
    rho = sum(w * gaussian_density(c1, c2, sigma, grid) for w, (c1, c2) in zip(weights, centers))
    return normalize_density(rho, grid)


def uniform_density(grid: Grid) -> np.ndarray:
    return np.full(grid.shape, 1.0 / grid.area)


def confinement_cost(center: tuple[float, float], coefficient: float, power: int, grid: Grid) -> np.ndarray:
    """``coefficient * max(|x1 - c1|, |x2 - c2|) ** power``."""
    if coefficient < 0:
        raise ConfigurationError("confinement coefficient must be nonnegative")
    if power <= 0 or power % 2:
        raise ConfigurationError(f"confinement power must be even and positive, got {power}")
    x1, x2 = grid.mesh()
    return coefficient * np.maximum(np.abs(x1 - center[0]), np.abs(x2 - center[1])) ** power


@dataclass(frozen=True)
class Rectangle:
    """Axis-aligned obstacle ``[x1_lo, x1_hi] x [x2_lo, x2_hi]`` moving with a constant velocity.

    ``velocity`` is in domain units per unit time; on a grid the per-interval
    offset is ``velocity * dt``.
    """

    x1_lo: float
    x1_hi: float
    x2_lo: float
    x2_hi: float
    velocity: tuple[float, float] = (0.0, 0.0)

    def to_list(self) -> list[float]:
        return [self.x1_lo, self.x1_hi, self.x2_lo, self.x2_hi, *self.velocity]

    @classmethod
    def from_list(cls, values: Sequence[float]) -> "Rectangle":
        values = [float(v) for v in values]
        if len(values) == 4:
            return cls(*values)
        if len(values) == 6:
            return cls(*values[:4], velocity=(values[4], values[5]))
        raise ConfigurationError(f"rectangle needs 4 or 6 numbers, got {values}")


def rectangle_mask(rect: Rectangle, grid: Grid, offset: tuple[float, float] = (0.0, 0.0)) -> np.ndarray:
    """Cells whose center lies in the (shifted) rectangle; parts leaving the domain are dropped."""
    x1, x2 = grid.mesh()
    return ((x1 >= rect.x1_lo + offset[0]) & (x1 <= rect.x1_hi + offset[0])
            & (x2 >= rect.x2_lo + offset[1]) & (x2 <= rect.x2_hi + offset[1]))


def obstacle_cost(rects: Sequence[Rectangle], height: float, grid: Grid) -> np.ndarray:
    """Space-time cost equal to ``height`` inside any obstacle during interval ``l``, else 0.

    A moving rectangle is shifted by ``l * velocity * dt`` at interval ``l``.
    """
    out = np.zeros((grid.n_t,) + grid.shape)
    for rect in rects:
        if (rect.x1_lo > rect.x1_hi or rect.x2_lo > rect.x2_hi
                or rect.x1_hi < grid.x1_min or rect.x1_lo > grid.x1_max
                or rect.x2_hi < grid.x2_min or rect.x2_lo > grid.x2_max):
            raise ConfigurationError(f"rectangle {rect} is empty or outside the domain")
        for level in range(grid.n_t):
            shift = (level * rect.velocity[0] * grid.dt, level * rect.velocity[1] * grid.dt)
            out[level][rectangle_mask(rect, grid, shift)] = height
    return out


TERMINAL_PRESETS = ("spread", "gaussian_repulsion", "subregion", "zero")


def terminal_cost_preset(name: str, grid: Grid) -> np.ndarray:
    x1, x2 = grid.mesh()
    if name == "spread":
        return 2.0 * np.exp(-10.0 * (x1 - 0.5) ** 2 - (x2 - 0.1) ** 2) * ((x2 - 0.1) ** 2 - 1.0)
    if name == "gaussian_repulsion":
        return 2.0 * np.exp(-5.0 * x1**2 - 0.25 * (x2 - 0.9) ** 2) * ((x2 - 0.9) ** 2 - 1.0) + x1**2
    if name == "subregion":
        return -4.0 * np.exp(-5.0 * x1**2 - 2.5 * (x2 - 0.5) ** 2)
    if name == "zero":
        return np.zeros(grid.shape)
    raise ConfigurationError(f"unknown terminal cost preset {name!r}; expected one of {TERMINAL_PRESETS}")


def turnpike_potential(grid: Grid) -> np.ndarray:
    x1, x2 = grid.mesh()
    return -np.sin(2 * np.pi * x2) - np.sin(2 * np.pi * x1) - np.cos(4 * np.pi * x1)


def static_in_time(field2d: np.ndarray, grid: Grid) -> np.ndarray:
    return np.broadcast_to(field2d, (grid.n_t,) + grid.shape).copy()


def turnpike_rescale(spec: ProblemSpec, T: float) -> ProblemSpec:
    """Map a horizon-``T`` problem to unit time.

    ``T * H`` with ``H = beta |p|^2/2 - Q`` is the Hamiltonian of the Lagrangian
    ``|v|^2 / (2 T beta) + T Q``; the interaction ``T K`` keeps the Gram matrix
    and scales every feature by ``sqrt(T)``.
    """
    if T < 1:
        raise ConfigurationError(f"time scale must be >= 1, got {T}")
    if not spec.grid.periodic:
        raise ConfigurationError("turnpike rescaling is defined on the periodic domain")
    if T == 1:
        return spec
    return replace(
        spec,
        beta=spec.beta * T,
        Q=spec.Q * T,
        basis=spec.basis.scaled(float(np.sqrt(T))),
        time_scale=spec.time_scale * T,
    )
