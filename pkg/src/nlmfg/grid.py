"""Space-time grid and staggered (MAC) finite-difference operators.

Array layout used throughout the package:

* cell fields have trailing shape ``(n_x1, n_x2)``, index ``[i, j]`` with ``i``
  along ``x1``;
* densities and value functions carry ``n_t + 1`` time levels on the leading
  axis, level 0 being ``t = 0``;
* fluxes carry ``n_t`` interval slots. ``m1[..., i, j]`` lives on the face
  ``(i + 1/2, j)`` and ``m2[..., i, j]`` on ``(i, j + 1/2)``. Under the no-flux
  condition the last face along each axis is the domain boundary and is held
  at zero; under periodic conditions it is the wrap-around face.

All operators act on the trailing two axes and broadcast over any leading ones.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from nlmfg.exceptions import ConfigurationError

BoundaryKind = Literal["noflux", "periodic"]
BOUNDARY_KINDS = ("noflux", "periodic")


@dataclass(frozen=True)
class Grid:
    x1_min: float
    x1_max: float
    x2_min: float
    x2_max: float
    n_x1: int
    n_x2: int
    n_t: int
    bc: BoundaryKind = "noflux"

    @property
    def dx1(self) -> float:
        return (self.x1_max - self.x1_min) / self.n_x1

    @property
    def dx2(self) -> float:
        return (self.x2_max - self.x2_min) / self.n_x2

    @property
    def dt(self) -> float:
        # final time is always rescaled to 1
        return 1.0 / self.n_t

    @property
    def cell_area(self) -> float:
        return self.dx1 * self.dx2

    @property
    def area(self) -> float:
        return (self.x1_max - self.x1_min) * (self.x2_max - self.x2_min)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_x1, self.n_x2)

    @property
    def periodic(self) -> bool:
        return self.bc == "periodic"

    @property
    def x1(self) -> np.ndarray:
        """Cell-center coordinates along ``x1``."""
        return self.x1_min + (np.arange(self.n_x1) + 0.5) * self.dx1

    @property
    def x2(self) -> np.ndarray:
        return self.x2_min + (np.arange(self.n_x2) + 0.5) * self.dx2

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """Cell-center coordinate arrays of shape ``(n_x1, n_x2)``."""
        return np.meshgrid(self.x1, self.x2, indexing="ij")

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_t + 1) * self.dt

    def level_of(self, t: float) -> int:
        """Nearest time level to ``t``."""
        if not 0.0 <= t <= 1.0:
            raise ConfigurationError(f"time {t} outside [0, 1]")
        return int(round(t * self.n_t))

    def cell_of(self, x1: float, x2: float) -> tuple[int, int]:
        i = int(np.clip(np.floor((x1 - self.x1_min) / self.dx1), 0, self.n_x1 - 1))
        j = int(np.clip(np.floor((x2 - self.x2_min) / self.dx2), 0, self.n_x2 - 1))
        return i, j

    def to_dict(self) -> dict:
        return {
            "x1_min": self.x1_min,
            "x1_max": self.x1_max,
            "x2_min": self.x2_min,
            "x2_max": self.x2_max,
            "n_x1": self.n_x1,
            "n_x2": self.n_x2,
            "n_t": self.n_t,
            "bc": self.bc,
        }


def make_grid(
    bounds: tuple[float, float, float, float],
    n_x1: int,
    n_x2: int,
    n_t: int,
    bc: BoundaryKind = "noflux",
) -> Grid:
    """Build a validated grid from ``(x1_min, x1_max, x2_min, x2_max)``."""
    x1_min, x1_max, x2_min, x2_max = (float(b) for b in bounds)
    if not (x1_max > x1_min and x2_max > x2_min):
        raise ConfigurationError(f"domain bounds must be ordered with positive extent, got {bounds}")
    for name, n in (("n_x1", n_x1), ("n_x2", n_x2), ("n_t", n_t)):
        if int(n) != n or n < 2:
            raise ConfigurationError(f"{name} must be an integer >= 2, got {n}")
    if bc not in BOUNDARY_KINDS:
        raise ConfigurationError(f"unknown boundary kind {bc!r}; expected one of {BOUNDARY_KINDS}")
    return Grid(x1_min, x1_max, x2_min, x2_max, int(n_x1), int(n_x2), int(n_t), bc)


def time_diff_forward(rho: np.ndarray, grid: Grid, level: int | None = None) -> np.ndarray:
    """Forward difference ``(rho[l+1] - rho[l]) / dt``; all intervals if ``level`` is None."""
    if level is None:
        return (rho[1:] - rho[:-1]) / grid.dt
    if not 0 <= level < grid.n_t:
        raise IndexError(f"time level {level} outside [0, {grid.n_t})")
    return (rho[level + 1] - rho[level]) / grid.dt


def time_diff_backward(phi: np.ndarray, grid: Grid) -> np.ndarray:
    """Backward difference at levels ``1..n_t``: ``(phi[l] - phi[l-1]) / dt``."""
    return (phi[1:] - phi[:-1]) / grid.dt


def _left(face: np.ndarray, axis: int, grid: Grid) -> np.ndarray:
    # value on the face preceding each cell along `axis`
    if grid.periodic:
        return np.roll(face, 1, axis=axis)
    out = np.zeros_like(face)
    if axis == -2:
        out[..., 1:, :] = face[..., :-1, :]
    else:
        out[..., :, 1:] = face[..., :, :-1]
    return out


def clamp_boundary(m1: np.ndarray, m2: np.ndarray, grid: Grid) -> tuple[np.ndarray, np.ndarray]:
    """Copy of the flux with no-flux boundary faces set to zero (identity if periodic)."""
    m1 = np.array(m1, dtype=float)
    m2 = np.array(m2, dtype=float)
    if not grid.periodic:
        m1[..., -1, :] = 0.0
        m2[..., :, -1] = 0.0
    return m1, m2


def divergence(m1: np.ndarray, m2: np.ndarray, grid: Grid) -> np.ndarray:
    """Conservative cell-centered divergence of a face flux.

    Under no-flux conditions the boundary faces are treated as zero whatever
    is stored there, so ``divergence`` is exactly minus the adjoint of
    :func:`gradient_forward`.
    """
    m1, m2 = clamp_boundary(m1, m2, grid)
    return (m1 - _left(m1, -2, grid)) / grid.dx1 + (m2 - _left(m2, -1, grid)) / grid.dx2


def gradient_forward(phi: np.ndarray, grid: Grid) -> tuple[np.ndarray, np.ndarray]:
    """Forward differences placed on the flux faces.

    No-flux boundary faces get a zero entry; periodic grids wrap.
    """
    phi = np.asarray(phi, dtype=float)
    if grid.periodic:
        g1 = (np.roll(phi, -1, axis=-2) - phi) / grid.dx1
        g2 = (np.roll(phi, -1, axis=-1) - phi) / grid.dx2
        return g1, g2
    g1 = np.zeros_like(phi)
    g2 = np.zeros_like(phi)
    g1[..., :-1, :] = (phi[..., 1:, :] - phi[..., :-1, :]) / grid.dx1
    g2[..., :, :-1] = (phi[..., :, 1:] - phi[..., :, :-1]) / grid.dx2
    return g1, g2


def laplacian(phi: np.ndarray, grid: Grid) -> np.ndarray:
    """Five-point Laplacian ``divergence(gradient_forward(phi))``."""
    return divergence(*gradient_forward(phi, grid), grid)


def face_to_cell_sq(f1: np.ndarray, f2: np.ndarray, grid: Grid) -> np.ndarray:
    """Cell value of ``|f|^2``: per axis, the mean of the squared values on the two bounding faces."""
    s1 = f1 * f1
    s2 = f2 * f2
    return 0.5 * (s1 + _left(s1, -2, grid)) + 0.5 * (s2 + _left(s2, -1, grid))


def cell_to_face(c: np.ndarray, grid: Grid) -> tuple[np.ndarray, np.ndarray]:
    """Average of the two cells adjacent to each face (boundary faces copy the inner cell)."""
    if grid.periodic:
        return 0.5 * (c + np.roll(c, -1, axis=-2)), 0.5 * (c + np.roll(c, -1, axis=-1))
    f1 = np.array(c, dtype=float)
    f2 = np.array(c, dtype=float)
    f1[..., :-1, :] = 0.5 * (c[..., :-1, :] + c[..., 1:, :])
    f2[..., :, :-1] = 0.5 * (c[..., :, :-1] + c[..., :, 1:])
    return f1, f2


def integrate(field: np.ndarray, grid: Grid, time: bool = False) -> np.ndarray | float:
    """Cell-area weighted sum over the two trailing axes (and over time if ``time``)."""
    out = np.sum(field, axis=(-2, -1)) * grid.cell_area
    if time:
        out = np.sum(out) * grid.dt
    return out if np.ndim(out) else float(out)


def inner(u: np.ndarray, v: np.ndarray, grid: Grid) -> float:
    """Discrete L2 pairing over space (and any leading axes, unweighted)."""
    return float(np.sum(u * v) * grid.cell_area)
