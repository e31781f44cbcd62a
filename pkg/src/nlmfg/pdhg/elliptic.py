"""Space-time elliptic solve for the value-function proximal step.

With ``d = phi - phi^k`` on levels ``0..n_t-1`` (level ``n_t`` is pinned to
``g`` so ``d = 0`` there), the step solves ``M d = -R`` where

    (M d)^j = dt/tau_grad * (-Lap d^j)
              + 1/(tau_t dt) * ((d^j - d^{j-1}) [j >= 1] - (d^{j+1} - d^j))
              + [j == 0] d^0 / tau_0

and ``R^j = rho^{j+1} - rho^j + dt div m^j`` is the continuity defect. Row 0
is the discrete Robin condition; the spatial operator carries the homogeneous
Neumann (or periodic) condition of :func:`nlmfg.grid.laplacian`. The spatial
Laplacian is diagonalized by a type-II DCT (no-flux) or an FFT (periodic),
leaving one tridiagonal system in time per spatial mode.
"""

from __future__ import annotations

import numpy as np
import scipy.fft

from nlmfg.grid import Grid, divergence, laplacian


def laplacian_eigenvalues(grid: Grid) -> np.ndarray:
    """Eigenvalues of ``-laplacian`` per spatial mode, shape ``(n_x1, n_x2)``."""
    period = 1.0 if grid.periodic else 0.5
    k1 = np.arange(grid.n_x1)
    k2 = np.arange(grid.n_x2)
    lam1 = (2.0 - 2.0 * np.cos(2.0 * np.pi * period * k1 / grid.n_x1)) / grid.dx1**2
    lam2 = (2.0 - 2.0 * np.cos(2.0 * np.pi * period * k2 / grid.n_x2)) / grid.dx2**2
    return lam1[:, None] + lam2[None, :]


class PhiSolver:
    """Factorized space-time operator for fixed grid and step sizes."""

    def __init__(self, grid: Grid, tau_phi_t: float, tau_grad_phi: float, tau_phi0: float):
        self.grid = grid
        self.tau_t = tau_phi_t
        self.tau_grad = tau_grad_phi
        self.tau_0 = tau_phi0
        n = grid.n_t
        dt = grid.dt
        lam = laplacian_eigenvalues(grid)
        self.off = -1.0 / (tau_phi_t * dt)
        diag = np.empty((n,) + grid.shape)
        diag[:] = dt * lam / tau_grad_phi + 2.0 / (tau_phi_t * dt)
        diag[0] = dt * lam / tau_grad_phi + 1.0 / (tau_phi_t * dt) + 1.0 / tau_phi0
        self.diag = diag

        # Thomas factorization, shared by every solve
        cprime = np.empty_like(diag)
        denom = np.empty_like(diag)
        denom[0] = diag[0]
        cprime[0] = self.off / denom[0]
        for j in range(1, n):
            denom[j] = diag[j] - self.off * cprime[j - 1]
            cprime[j] = self.off / denom[j]
        self._cprime = cprime
        self._denom = denom

    def apply(self, d: np.ndarray) -> np.ndarray:
        """Apply ``M`` with physical-space stencils (no transforms)."""
        grid = self.grid
        dt = grid.dt
        out = -dt / self.tau_grad * laplacian(d, grid)
        ext = np.concatenate([d, np.zeros((1,) + grid.shape)])
        fwd = ext[1:] - ext[:-1]
        time = -fwd.copy()
        time[1:] += fwd[:-1]
        out += time / (self.tau_t * dt)
        out[0] += d[0] / self.tau_0
        return out

    def _forward(self, x):
        if self.grid.periodic:
            return np.fft.fft2(x, axes=(-2, -1))
        return scipy.fft.dctn(x, type=2, axes=(-2, -1), norm="ortho")

    def _inverse(self, x):
        if self.grid.periodic:
            return np.fft.ifft2(x, axes=(-2, -1)).real
        return scipy.fft.idctn(x, type=2, axes=(-2, -1), norm="ortho")

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        """Solve ``M d = rhs`` for ``d`` of shape ``(n_t, n_x1, n_x2)``."""
        y = self._forward(rhs)
        n = self.grid.n_t
        out = np.empty_like(y)
        out[0] = y[0] / self._denom[0]
        for j in range(1, n):
            out[j] = (y[j] - self.off * out[j - 1]) / self._denom[j]
        for j in range(n - 2, -1, -1):
            out[j] = out[j] - self._cprime[j] * out[j + 1]
        return self._inverse(out)


def continuity_defect(rho: np.ndarray, m1: np.ndarray, m2: np.ndarray, grid: Grid) -> np.ndarray:
    """``(rho^{l+1} - rho^l) / dt + div m^l`` for every interval."""
    return (rho[1:] - rho[:-1]) / grid.dt + divergence(m1, m2, grid)


def prox_phi(solver: PhiSolver, phi: np.ndarray, rho: np.ndarray, m1: np.ndarray, m2: np.ndarray,
             g: np.ndarray) -> np.ndarray:
    """Minimize the saddle function plus the H1-type proximity term in ``phi``."""
    grid = solver.grid
    rhs = -grid.dt * continuity_defect(rho, m1, m2, grid)
    out = np.empty_like(phi)
    out[:-1] = phi[:-1] + solver.solve(rhs)
    out[-1] = g
    return out
