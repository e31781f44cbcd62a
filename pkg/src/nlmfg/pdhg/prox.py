"""Proximal updates of the density/flux pair and of the interaction coefficients."""

from __future__ import annotations

import numpy as np

from nlmfg.grid import Grid, cell_to_face, clamp_boundary, face_to_cell_sq, gradient_forward
from nlmfg.kernels import interaction_field, moments


def prox_gamma(rho, b_sq, rho_prev, tau_rho, tau_m, beta=1.0):
    """``beta b_sq / (2 (tau_m + beta rho)^2) - (rho - rho_prev) / tau_rho``; strictly decreasing in ``rho >= 0``."""
    return beta * b_sq / (2.0 * (tau_m + beta * rho) ** 2) - (rho - rho_prev) / tau_rho


def scalar_prox(b_sq, rho_prev, c, tau_rho, tau_m, beta=1.0, rtol=1e-15, max_iter=200):
    """Pointwise density update of the (rho, m) proximal step.

    Solves ``prox_gamma(rho) = c`` for the unique root ``rho >= 0`` when
    ``prox_gamma(0) >= c`` and returns ``rho = 0`` otherwise. Also returns
    ``scale = beta rho / (tau_m + beta rho)``, the factor mapping
    ``m^k - tau_m grad(phi_bar)`` to the new flux.

    The root is bracketed by ``[max(0, rho_prev - tau_rho c), tau_rho (gamma(0) - c)]``.
    ``gamma - c`` is convex and decreasing, so Newton started at the lower end
    increases monotonically to the root; a bisection fallback guards against
    round-off leaving the bracket. Step sizes and ``beta`` may be arrays
    broadcastable against the data.
    """
    arrays = np.broadcast_arrays(*(np.asarray(v, float) for v in (b_sq, rho_prev, c, tau_rho, tau_m, beta)))
    shape = arrays[0].shape
    b_sq, rho_prev, c, tau_rho, tau_m, beta = (a.ravel() for a in arrays)

    gamma0 = beta * b_sq / (2.0 * tau_m**2) + rho_prev / tau_rho
    rho = np.zeros_like(b_sq)
    idx = np.flatnonzero(gamma0 > c)

    bq, rp, cc, tr, tm, be = b_sq[idx], rho_prev[idx], c[idx], tau_rho[idx], tau_m[idx], beta[idx]
    lo = np.maximum(0.0, rp - tr * cc)
    hi = np.maximum(lo, tr * (gamma0[idx] - cc))
    x = lo.copy()
    for _ in range(max_iter):
        if idx.size == 0:
            break
        u = tm + be * x
        h = be * bq / (2.0 * u * u) - (x - rp) / tr - cc
        dh = -be * be * bq / (u * u * u) - 1.0 / tr
        pos = h > 0
        lo = np.where(pos, x, lo)
        hi = np.where(pos, hi, x)
        x_new = x - h / dh
        outside = (x_new < lo) | (x_new > hi)
        x_new = np.where(outside, 0.5 * (lo + hi), x_new)
        done = (np.abs(x_new - x) <= rtol * np.maximum(1.0, x)) | (h == 0)
        x = np.where(h == 0, x, x_new)
        if np.any(done):
            rho[idx[done]] = x[done]
            keep = ~done
            idx, bq, rp, cc, tr, tm, be, lo, hi, x = (
                v[keep] for v in (idx, bq, rp, cc, tr, tm, be, lo, hi, x))
    if idx.size:
        rho[idx] = x

    scale = beta * rho / (tau_m + beta * rho)
    return rho.reshape(shape), scale.reshape(shape)


def prox_rho_m(state, spec, steps):
    """Maximize the saddle function in ``(rho, m)`` at the extrapolated ``(phi_bar, a_bar)``.

    Interval ``l`` owns the density at level ``l + 1`` and the flux slot ``l``.
    Face values ``m - tau_m grad(phi_bar)`` are folded into a cell value of
    ``|b|^2`` (mean of the squared bounding faces per axis), the scalar prox is
    solved per cell, and each face is scaled by the mean of the scales of its
    two cells. Returns new ``(rho, m1, m2)``; level 0 of ``rho`` is ``rho0``.
    """
    grid: Grid = spec.grid
    phi_bar = state.phi_bar
    g1, g2 = gradient_forward(phi_bar[:-1], grid)
    b1, b2 = clamp_boundary(state.m1 - steps.tau_m * g1, state.m2 - steps.tau_m * g2, grid)
    b_sq = face_to_cell_sq(b1, b2, grid)
    c = spec.Q + (phi_bar[1:] - phi_bar[:-1]) / grid.dt + interaction_field(state.a_bar, spec.basis)

    rho_new, scale = scalar_prox(b_sq, state.rho[1:], c, steps.tau_rho, steps.tau_m, spec.beta)
    s1, s2 = cell_to_face(scale, grid)
    m1, m2 = clamp_boundary(s1 * b1, s2 * b2, grid)

    rho = np.empty_like(state.rho)
    rho[0] = spec.rho0
    rho[1:] = rho_new
    return rho, m1, m2


def prox_a(a_old, F, update_matrix=None, tau_a=None, basis=None):
    """``a_new = (tau_a K^{-1} + I)^{-1} (a_old + tau_a F)`` with the matrix precomputed.

    Either pass ``update_matrix`` or ``basis`` to build it from.
    """
    if update_matrix is None:
        update_matrix = basis.a_update_matrix(tau_a)
    return update_matrix @ (a_old + tau_a * F)


def density_moments(rho, basis):
    """Moments of the unknown density levels ``1..n_t``, aligned with the coefficient slots."""
    return moments(rho[1:], basis)
