"""Feature bases for kernel interactions and the coefficient-space quantities built on them.

A kernel is represented as ``K(x, y) = sum_ij gram[i, j] f_i(x) f_j(y)``. Every
basis keeps its features sampled at the cell centers of a grid; the nonlocal
term of the HJB equation then reduces to ``sum_k a_k(t) f_k(x)`` where the
coefficient path ``a`` has shape ``(r, n_t)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from nlmfg.exceptions import ConfigurationError
from nlmfg.grid import Grid

FeatureFn = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class FeatureBasis:
    """Sampled features ``(r, n_x1, n_x2)`` with Gram matrix and inverse.

    ``feature_fn`` evaluates the same features at arbitrary points and is
    optional; it is used for off-grid kernel checks only.
    """

    grid: Grid
    features: np.ndarray
    gram: np.ndarray
    gram_inv: np.ndarray
    family: str
    params: dict = field(default_factory=dict)
    feature_fn: FeatureFn | None = None
    labels: tuple[str, ...] = ()

    @property
    def r(self) -> int:
        return self.features.shape[0]

    @property
    def identity_gram(self) -> bool:
        return bool(np.array_equal(self.gram, np.eye(self.r)))

    def a_update_matrix(self, tau_a: float) -> np.ndarray:
        """``(tau_a K^{-1} + I)^{-1}``, computed once per solver setup."""
        return np.linalg.inv(tau_a * self.gram_inv + np.eye(self.r))

    def scaled(self, factor: float) -> "FeatureBasis":
        """Basis whose features are multiplied by ``factor`` (kernel scales by ``factor**2``)."""
        fn = self.feature_fn
        scaled_fn = None if fn is None else (lambda x1, x2, fn=fn: factor * fn(x1, x2))
        params = dict(self.params)
        params["feature_scale"] = params.get("feature_scale", 1.0) * factor
        return FeatureBasis(
            self.grid,
            factor * self.features,
            self.gram.copy(),
            self.gram_inv.copy(),
            self.family,
            params,
            scaled_fn,
            self.labels,
        )


def from_features(
    grid: Grid,
    features: np.ndarray,
    gram: np.ndarray | None = None,
    family: str = "custom",
    params: dict | None = None,
    feature_fn: FeatureFn | None = None,
    labels: Sequence[str] = (),
) -> FeatureBasis:
    """Wrap user-sampled features; ``gram`` defaults to the identity."""
    features = np.asarray(features, dtype=float)
    if features.ndim == 2:
        features = features[None]
    if features.shape[1:] != grid.shape:
        raise ConfigurationError(f"features have shape {features.shape[1:]}, grid is {grid.shape}")
    r = features.shape[0]
    gram = np.eye(r) if gram is None else np.atleast_2d(np.asarray(gram, dtype=float))
    if gram.shape != (r, r):
        raise ConfigurationError(f"gram must be {r}x{r}, got {gram.shape}")
    if not np.allclose(gram, gram.T, atol=1e-12):
        raise ConfigurationError("gram matrix must be symmetric")
    if r and np.linalg.eigvalsh(gram).min() <= 0:
        raise ConfigurationError("gram matrix must be positive definite (invertible PSD)")
    gram_inv = np.eye(r) if np.array_equal(gram, np.eye(r)) else np.linalg.inv(gram)
    return FeatureBasis(grid, features, gram, gram_inv, family, dict(params or {}), feature_fn, tuple(labels))


def _sample(grid: Grid, fn: FeatureFn) -> np.ndarray:
    x1, x2 = grid.mesh()
    return fn(x1, x2)


def linear_spread_basis(lam1: float, lam2: float, grid: Grid) -> FeatureBasis:
    """Features ``sqrt(2 lam_i) x_i`` of the kernel ``2 sum_i lam_i x_i y_i``."""
    if lam1 < 0 or lam2 < 0:
        raise ConfigurationError(f"spread weights must be nonnegative, got ({lam1}, {lam2})")
    c = np.sqrt(2.0 * np.array([lam1, lam2], dtype=float))

    def fn(x1, x2):
        x1, x2 = np.broadcast_arrays(np.asarray(x1, float), np.asarray(x2, float))
        return np.stack([c[0] * x1, c[1] * x2])

    return from_features(
        grid, _sample(grid, fn), family="linear", params={"lam1": lam1, "lam2": lam2},
        feature_fn=fn, labels=("x1", "x2"),
    )


def gaussian_multi_indices(order: int) -> list[tuple[int, int]]:
    """Multi-indices ``(a1, a2)`` with ``a1 + a2 <= order``, grouped by total degree."""
    return [(total - k, k) for total in range(order + 1) for k in range(total + 1)]


def gaussian_basis(mu: float, sigma1: float, sigma2: float, order: int, grid: Grid) -> FeatureBasis:
    """Truncated feature expansion of ``mu * exp(-sum_i (x_i - y_i)^2 / (2 sigma_i^2))``.

    Each feature is ``sqrt(mu) exp(-sum x_i^2/(2 sigma_i^2)) prod (x_i/sigma_i)^a_i / sqrt(a_i!)``;
    the square-rooted factorial is what makes the products sum back to the kernel.
    """
    if mu <= 0 or sigma1 <= 0 or sigma2 <= 0:
        raise ConfigurationError(f"mu and sigmas must be positive, got mu={mu}, sigma=({sigma1}, {sigma2})")
    if int(order) != order or order < 0:
        raise ConfigurationError(f"order must be a nonnegative integer, got {order}")
    alphas = gaussian_multi_indices(int(order))
    norms = np.array([math.sqrt(math.factorial(a1) * math.factorial(a2)) for a1, a2 in alphas])
    p1 = np.array([a[0] for a in alphas])
    p2 = np.array([a[1] for a in alphas])

    def fn(x1, x2):
        x1 = np.asarray(x1, float)[None]
        x2 = np.asarray(x2, float)[None]
        u1 = x1 / sigma1
        u2 = x2 / sigma2
        env = np.sqrt(mu) * np.exp(-0.5 * (u1 * u1 + u2 * u2))
        shape = (-1,) + (1,) * (x1.ndim - 1)
        return env * u1 ** p1.reshape(shape) * u2 ** p2.reshape(shape) / norms.reshape(shape)

    return from_features(
        grid, _sample(grid, fn), family="gaussian",
        params={"mu": mu, "sigma1": sigma1, "sigma2": sigma2, "order": int(order)},
        feature_fn=fn, labels=tuple(f"g{a1}{a2}" for a1, a2 in alphas),
    )


def gaussian_kernel(x, y, mu: float, sigma1: float, sigma2: float) -> np.ndarray:
    """Exact anisotropic Gaussian kernel; ``x`` and ``y`` have a trailing axis of size 2."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    d1 = (x[..., 0] - y[..., 0]) / sigma1
    d2 = (x[..., 1] - y[..., 1]) / sigma2
    return mu * np.exp(-0.5 * (d1 * d1 + d2 * d2))


def subregion_basis(parts: Sequence[tuple[np.ndarray | Callable, FeatureBasis]]) -> FeatureBasis:
    """Combine child bases restricted to disjoint regions.

    Each region is either a boolean cell mask or a callable ``(x1, x2) -> bool``.
    The Gram matrix is block diagonal in the child Gram blocks.
    """
    if not parts:
        raise ConfigurationError("subregion basis needs at least one region")
    grid = parts[0][1].grid
    masks = []
    preds = []
    for region, child in parts:
        if child.grid != grid:
            raise ConfigurationError("all child bases must live on the same grid")
        if callable(region):
            preds.append(region)
            masks.append(np.asarray(_sample(grid, region), dtype=bool))
        else:
            preds.append(None)
            masks.append(np.asarray(region, dtype=bool))
        if masks[-1].shape != grid.shape:
            raise ConfigurationError(f"region mask shape {masks[-1].shape} does not match grid {grid.shape}")
    if np.any(np.sum(masks, axis=0) > 1):
        raise ConfigurationError("subregions overlap")

    features = np.concatenate([child.features * mask for mask, (_, child) in zip(masks, parts)])
    r = features.shape[0]
    gram = np.zeros((r, r))
    gram_inv = np.zeros((r, r))
    k = 0
    for _, child in parts:
        gram[k:k + child.r, k:k + child.r] = child.gram
        gram_inv[k:k + child.r, k:k + child.r] = child.gram_inv
        k += child.r

    fn = None
    if all(p is not None for p in preds) and all(c.feature_fn is not None for _, c in parts):
        def fn(x1, x2):
            return np.concatenate([c.feature_fn(x1, x2) * np.asarray(p(x1, x2), bool)
                                   for p, (_, c) in zip(preds, parts)])

    labels = tuple(f"R{n}:{lab}" for n, (_, c) in enumerate(parts) for lab in (c.labels or range(c.r)))
    return FeatureBasis(
        grid, features, gram, gram_inv, "subregion",
        {"children": [dict(family=c.family, **c.params) for _, c in parts]}, fn, labels,
    )


def fourier_modes(order: int) -> list[tuple[int, int]]:
    """Half-lattice ``a != 0`` with ``a1 > 0`` or ``(a1 == 0 and a2 > 0)`` and ``|a1| + |a2| <= order``."""
    modes = []
    for a1 in range(0, order + 1):
        for a2 in range(-order, order + 1):
            if abs(a1) + abs(a2) > order or (a1, a2) == (0, 0):
                continue
            if a1 > 0 or a2 > 0:
                modes.append((a1, a2))
    return modes


def green_coefficient(mu: float, alpha: tuple[int, int]) -> float:
    """Cosine-series coefficient of the periodic Green function of ``mu (I - Laplacian)^-2``."""
    if alpha == (0, 0):
        return float(mu)
    s = alpha[0] ** 2 + alpha[1] ** 2
    return 2.0 * mu / (1.0 + 8.0 * math.pi**2 * s + 16.0 * math.pi**4 * s * s)


def fourier_green_basis(mu: float, order: int, grid: Grid) -> FeatureBasis:
    """Trigonometric features of ``mu (I - Laplacian)^-2`` on a periodic unit-period grid."""
    if not grid.periodic:
        raise ConfigurationError("the Fourier basis requires a periodic grid")
    if mu <= 0:
        raise ConfigurationError(f"mu must be positive, got {mu}")
    if int(order) != order or order < 0:
        raise ConfigurationError(f"order must be a nonnegative integer, got {order}")
    modes = fourier_modes(int(order))
    root_gamma0 = math.sqrt(green_coefficient(mu, (0, 0)))
    roots = np.array([math.sqrt(green_coefficient(mu, a)) for a in modes])
    k1 = np.array([a[0] for a in modes], dtype=float)
    k2 = np.array([a[1] for a in modes], dtype=float)

    def fn(x1, x2):
        x1 = np.asarray(x1, float)
        x2 = np.asarray(x2, float)
        shape = (-1,) + (1,) * x1.ndim
        arg = 2.0 * np.pi * (k1.reshape(shape) * x1[None] + k2.reshape(shape) * x2[None])
        w = roots.reshape(shape)
        const = np.full((1,) + x1.shape, root_gamma0)
        return np.concatenate([const, w * np.cos(arg), w * np.sin(arg)])

    labels = ("const",) + tuple(f"cos{a}" for a in modes) + tuple(f"sin{a}" for a in modes)
    return from_features(
        grid, _sample(grid, fn), family="fourier", params={"mu": mu, "order": int(order)},
        feature_fn=fn, labels=labels,
    )


def green_kernel(x, y, mu: float, order: int) -> np.ndarray:
    """Cosine series of the periodic Green function truncated at ``|a1| + |a2| <= order``."""
    d = np.asarray(x, float) - np.asarray(y, float)
    out = np.full(d.shape[:-1], float(mu))
    for a in fourier_modes(order):
        out = out + green_coefficient(mu, a) * np.cos(2 * np.pi * (a[0] * d[..., 0] + a[1] * d[..., 1]))
    return out


def kernel_eval(basis: FeatureBasis, x: tuple[int, int], y: tuple[int, int]) -> float:
    """Truncated kernel between two grid cells given as ``(i, j)`` indices."""
    fx = basis.features[:, x[0], x[1]]
    fy = basis.features[:, y[0], y[1]]
    return float(fx @ basis.gram @ fy)


def kernel_matrix(basis: FeatureBasis) -> np.ndarray:
    """Truncated kernel between all pairs of cells, flattened in C order."""
    f = basis.features.reshape(basis.r, -1)
    return f.T @ basis.gram @ f


def interaction_field(a: np.ndarray, basis: FeatureBasis) -> np.ndarray:
    """``sum_k a[k, l] f_k(x)`` for every time slot ``l``; shape ``(n_slots, n_x1, n_x2)``."""
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != basis.r:
        raise ConfigurationError(f"coefficient path must have shape ({basis.r}, n), got {a.shape}")
    return np.einsum("kl,kij->lij", a, basis.features)


def moments(rho: np.ndarray, basis: FeatureBasis) -> np.ndarray:
    """``F[k, l] = sum_ij f_k rho[l] dx1 dx2``; a single slice gives shape ``(r,)``."""
    rho = np.asarray(rho, dtype=float)
    if rho.ndim == 2:
        return np.einsum("kij,ij->k", basis.features, rho) * basis.grid.cell_area
    return np.einsum("kij,lij->kl", basis.features, rho) * basis.grid.cell_area


def kernel_sup_error(basis: FeatureBasis, exact: Callable, chunk: int = 256) -> float:
    """``max |K_trunc(x, y) - exact(x, y)|`` over all pairs of cell centers.

    ``exact`` takes two arrays of points with a trailing axis of size 2.
    """
    x1, x2 = basis.grid.mesh()
    pts = np.stack([x1.ravel(), x2.ravel()], axis=-1)
    f = basis.features.reshape(basis.r, -1)
    kf = basis.gram @ f
    worst = 0.0
    for start in range(0, pts.shape[0], chunk):
        rows = slice(start, start + chunk)
        approx = f[:, rows].T @ kf
        ref = exact(pts[rows, None, :], pts[None, :, :])
        worst = max(worst, float(np.max(np.abs(approx - ref))))
    return worst
