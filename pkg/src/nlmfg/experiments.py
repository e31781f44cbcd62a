"""Named experiment presets and the diagnostics used to read their solutions."""

from __future__ import annotations

import copy
from dataclasses import dataclass

import numpy as np

from nlmfg.exceptions import ConfigurationError
from nlmfg.grid import Grid, integrate, make_grid
from nlmfg.kernels import (
    from_features,
    fourier_green_basis,
    gaussian_basis,
    linear_spread_basis,
    subregion_basis,
)
from nlmfg.pdhg.solver import StepSizes
from nlmfg.problem import (
    ProblemSpec,
    Rectangle,
    confinement_cost,
    gaussian_density,
    gaussian_mixture,
    obstacle_cost,
    static_in_time,
    terminal_cost_preset,
    turnpike_potential,
    turnpike_rescale,
    uniform_density,
)

DEFAULT_GRID = {"n_x1": 64, "n_x2": 64, "n_t": 32}
DEFAULT_SNAPSHOTS = (0.1, 0.5, 0.9)

# Obstacle geometry is not published; these four bars leave three channels
# between the start (bottom) and target (top) regions.
DEFAULT_OBSTACLES = [
    [-0.9, -0.55, -0.1, 0.1],
    [-0.35, -0.1, -0.1, 0.1],
    [0.1, 0.35, -0.1, 0.1],
    [0.55, 0.9, -0.1, 0.1],
]
DEFAULT_MOVING_OBSTACLES = [
    [-0.9, -0.55, -0.25, -0.05, 0.0, 0.3],
    [-0.35, -0.1, 0.05, 0.25, 0.0, -0.3],
    [0.1, 0.35, -0.25, -0.05, 0.0, 0.3],
    [0.55, 0.9, 0.05, 0.25, 0.0, -0.3],
]

_GAUSS_COMMON = {
    "sigma1": 0.8,
    "sigma2": 0.8,
    "mu": 0.1,
    "order": 3,
    "confinement_coefficient": 1000.0,
    "confinement_power": 8,
    "confinement_center": [0.0, 0.0],
    "obstacle_height": 1.0e4,
}

PRESET_DEFAULTS: dict[str, dict] = {
    "trivial": {
        "center": [0.5, 0.5],
        "sigma_g": 0.2,
    },
    "constant_feature": {
        "k": 2.0,
        "center": [0.5, 0.5],
        "sigma_g": 0.2,
    },
    "spread": {
        "lambda1": 4.0,
        "lambda2": 4.0,
        "self_term": True,
        "confinement_coefficient": 1000.0,
        "confinement_power": 8,
        "confinement_center": [0.5, 0.5],
    },
    "gauss_static": dict(_GAUSS_COMMON, obstacles=DEFAULT_OBSTACLES),
    "gauss_dynamic": dict(_GAUSS_COMMON, obstacles=DEFAULT_MOVING_OBSTACLES),
    "subregion": dict(
        _GAUSS_COMMON, sigma1=0.2, sigma2=0.2, mu=5.0, split=0.0, interaction="subregion", obstacles=[],
    ),
    "turnpike": {
        "mu": 200.0,
        "T": 10.0,
        "order": 2,
    },
}

PRESET_DESCRIPTIONS = {
    "trivial": "no interaction, Q = 0, g = 0; the density stays at rho0",
    "constant_feature": "single constant feature with Gram k; converged a = k",
    "spread": "maximal spread on [0,1]^2 with linear features sqrt(2 lambda_i) x_i",
    "gauss_static": "Gaussian repulsion on [-1,1]^2 with four static obstacles",
    "gauss_dynamic": "Gaussian repulsion on [-1,1]^2 with vertically moving obstacles",
    "subregion": "Gaussian repulsion acting only within x1 <= split and x1 > split",
    "turnpike": "long-horizon periodic problem with mu (I - Laplacian)^-2 interaction",
}

# Recommended step sizes per preset; the unit-size features of most presets
# work with the generic defaults, the turnpike interaction is 2000x stronger and
# the subregion run needs a long phi step to stop stalling near 3e-3.
PRESET_STEPS = {
    "subregion": StepSizes(tau_rho=0.125, tau_m=0.125, tau_a=0.125, tau_phi_t=8.0, tau_grad_phi=8.0, tau_phi0=8.0),
    "turnpike": StepSizes(tau_rho=0.02, tau_m=0.5, tau_a=0.02, tau_phi_t=10.0, tau_grad_phi=0.5, tau_phi0=10.0),
}


@dataclass(frozen=True)
class ExperimentPreset:
    name: str
    params: dict
    grid: dict
    snapshot_times: tuple[float, ...] = DEFAULT_SNAPSHOTS
    steps: StepSizes = StepSizes()


def preset_info(name: str) -> ExperimentPreset:
    if name not in PRESET_DEFAULTS:
        raise ConfigurationError(f"unknown preset {name!r}; expected one of {sorted(PRESET_DEFAULTS)}")
    return ExperimentPreset(name, copy.deepcopy(PRESET_DEFAULTS[name]), dict(DEFAULT_GRID),
                            steps=PRESET_STEPS.get(name, StepSizes()))


def resolve_params(name: str, overrides: dict | None = None) -> dict:
    """Preset defaults updated by ``overrides``; unknown keys are rejected."""
    params = preset_info(name).params
    for key, value in (overrides or {}).items():
        if key not in params:
            raise ConfigurationError(f"preset {name!r} has no parameter {key!r}; known: {sorted(params)}")
        params[key] = value
    return params


def _confinement(p: dict, grid: Grid) -> np.ndarray:
    return confinement_cost(tuple(p["confinement_center"]), float(p["confinement_coefficient"]),
                            int(p["confinement_power"]), grid)


def _gauss_child(p: dict, grid: Grid):
    return gaussian_basis(float(p["mu"]), float(p["sigma1"]), float(p["sigma2"]), int(p["order"]), grid)


def _obstacles(p: dict, grid: Grid) -> np.ndarray:
    rects = [Rectangle.from_list(r) for r in p["obstacles"]]
    return obstacle_cost(rects, float(p["obstacle_height"]), grid)


def preset(name: str, overrides: dict | None = None, n_x1: int = 64, n_x2: int = 64, n_t: int = 32) -> ProblemSpec:
    """Assemble the :class:`ProblemSpec` of a named experiment."""
    p = resolve_params(name, overrides)
    try:
        return _BUILDERS[name](p, n_x1, n_x2, n_t)
    except (TypeError, KeyError, ValueError) as exc:
        if isinstance(exc, ConfigurationError):
            raise
        raise ConfigurationError(f"invalid parameters for preset {name!r}: {exc}") from exc


def _trivial(p, n_x1, n_x2, n_t):
    grid = make_grid((0, 1, 0, 1), n_x1, n_x2, n_t)
    rho0 = gaussian_density(*p["center"], p["sigma_g"], grid)
    basis = linear_spread_basis(0.0, 0.0, grid)
    return ProblemSpec(grid, rho0, np.zeros(grid.shape), np.zeros((n_t,) + grid.shape), basis,
                       name="trivial", params=p)


def _constant_feature(p, n_x1, n_x2, n_t):
    if not float(p["k"]) > 0:
        raise ConfigurationError("k must be positive")
    grid = make_grid((0, 1, 0, 1), n_x1, n_x2, n_t)
    rho0 = gaussian_density(*p["center"], p["sigma_g"], grid)
    basis = from_features(grid, np.ones((1,) + grid.shape), [[float(p["k"])]], family="constant",
                          params={"k": float(p["k"])}, labels=("one",))
    return ProblemSpec(grid, rho0, np.zeros(grid.shape), np.zeros((n_t,) + grid.shape), basis,
                       name="constant_feature", params=p)


def _spread(p, n_x1, n_x2, n_t):
    grid = make_grid((0, 1, 0, 1), n_x1, n_x2, n_t)
    lam1, lam2 = float(p["lambda1"]), float(p["lambda2"])
    basis = linear_spread_basis(lam1, lam2, grid)
    Q = _confinement(p, grid)
    if p["self_term"]:
        # -lam |x|^2 completes the interaction to -lam |x - mean|^2
        x1, x2 = grid.mesh()
        Q = Q - lam1 * x1**2 - lam2 * x2**2
    rho0 = gaussian_density(0.5, 0.9, 0.2, grid)
    return ProblemSpec(grid, rho0, terminal_cost_preset("spread", grid), static_in_time(Q, grid), basis,
                       name="spread", params=p)


def _gauss(name):
    def build(p, n_x1, n_x2, n_t):
        grid = make_grid((-1, 1, -1, 1), n_x1, n_x2, n_t)
        if name == "gauss_dynamic":
            centers = [(-1.2 + 0.4 * j, -0.9) for j in range(1, 6)]
            rho0 = gaussian_mixture(centers, 0.2, grid)
        else:
            rho0 = gaussian_density(0.0, -0.9, 0.2, grid)
        Q = static_in_time(_confinement(p, grid), grid) + _obstacles(p, grid)
        return ProblemSpec(grid, rho0, terminal_cost_preset("gaussian_repulsion", grid), Q,
                           _gauss_child(p, grid), name=name, params=p)
    return build


def _subregion(p, n_x1, n_x2, n_t):
    grid = make_grid((-1, 1, -1, 1), n_x1, n_x2, n_t)
    split = float(p["split"])
    child = _gauss_child(p, grid)
    if p["interaction"] == "subregion":
        basis = subregion_basis([
            (lambda x1, x2: np.asarray(x1) <= split, child),
            (lambda x1, x2: np.asarray(x1) > split, child),
        ])
    elif p["interaction"] == "global":
        basis = child
    else:
        raise ConfigurationError(f"interaction must be 'subregion' or 'global', got {p['interaction']!r}")
    rho0 = gaussian_mixture([(0.2, -0.9), (-0.2, -0.9)], 0.2, grid)
    Q = static_in_time(_confinement(p, grid), grid) + _obstacles(p, grid)
    return ProblemSpec(grid, rho0, terminal_cost_preset("subregion", grid), Q, basis,
                       name="subregion", params=p)


def _turnpike(p, n_x1, n_x2, n_t):
    grid = make_grid((0, 1, 0, 1), n_x1, n_x2, n_t, bc="periodic")
    basis = fourier_green_basis(float(p["mu"]), int(p["order"]), grid)
    spec = ProblemSpec(grid, uniform_density(grid), terminal_cost_preset("zero", grid),
                       static_in_time(turnpike_potential(grid), grid), basis, name="turnpike", params=p)
    return turnpike_rescale(spec, float(p["T"]))


_BUILDERS = {
    "trivial": _trivial,
    "constant_feature": _constant_feature,
    "spread": _spread,
    "gauss_static": _gauss("gauss_static"),
    "gauss_dynamic": _gauss("gauss_dynamic"),
    "subregion": _subregion,
    "turnpike": _turnpike,
}
PRESET_NAMES = tuple(_BUILDERS)


def spread_metrics(rho: np.ndarray, grid: Grid) -> tuple[float, float]:
    """Per-axis variance of a density slice."""
    mass = integrate(rho, grid)
    x1, x2 = grid.mesh()
    m1 = integrate(rho * x1, grid) / mass
    m2 = integrate(rho * x2, grid) / mass
    return (integrate(rho * (x1 - m1) ** 2, grid) / mass, integrate(rho * (x2 - m2) ** 2, grid) / mass)


def mean_shift_normalize(field: np.ndarray, grid: Grid) -> np.ndarray:
    """Subtract the domain mean."""
    return field - integrate(field, grid) / grid.area


@dataclass(frozen=True)
class TurnpikeReport:
    times: np.ndarray
    lambda_hat: np.ndarray
    lambda_mid: float
    drift: float
    window: tuple[float, float]
    rho: np.ndarray
    grid: Grid

    def stationarity(self, t1: float, t2: float) -> float:
        """L1 distance between the density slices nearest to ``t1`` and ``t2``."""
        a = self.rho[self.grid.level_of(t1)]
        b = self.rho[self.grid.level_of(t2)]
        return integrate(np.abs(a - b), self.grid)

    def relative_variation(self) -> float:
        """``(max - min) / |mean|`` of ``lambda_hat`` over the window."""
        sel = self._in_window()
        vals = self.lambda_hat[sel]
        return float((vals.max() - vals.min()) / abs(vals.mean()))

    def _in_window(self) -> np.ndarray:
        lo, hi = self.window
        return (self.times >= lo - 1e-12) & (self.times <= hi + 1e-12)


def turnpike_diagnostics(phi: np.ndarray, rho: np.ndarray, grid: Grid, T: float,
                         window: tuple[float, float] = (0.3, 0.7)) -> TurnpikeReport:
    """Ergodic-constant estimate and plateau diagnostics of a long-horizon solution.

    ``lambda_hat(t)`` is the domain mean of ``phi(x, t) / (T (1 - t))`` on levels
    ``t < 1``; ``drift`` is the largest ``sup_x |phi/T - lambda_mid (1 - t)|``
    over window levels, with ``lambda_mid`` the window mean of ``lambda_hat``.
    """
    times = grid.times[:-1]
    scaled = phi[:-1] / (T * (1.0 - times))[:, None, None]
    lambda_hat = np.asarray(integrate(scaled, grid)) / grid.area
    lo, hi = window
    sel = (times >= lo - 1e-12) & (times <= hi + 1e-12)
    if not np.any(sel):
        raise ConfigurationError(f"no time level inside the window {window}")
    lambda_mid = float(lambda_hat[sel].mean())
    dev = np.abs(phi[:-1][sel] / T - lambda_mid * (1.0 - times[sel])[:, None, None])
    return TurnpikeReport(times, lambda_hat, lambda_mid, float(dev.max()), window, rho, grid)


@dataclass(frozen=True)
class KernelSweepRow:
    order: int
    r: int
    sup_error: float
    ratio: float


def kernel_sweep(name: str, overrides: dict | None = None, n_x1: int = 32, n_x2: int = 32,
                 orders: tuple[int, ...] | None = None) -> list[KernelSweepRow]:
    """Sup-grid error of the truncated kernel against the exact one, per truncation order.

    Gaussian presets compare against the closed-form Gaussian (orders 2..5 by
    default); the turnpike preset compares its Fourier truncation against the
    series summed to order 40 (orders 1..4). ``ratio`` is relative to the first row.
    """
    from nlmfg.kernels import gaussian_kernel, green_kernel, kernel_sup_error

    p = resolve_params(name, overrides)
    if name in ("gauss_static", "gauss_dynamic", "subregion"):
        grid = make_grid((-1, 1, -1, 1), n_x1, n_x2, 2)
        mu, s1, s2 = float(p["mu"]), float(p["sigma1"]), float(p["sigma2"])
        orders = orders or (2, 3, 4, 5)

        def build(n):
            return gaussian_basis(mu, s1, s2, n, grid)

        def exact(x, y):
            return gaussian_kernel(x, y, mu, s1, s2)
    elif name == "turnpike":
        grid = make_grid((0, 1, 0, 1), n_x1, n_x2, 2, bc="periodic")
        mu = float(p["mu"])
        orders = orders or (1, 2, 3, 4)

        def build(n):
            return fourier_green_basis(mu, n, grid)

        # translation invariant: tabulate the reference once on index differences
        d1, d2 = np.meshgrid(np.arange(n_x1) * grid.dx1, np.arange(n_x2) * grid.dx2, indexing="ij")
        table = green_kernel(np.stack([d1, d2], axis=-1), np.zeros(2), mu, 40)

        def exact(x, y):
            d = x - y
            i = np.rint(d[..., 0] / grid.dx1).astype(int) % n_x1
            j = np.rint(d[..., 1] / grid.dx2).astype(int) % n_x2
            return table[i, j]
    else:
        raise ConfigurationError(f"preset {name!r} uses an exact finite-rank kernel; there is nothing to sweep")
    rows = []
    for n in orders:
        basis = build(n)
        err = kernel_sup_error(basis, exact)
        rows.append(KernelSweepRow(n, basis.r, err, err / rows[0].sup_error if rows else 1.0))
    return rows
