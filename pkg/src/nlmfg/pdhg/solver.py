"""PDHG iteration for the coefficient saddle-point problem.

Discrete saddle function (``A = dx1 dx2``; interval ``l`` pairs ``rho^{l+1}``,
``m^l``, ``a[:, l]``, ``Q^l`` and ``grad phi^l``)::

    dt/2 sum_l a_l^T K^{-1} a_l - A sum phi^0 rho0
      - A sum_l sum_cells rho^{l+1} (phi^{l+1} - phi^l)
      - A dt sum_l sum_faces m^l . grad phi^l
      - A dt sum_l sum_cells [ |m^l|^2 / (2 beta rho^{l+1}) + rho^{l+1} (Q^l + sum_k a_kl f_k) ]

It is maximized in ``(rho >= 0, m)`` and minimized in ``(phi, a)`` with
``phi^{n_t} = g``. The ``phi`` optimality condition is the discrete continuity
equation, the ``a`` condition is ``a = K moments(rho)``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from nlmfg.exceptions import ConfigurationError, DivergenceError
from nlmfg.grid import cell_to_face, clamp_boundary, face_to_cell_sq, gradient_forward
from nlmfg.kernels import interaction_field, moments
from nlmfg.pdhg.elliptic import PhiSolver, continuity_defect, prox_phi
from nlmfg.pdhg.prox import prox_a, prox_rho_m
from nlmfg.problem import ProblemSpec

log = logging.getLogger(__name__)

INFINITE_OBJECTIVE = 1e300


@dataclass(frozen=True)
class StepSizes:
    tau_rho: float = 0.5
    tau_m: float = 0.5
    tau_a: float = 0.5
    tau_phi_t: float = 0.5
    tau_grad_phi: float = 0.5
    tau_phi0: float = 0.5

    def __post_init__(self):
        for name, value in asdict(self).items():
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                raise ConfigurationError(f"step size {name} must be a positive number, got {value!r}")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class PdhgState:
    rho: np.ndarray
    m1: np.ndarray
    m2: np.ndarray
    phi: np.ndarray
    a: np.ndarray
    phi_prev: np.ndarray
    a_prev: np.ndarray
    phi_bar: np.ndarray
    a_bar: np.ndarray
    iteration: int = 0
    change: float = math.inf

    def copy(self) -> "PdhgState":
        return PdhgState(**{k: (v.copy() if isinstance(v, np.ndarray) else v) for k, v in vars(self).items()})


@dataclass(frozen=True)
class Residuals:
    continuity_res: float
    a_fixedpoint_res: float
    iterate_change: float
    complementarity_res: float

    @property
    def stopping(self) -> float:
        return max(self.continuity_res, self.a_fixedpoint_res, self.iterate_change)


def initial_state(spec: ProblemSpec) -> PdhgState:
    """Feasible start: density frozen at ``rho0``, zero flux and coefficients, ``phi = g``."""
    grid = spec.grid
    n = grid.n_t
    rho = np.broadcast_to(spec.rho0, (n + 1,) + grid.shape).copy()
    phi = np.broadcast_to(spec.g, (n + 1,) + grid.shape).copy()
    zeros = np.zeros((n,) + grid.shape)
    a = np.zeros((spec.basis.r, n))
    return PdhgState(rho, zeros, zeros.copy(), phi, a, phi.copy(), a.copy(), phi.copy(), a.copy())


class PdhgContext:
    """Per-run precomputations: factorized phi operator and the a-update matrix."""

    def __init__(self, spec: ProblemSpec, steps: StepSizes):
        self.spec = spec
        self.steps = steps
        self.phi_solver = PhiSolver(spec.grid, steps.tau_phi_t, steps.tau_grad_phi, steps.tau_phi0)
        self.a_matrix = spec.basis.a_update_matrix(steps.tau_a)


def _rel_change(new, old) -> float:
    den = max(float(np.linalg.norm(new)), 1e-12)
    return float(np.linalg.norm(new - old)) / den


def pdhg_step(state: PdhgState, spec: ProblemSpec, steps: StepSizes,
              context: PdhgContext | None = None) -> PdhgState:
    """One iteration: (rho, m) prox, a prox, phi prox, then extrapolation of (a, phi)."""
    ctx = context or PdhgContext(spec, steps)
    rho, m1, m2 = prox_rho_m(state, spec, steps)
    a = prox_a(state.a, moments(rho[1:], spec.basis), ctx.a_matrix, steps.tau_a)
    phi = prox_phi(ctx.phi_solver, state.phi, rho, m1, m2, spec.g)

    change = max(_rel_change(rho, state.rho), _rel_change(phi, state.phi),
                 _rel_change(a, state.a) if a.size else 0.0)
    phi_bar = 2.0 * phi - state.phi
    phi_bar[-1] = spec.g
    return PdhgState(
        rho=rho, m1=m1, m2=m2, phi=phi, a=a,
        phi_prev=state.phi, a_prev=state.a,
        phi_bar=phi_bar, a_bar=2.0 * a - state.a,
        iteration=state.iteration + 1, change=change,
    )


def hjb_defect(state: PdhgState, spec: ProblemSpec) -> np.ndarray:
    """``-(phi^{l+1} - phi^l)/dt + beta |grad phi^l|^2 / 2 - Q^l - sum_k a_kl f_k`` per interval."""
    grid = spec.grid
    grad_sq = face_to_cell_sq(*gradient_forward(state.phi[:-1], grid), grid)
    return (-(state.phi[1:] - state.phi[:-1]) / grid.dt + 0.5 * spec.beta * grad_sq
            - spec.Q - interaction_field(state.a, spec.basis))


def a_fixedpoint_residual(a: np.ndarray, rho: np.ndarray, spec: ProblemSpec) -> float:
    target = spec.basis.gram @ moments(rho[1:], spec.basis)
    err = float(np.linalg.norm(a - target))
    den = float(np.linalg.norm(target))
    return err / den if den > 0 else err


def residuals(state: PdhgState, spec: ProblemSpec) -> Residuals:
    grid = spec.grid
    w = grid.cell_area * grid.dt
    cont = continuity_defect(state.rho, state.m1, state.m2, grid)
    comp = float(np.sum(state.rho[1:] * np.abs(hjb_defect(state, spec))) * w)
    return Residuals(
        continuity_res=float(np.sqrt(np.sum(cont * cont) * w)),
        a_fixedpoint_res=a_fixedpoint_residual(state.a, state.rho, spec),
        iterate_change=float(state.change),
        complementarity_res=comp,
    )


def kinetic_density(rho: np.ndarray, m1: np.ndarray, m2: np.ndarray, spec: ProblemSpec):
    """Cell values of ``rho L(m / rho)`` without the potential, and the infeasibility flag.

    Each face carries ``m_f^2 / (2 beta rho_f)`` with ``rho_f`` the mean of its
    two cells, the same averaging that redistributes the prox scales to faces;
    a cell collects the mean over its two bounding faces per axis. A face with
    flux but ``rho_f = 0`` is infeasible (``rho L = +inf``).
    """
    grid = spec.grid
    energies = []
    infeasible = False
    for m, r in zip(clamp_boundary(m1, m2, grid), cell_to_face(rho, grid)):
        positive = r > 0
        e = np.zeros_like(m)
        e[positive] = m[positive] ** 2 / (2.0 * spec.beta * r[positive])
        infeasible |= bool(np.any(~positive & (m != 0)))
        energies.append(np.sqrt(e))
    return face_to_cell_sq(*energies, grid), infeasible


def saddle_objective(state: PdhgState, spec: ProblemSpec) -> tuple[float, bool]:
    """Discrete saddle function; returns ``(value, infinite)``.

    The value is ``-INFINITE_OBJECTIVE`` (the kinetic term enters with a minus
    sign) and the flag is set when some cell carries flux with zero density.
    """
    grid = spec.grid
    A = grid.cell_area
    dt = grid.dt
    rho, phi, a = state.rho, state.phi, state.a
    kin, infinite = kinetic_density(rho[1:], state.m1, state.m2, spec)
    if infinite:
        return -INFINITE_OBJECTIVE, True
    g1, g2 = gradient_forward(phi[:-1], grid)
    quad = 0.5 * dt * float(np.einsum("kl,kq,ql->", a, spec.basis.gram_inv, a))
    value = (
        quad
        - A * float(np.sum(phi[0] * spec.rho0))
        - A * float(np.sum(rho[1:] * (phi[1:] - phi[:-1])))
        - A * dt * float(np.sum(state.m1 * g1 + state.m2 * g2))
        - A * dt * float(np.sum(kin + rho[1:] * (spec.Q + interaction_field(a, spec.basis))))
    )
    return value, False


@dataclass
class SolveResult:
    state: PdhgState
    converged: bool
    iterations: int
    residuals: Residuals
    history: list[dict] = field(default_factory=list)

    @property
    def rho(self):
        return self.state.rho

    @property
    def phi(self):
        return self.state.phi

    @property
    def a(self):
        return self.state.a

    @property
    def m(self):
        return self.state.m1, self.state.m2


Callback = Callable[[PdhgState, Residuals], None]


def _check_finite(state: PdhgState) -> None:
    for name in ("rho", "m1", "m2", "phi", "a"):
        if not np.all(np.isfinite(getattr(state, name))):
            raise DivergenceError(name, state.iteration)


def solve(
    spec: ProblemSpec,
    steps: StepSizes | None = None,
    max_iters: int = 5000,
    tol: float = 1e-4,
    callbacks: Sequence[Callback] = (),
    history_stride: int = 10,
    state: PdhgState | None = None,
    min_iters: int = 1,
    on_record: Callable[[dict], None] | None = None,
) -> SolveResult:
    """Iterate :func:`pdhg_step` until the stopping residual drops to ``tol``.

    The stopping residual is the largest of the continuity defect, the relative
    coefficient fixed-point defect and the relative iterate change. Callbacks
    receive the state and residuals after every iteration; ``on_record``
    receives each history row as it is recorded.
    """
    steps = steps or StepSizes()
    ctx = PdhgContext(spec, steps)
    state = state or initial_state(spec)
    history: list[dict] = []
    res = residuals(state, spec)
    converged = False
    while state.iteration < max_iters:
        state = pdhg_step(state, spec, steps, ctx)
        _check_finite(state)
        res = residuals(state, spec)
        for cb in callbacks:
            cb(state, res)
        done = state.iteration >= min_iters and res.stopping <= tol
        if state.iteration % history_stride == 0 or done or state.iteration == max_iters:
            objective, infinite = saddle_objective(state, spec)
            row = {
                "iter": state.iteration,
                "continuity_res": res.continuity_res,
                "a_fixedpoint_res": res.a_fixedpoint_res,
                "complementarity_res": res.complementarity_res,
                "objective": objective,
                "iterate_change": res.iterate_change,
            }
            history.append(row)
            if on_record is not None:
                on_record(row)
            log.debug("iter %d: cont=%.3e a=%.3e change=%.3e obj=%.6g%s", state.iteration,
                      res.continuity_res, res.a_fixedpoint_res, res.iterate_change, objective,
                      " (infinite)" if infinite else "")
        if done:
            converged = True
            break
    return SolveResult(state, converged, state.iteration, res, history)
