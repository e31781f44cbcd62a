from nlmfg.pdhg.elliptic import PhiSolver, continuity_defect, prox_phi
from nlmfg.pdhg.prox import prox_a, prox_rho_m, scalar_prox
from nlmfg.pdhg.solver import (
    PdhgContext,
    PdhgState,
    Residuals,
    SolveResult,
    StepSizes,
    initial_state,
    pdhg_step,
    residuals,
    saddle_objective,
    solve,
)

__all__ = [
    "PdhgContext", "PdhgState", "PhiSolver", "Residuals", "SolveResult", "StepSizes",
    "continuity_defect", "initial_state", "pdhg_step", "prox_a", "prox_phi", "prox_rho_m",
    "residuals", "saddle_objective", "scalar_prox", "solve",
]
