"""Nonlocal first-order mean-field games solved in coefficient space with PDHG."""

from nlmfg.exceptions import ConfigurationError, DivergenceError
from nlmfg.grid import Grid, make_grid
from nlmfg.kernels import FeatureBasis
from nlmfg.pdhg import StepSizes, solve
from nlmfg.problem import ProblemSpec

__version__ = "0.1.0"

__all__ = ["ConfigurationError", "DivergenceError", "FeatureBasis", "Grid", "ProblemSpec",
           "StepSizes", "make_grid", "solve"]
