"""Hessian quotient equations sigma_k(D^2 u) / sigma_l(D^2 u) = f with Robin and Neumann data."""

from .config import RunConfig, load_config
from .estimates import (
    CATALOG,
    audit_solution,
    bounds_for,
    c0_bound,
    convergence_study,
    epsilon_uniformity_study,
)
from .expr import parse_expression
from .geometry import ConvexityClass, Domain, convexity_class
from .grid import Grid
from .inequalities import run_suite
from .solver import (
    BoundaryMode,
    DiscreteField,
    SolveReport,
    SolverConfig,
    newton_solve,
    residual,
    solve_classical_neumann,
    solve_homotopy,
)
from .symmetric import HessianPair, hessian_quotient, hessian_quotient_gradient

__version__ = "0.1.0"

__all__ = [
    "CATALOG",
    "BoundaryMode",
    "ConvexityClass",
    "DiscreteField",
    "Domain",
    "Grid",
    "HessianPair",
    "RunConfig",
    "SolveReport",
    "SolverConfig",
    "audit_solution",
    "bounds_for",
    "c0_bound",
    "convergence_study",
    "convexity_class",
    "epsilon_uniformity_study",
    "hessian_quotient",
    "hessian_quotient_gradient",
    "load_config",
    "newton_solve",
    "parse_expression",
    "residual",
    "run_suite",
    "solve_classical_neumann",
    "solve_homotopy",
]
