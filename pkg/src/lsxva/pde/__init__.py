"""Finite-difference engine for the liability-side pricing PDEs."""

from .coefficients import (
    NO_COLLATERAL,
    CollateralSpec,
    Mode,
    PdeCoefficients,
    build_coefficients,
    burgard_kjaer_preset,
    collateral_drift,
    gamma_mapped_treasury_spread,
    generalized_coefficients,
    hull_white_preset,
    piterbarg_preset,
    riskfree_coefficients,
)
from .convergence import ConvergenceRow, convergence_study
from .grid import GridSpec, space_grid, time_grid
from .solver import ValueSurface, delta_at, solve_pde, value_at

__all__ = [
    "NO_COLLATERAL",
    "CollateralSpec",
    "ConvergenceRow",
    "GridSpec",
    "Mode",
    "PdeCoefficients",
    "ValueSurface",
    "build_coefficients",
    "burgard_kjaer_preset",
    "collateral_drift",
    "convergence_study",
    "delta_at",
    "gamma_mapped_treasury_spread",
    "generalized_coefficients",
    "hull_white_preset",
    "piterbarg_preset",
    "riskfree_coefficients",
    "solve_pde",
    "space_grid",
    "time_grid",
    "value_at",
]
