"""Diagnostics and verification tools."""

from .convergence import ConvergenceRow, ConvergenceTable, Geometry, convergence_study, outer_l1
from .fit import FitResult, estimate_effective_mobility, is_unimodal
from .flux import membrane_flux_constancy
from .mass import mass_balance_residual, total_mass
from .oracle import OracleComparison, OracleSolution, SteadyOracle, compare_with_oracle, solve_steady_oracle

__all__ = [
    "ConvergenceRow", "ConvergenceTable", "FitResult", "Geometry", "OracleComparison", "OracleSolution",
    "SteadyOracle", "compare_with_oracle", "convergence_study", "estimate_effective_mobility",
    "is_unimodal", "mass_balance_residual", "membrane_flux_constancy", "outer_l1",
    "solve_steady_oracle", "total_mass",
]
