"""Multi-population degenerate diffusion through a thin membrane.

Two solvers share one finite-volume core: ``run_full`` resolves the membrane
``[x_m, x_m + eps]``; ``run_effective`` replaces it by a nonlinear transmission
condition at ``x_m``.
"""

from .effective import PartitionRule, interface_flux, make_scheme, run_effective, stable_dt_effective, step_effective
from .errors import (
    ConfigError, InvalidModelError, ModelDomainError, NumericalBlowup, SchemeFailure, SolverError, ThinLayerError,
)
from .full import face_flux_full, interface_records, run_full, stable_dt, step_full
from .fv import Boundary, State, Trajectory
from .mesh import Mesh1D, Region, build_effective_mesh, build_full_mesh
from .model import (
    Case, GrowthLaw, ModelSpec, PopulationSpec, PressureLaw, classify_case, growth_eval, potential,
    pressure_deriv, pressure_eval,
)

__version__ = "0.1.0"

__all__ = [
    "Boundary", "Case", "ConfigError", "GrowthLaw", "InvalidModelError", "Mesh1D", "ModelDomainError",
    "ModelSpec", "NumericalBlowup", "PartitionRule", "PopulationSpec", "PressureLaw", "Region", "SchemeFailure",
    "SolverError", "State", "ThinLayerError", "Trajectory", "build_effective_mesh", "build_full_mesh",
    "classify_case", "face_flux_full", "growth_eval", "interface_flux", "interface_records", "make_scheme",
    "potential", "pressure_deriv", "pressure_eval", "run_effective", "run_full", "stable_dt",
    "stable_dt_effective", "step_effective", "step_full",
]
