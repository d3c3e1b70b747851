"""Closed-form steady state for one population with a linear law.

With ``p(phi) = k phi`` the flux is ``F = -mu d(u)/dx`` for ``u = k phi^2 / 2``,
so ``u`` is piecewise linear at steady state and the three resistances
(D1, interface, D3) act in series.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..effective import run_effective
from ..errors import ConfigError, ModelDomainError
from ..fv import Boundary, State, Trajectory
from ..mesh import build_effective_mesh
from ..model import ModelSpec, PopulationSpec, PressureLaw


@dataclass(frozen=True)
class SteadyOracle:
    L: float
    x_m: float
    phi_L_bc: float
    phi_R_bc: float
    mu1: float = 1.0
    mu3: float = 1.0
    mu_tilde: float = 1.0
    k: float = 1.0

    def __post_init__(self):
        if self.phi_L_bc < 0 or self.phi_R_bc < 0:
            raise ModelDomainError("boundary values must be nonnegative")
        problems = [(name, "must be positive") for name in ("L", "mu1", "mu3", "mu_tilde", "k")
                    if not getattr(self, name) > 0]
        if not 0 < self.x_m < self.L:
            problems.append(("x_m", "must lie in (0, L)"))
        if problems:
            raise ConfigError(problems)

    def model(self) -> ModelSpec:
        pop = PopulationSpec("oracle", self.mu1, self.mu3, self.mu_tilde, PressureLaw.power(self.k, 1.0))
        return ModelSpec((pop,))


@dataclass(frozen=True)
class OracleSolution:
    phi_minus: float
    phi_plus: float
    flux: float
    u_minus: float
    u_plus: float
    profile: Callable[[np.ndarray], np.ndarray]


def solve_steady_oracle(oracle: SteadyOracle) -> OracleSolution:
    o = oracle
    uL, uR = 0.5 * o.k * o.phi_L_bc**2, 0.5 * o.k * o.phi_R_bc**2
    l1, l3 = o.x_m, o.L - o.x_m
    # Unknowns (u-, u+); both flux equalities written as linear rows.
    A = np.array([
        [o.mu1 / l1 + o.mu_tilde, -o.mu_tilde],
        [o.mu_tilde, -(o.mu_tilde + o.mu3 / l3)],
    ])
    b = np.array([o.mu1 / l1 * uL, -o.mu3 / l3 * uR])
    um, up = np.linalg.solve(A, b)
    um, up = max(float(um), 0.0), max(float(up), 0.0)
    F = o.mu_tilde * (um - up)

    def profile(x):
        x = np.asarray(x, dtype=float)
        u = np.where(
            x < o.x_m,
            uL + (um - uL) * x / l1,
            up + (uR - up) * (x - o.x_m) / l3,
        )
        return np.sqrt(2.0 * np.maximum(u, 0.0) / o.k)

    return OracleSolution(math.sqrt(2 * um / o.k), math.sqrt(2 * up / o.k), F, um, up, profile)


@dataclass(frozen=True)
class OracleComparison:
    n: int
    linf_error: float
    steady: bool
    time: float
    n_steps: int
    x: np.ndarray
    phi: np.ndarray
    exact: np.ndarray
    trajectory: Trajectory


def compare_with_oracle(
    oracle: SteadyOracle, n: int, steady_tol: float = 1e-10, cfl: float = 0.45,
    dt_max: float = 1e-2, t_max: float = 1e3,
) -> OracleComparison:
    """March the effective solver with Dirichlet data to steady state on ``n1 = n3 = n``."""
    mesh = build_effective_mesh(oracle.L, oracle.x_m, n, n)
    sol = solve_steady_oracle(oracle)
    # Start from the straight line between the boundary values.
    x = mesh.centers
    phi0 = oracle.phi_L_bc + (oracle.phi_R_bc - oracle.phi_L_bc) * x / oracle.L
    traj = run_effective(
        oracle.model(), mesh, State(phi0[None, :]), t_max,
        boundary=Boundary.dirichlet([oracle.phi_L_bc], [oracle.phi_R_bc]),
        cfl=cfl, dt_max=dt_max, steady_tol=steady_tol,
    )
    phi = traj.states[-1][0]
    exact = sol.profile(x)
    return OracleComparison(
        n, float(np.max(np.abs(phi - exact))), bool(traj.steady), traj.times[-1], traj.n_steps, x, phi, exact, traj,
    )
