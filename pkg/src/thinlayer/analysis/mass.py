"""Mass bookkeeping."""

from __future__ import annotations

import numpy as np

from ..fv import State, Trajectory
from ..mesh import Mesh1D, Region

TINY = 1e-300


def total_mass(state, mesh: Mesh1D, regions=None) -> np.ndarray:
    """Per-population mass ``sum_c width_c * phi[n, c]``, optionally restricted to ``regions``."""
    phi = state.phi if isinstance(state, State) else np.atleast_2d(np.asarray(state, dtype=float))
    w = np.asarray(mesh.widths)
    if regions is not None:
        if isinstance(regions, (int, Region)):
            regions = (regions,)
        keep = mesh.mask(*regions)
        return (phi[:, keep] * w[keep]).sum(axis=1)
    return (phi * w).sum(axis=1)


def mass_balance_residual(traj: Trajectory, model=None, mesh: Mesh1D | None = None) -> np.ndarray:
    """Relative per-population mass defect over a trajectory.

    Growth and the fluxes through the two outer faces are integrated with the
    trapezoid rule over the recorded outputs, so the residual measures the
    conservation error of the scheme plus the quadrature error of the output
    schedule (zero for constant integrands).
    """
    mesh = mesh or traj.mesh
    if len(traj.states) < 2:
        raise ValueError("need at least two recorded states")
    t = np.asarray(traj.times)
    m0 = total_mass(traj.states[0], mesh)
    m1 = total_mass(traj.states[-1], mesh)
    source = np.array([g + F[:, 0] - F[:, -1] for g, F in zip(traj.growth, traj.fluxes)])
    gained = (0.5 * (source[1:] + source[:-1]) * np.diff(t)[:, None]).sum(axis=0)
    return np.abs(m1 - m0 - gained) / np.maximum(m0, TINY)
