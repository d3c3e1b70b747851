"""Flux constancy across the resolved membrane."""

from __future__ import annotations

import numpy as np

from ..errors import ConfigError
from ..fv import Trajectory

MEAN_FLOOR = 1e-14


def membrane_flux_constancy(traj: Trajectory, index: int = -1) -> np.ndarray:
    """Max relative deviation of the membrane-interior face fluxes from their mean.

    Evaluated per population on output ``index`` (the final one by default).
    A mean below ``1e-14`` in magnitude reports 0.
    """
    mesh = traj.mesh
    if mesh.is_effective:
        raise ConfigError([("geometry.epsilon", "flux constancy needs a resolved membrane")])
    a, b = mesh.interface_faces
    if b - a < 3:
        raise ConfigError([("geometry.n2", "need n2 >= 3 for two membrane-interior faces")])
    F = traj.fluxes[index][:, a + 1:b]
    mean = F.mean(axis=1)
    dev = np.zeros(len(mean))
    ok = np.abs(mean) >= MEAN_FLOOR
    dev[ok] = np.abs(F[ok] - mean[ok, None]).max(axis=1) / np.abs(mean[ok])
    return dev
