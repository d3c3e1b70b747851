"""Full-versus-effective comparison as the membrane thickness shrinks."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from ..effective import PartitionRule, run_effective
from ..errors import ConfigError, SolverError
from ..fv import NO_FLUX, Boundary, State
from ..full import run_full
from ..mesh import Mesh1D, Region, build_effective_mesh, build_full_mesh
from ..model import ModelSpec


@dataclass(frozen=True)
class Geometry:
    L: float = 1.0
    x_m: float = 0.5
    n1: int = 100
    n2: int = 32
    n3: int = 100


@dataclass(frozen=True)
class ConvergenceRow:
    epsilon: float
    error_D1: np.ndarray
    error_D3: np.ndarray
    error_total: np.ndarray
    order: np.ndarray | None  # against the previous (coarser) row


@dataclass
class ConvergenceTable:
    rows: list[ConvergenceRow] = field(default_factory=list)

    @property
    def epsilons(self) -> np.ndarray:
        return np.array([r.epsilon for r in self.rows])

    @property
    def errors(self) -> np.ndarray:
        """Total L1 errors, shape ``(n_rows, N)``."""
        return np.array([r.error_total for r in self.rows])

    @property
    def orders(self) -> np.ndarray:
        """Empirical orders between consecutive rows, shape ``(n_rows - 1, N)``."""
        return np.array([r.order for r in self.rows[1:]])

    def monotone(self, slack_first: float = 0.10) -> np.ndarray:
        """Per population: errors non-increasing, with relative slack on the coarsest pair."""
        e = self.errors
        ok = np.ones(e.shape[1], dtype=bool)
        for i in range(1, len(e)):
            slack = slack_first if i == 1 else 0.0
            ok &= e[i] <= e[i - 1] * (1 + slack)
        return ok

    def to_dict(self) -> list[dict]:
        return [
            {
                "epsilon": r.epsilon,
                "L1_error_D1": r.error_D1.tolist(),
                "L1_error_D3": r.error_D3.tolist(),
                "L1_error_total": r.error_total.tolist(),
                "empirical_order": None if r.order is None else r.order.tolist(),
            }
            for r in self.rows
        ]


def outer_l1(full_phi: np.ndarray, full_mesh: Mesh1D, eff_phi: np.ndarray, eff_mesh: Mesh1D):
    """L1 distance on D1 and D3 between a full and an effective state.

    The outer cells of the two meshes correspond one to one (matched ``n1``
    and ``n3``); D3 of the full mesh is the affine image of the effective D3,
    so differences are weighted with the effective widths.
    """
    keep = full_mesh.regions != Region.MEMBRANE
    if keep.sum() != eff_mesh.n_cells:
        raise ConfigError([("geometry", "full and effective meshes have different outer cell counts")])
    diff = np.abs(full_phi[:, keep] - eff_phi) * eff_mesh.widths
    d1 = eff_mesh.regions == Region.D1
    return diff[:, d1].sum(axis=1), diff[:, ~d1].sum(axis=1)


def _full_final(args):
    model, geom, eps, initial, t_end, cfl, dt_max, boundary, engine = args
    mesh = build_full_mesh(geom.L, geom.x_m, eps, geom.n1, geom.n2, geom.n3)
    try:
        traj = run_full(model, mesh, initial(mesh), t_end, cfl=cfl, dt_max=dt_max, boundary=boundary, engine=engine)
    except SolverError as exc:
        exc.epsilon = eps
        exc.args = (f"epsilon={eps!r}: {exc.args[0]}",)
        raise
    return mesh, traj.states[-1]


def _map(fn, items, workers: int):
    if workers and workers > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))
    return [fn(it) for it in items]


def convergence_study(
    model: ModelSpec,
    geometry: Geometry,
    initial: Callable[[Mesh1D], State],
    epsilons: Sequence[float],
    t_end: float,
    rule: PartitionRule | None = None,
    cfl: float = 0.45,
    dt_max: float = 1e-2,
    boundary: Boundary = NO_FLUX,
    workers: int = 1,
    engine: str = "compiled",
) -> ConvergenceTable:
    """Run the full model for each ``epsilon`` and compare with one effective run.

    ``initial`` builds the initial state on a given mesh; it must leave the
    membrane empty so that both models start with the same mass.  With
    ``workers > 1`` the full runs are farmed out to processes (``initial``
    must then be picklable); the table is assembled in the given order.
    """
    eps = [float(e) for e in epsilons]
    if not eps:
        raise ConfigError([("epsilons", "at least one value is required")])
    if any(not e > 0 for e in eps):
        raise ConfigError([("epsilons", "every epsilon must be positive; epsilon = 0 is the effective model itself")])
    if any(b >= a for a, b in zip(eps, eps[1:])):
        raise ConfigError([("epsilons", "must be strictly decreasing")])
    eff_mesh = build_effective_mesh(geometry.L, geometry.x_m, geometry.n1, geometry.n3)
    eff = run_effective(model, eff_mesh, initial(eff_mesh), t_end, rule, cfl=cfl, dt_max=dt_max,
                        boundary=boundary, engine=engine).states[-1]
    jobs = [(model, geometry, e, initial, t_end, cfl, dt_max, boundary, engine) for e in eps]
    results = _map(_full_final, jobs, workers)
    table = ConvergenceTable()
    prev = None
    for e, (mesh, phi) in zip(eps, results):
        e1, e3 = outer_l1(phi, mesh, eff, eff_mesh)
        tot = e1 + e3
        order = None
        if prev is not None:
            with np.errstate(divide="ignore", invalid="ignore"):
                order = np.log(prev[1] / tot) / np.log(prev[0] / e)
        table.rows.append(ConvergenceRow(e, e1, e3, tot, order))
        prev = (e, tot)
    return table
