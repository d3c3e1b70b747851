"""Least-L1 estimation of effective membrane mobilities from a reference run."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..effective import PartitionRule, run_effective
from ..errors import ConfigError, SolverError
from ..fv import NO_FLUX, Boundary, State, Trajectory
from ..mesh import Region, build_effective_mesh
from ..model import ModelSpec

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass
class FitResult:
    mu_tilde: np.ndarray
    objective: float
    n_evaluations: int
    sweeps: int
    # Per fitted population, one entry per sweep.
    unimodal: dict[int, list[bool]] = field(default_factory=dict)
    grids: dict[int, list[tuple[list[float], list[float]]]] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "mu_tilde": self.mu_tilde.tolist(),
            "objective": self.objective,
            "n_evaluations": self.n_evaluations,
            "sweeps": self.sweeps,
            "unimodal": {str(k): v for k, v in self.unimodal.items()},
            "grids": {str(k): [{"mu_tilde": g, "objective": j} for g, j in v] for k, v in self.grids.items()},
        }


def is_unimodal(values: Sequence[float]) -> bool:
    """True when the sequence falls and then rises (either part may be empty)."""
    d = np.sign(np.diff(np.asarray(values, dtype=float)))
    d = d[d != 0]
    return not np.any((d[:-1] > 0) & (d[1:] < 0))


class _Objective:
    """``J(mu_tilde) = sum over outputs of the L1 distance on D1 and D3``, memoized."""

    def __init__(self, reference: Trajectory, model: ModelSpec, rule, cfl, dt_max, boundary, engine):
        ref_mesh = reference.mesh
        first, last = ref_mesh.interface_faces[0], ref_mesh.interface_faces[-1]
        L = float(ref_mesh.faces[-1])
        x_m = float(ref_mesh.faces[first])
        self.mesh = build_effective_mesh(L, x_m, first, ref_mesh.n_cells - last)
        keep = ref_mesh.regions != Region.MEMBRANE
        self.ref = [np.asarray(s)[:, keep] for s in reference.states]
        self.times = list(reference.times)
        self.initial = State(self.ref[0], self.times[0])
        self.model, self.rule = model, rule
        self.kw = dict(cfl=cfl, dt_max=dt_max, boundary=boundary, engine=engine)
        self.cache: dict[tuple, float] = {}

    def __call__(self, mt: np.ndarray) -> float:
        key = tuple(float(v) for v in mt)
        if key not in self.cache:
            traj = run_effective(self.model.with_mu_tilde(mt), self.mesh, self.initial, self.times[-1],
                                 self.rule, times=self.times, **self.kw)
            J = math.fsum(float((np.abs(a - b) * self.mesh.widths).sum()) for a, b in zip(traj.states, self.ref))
            if not math.isfinite(J):
                raise SolverError(f"non-finite objective at mu_tilde={list(key)}", traj.times[-1])
            self.cache[key] = J
        return self.cache[key]


def _golden(f, lo: float, hi: float, tol: float, max_iter: int) -> float:
    """Golden-section minimum of ``f(exp(s))`` over ``s in [lo, hi]``; returns log-space abscissa."""
    a, b = lo, hi
    c, d = b - INV_PHI * (b - a), a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if b - a <= tol:
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
    return c if fc <= fd else d


def estimate_effective_mobility(
    reference: Trajectory,
    model: ModelSpec,
    intervals: Sequence[tuple[float, float] | None],
    rule: PartitionRule | None = None,
    n_grid: int = 20,
    tol: float = 1e-3,
    max_iter: int = 50,
    sweeps: int = 5,
    cfl: float = 0.45,
    dt_max: float = 1e-2,
    boundary: Boundary = NO_FLUX,
    engine: str = "compiled",
) -> FitResult:
    """Fit ``mu_tilde`` of the populations that have a search interval.

    Populations whose interval is ``None`` keep the value in ``model``.  Each
    coordinate is first scanned on a geometric grid of ``n_grid`` points (the
    scan is kept in the result together with a unimodality flag), then refined
    by golden section in log space between the neighbours of the best grid
    point until the bracket is narrower than ``tol`` relative.  Sweeps stop
    early once no coordinate moves by more than ``tol``.
    """
    N = model.n_populations
    if len(intervals) != N:
        raise ConfigError([("fit.intervals", f"expected {N} entries (null for populations kept fixed)")])
    problems = []
    for n, iv in enumerate(intervals):
        if iv is None:
            continue
        a, b = iv
        if not (a > 0 and b > a and math.isfinite(b)):
            problems.append((f"fit.intervals[{n}]", f"need 0 < a < b, got {list(iv)}"))
    if not any(iv is not None for iv in intervals):
        problems.append(("fit.intervals", "no population to fit"))
    if n_grid < 3:
        problems.append(("fit.n_grid", "must be >= 3"))
    if problems:
        raise ConfigError(problems)
    if len(reference.states) < 2:
        raise ConfigError([("fit.reference", "reference needs at least two outputs")])

    J = _Objective(reference, model, rule or PartitionRule(), cfl, dt_max, boundary, engine)
    current = model.mu_tilde().astype(float)
    fitted = [n for n, iv in enumerate(intervals) if iv is not None]
    result = FitResult(current, math.inf, 0, 0, {n: [] for n in fitted}, {n: [] for n in fitted})

    for sweep in range(sweeps):
        moved = 0.0
        for n in fitted:
            a, b = intervals[n]

            def f(log_mt, n=n):
                trial = current.copy()
                trial[n] = math.exp(log_mt)
                return J(trial)

            grid = np.geomspace(a, b, n_grid)
            vals = [f(math.log(g)) for g in grid]
            result.unimodal[n].append(is_unimodal(vals))
            result.grids[n].append((grid.tolist(), vals))
            i = int(np.argmin(vals))
            lo = math.log(grid[max(i - 1, 0)])
            hi = math.log(grid[min(i + 1, n_grid - 1)])
            best = math.exp(_golden(f, lo, hi, tol, max_iter))
            if f(math.log(best)) > vals[i]:
                best = float(grid[i])
            moved = max(moved, abs(best - current[n]) / current[n])
            current[n] = best
        result.sweeps = sweep + 1
        if len(fitted) == 1 or moved <= tol:
            break
    result.mu_tilde = current
    result.objective = J(current)
    result.n_evaluations = len(J.cache)
    return result
