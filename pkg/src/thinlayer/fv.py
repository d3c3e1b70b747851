"""Conservative finite-volume machinery shared by the full and effective solvers.

The mass flux through a face between cells ``L`` and ``R`` is

    F = -T * phi_up * (s_R - s_L),     s = P(Phi) + p^n(phi^n),

where ``T`` is the series (distance-weighted harmonic) transmissibility of the
two half cells and ``phi_up`` is the upwind volume fraction picked by the
transport direction ``-(s_R - s_L)``.  Positive fluxes point towards +x.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import _kernel as _k
from .errors import ConfigError, NumericalBlowup, SchemeFailure
from .mesh import Mesh1D, Region
from .model import ModelSpec

NEG_TOL = 1e-13
D_MIN = 1e-12
TINY = 1e-300


@dataclass(frozen=True)
class State:
    """Volume fractions ``phi[n, c]`` of every population plus the time."""

    phi: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        phi = np.array(self.phi, dtype=float)
        if phi.ndim == 1:
            phi = phi[None, :]
        object.__setattr__(self, "phi", phi)

    @property
    def total(self) -> np.ndarray:
        return self.phi.sum(axis=0)


@dataclass(frozen=True)
class Boundary:
    """Outer boundary condition.

    ``no-flux`` (default) or ``dirichlet`` with per-population boundary values
    pinned at the outer faces (ghost value at half a cell from the first and
    last cell centers).
    """

    kind: str = "no-flux"
    left: tuple[float, ...] = ()
    right: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind not in ("no-flux", "dirichlet"):
            raise ConfigError([("boundary.kind", f"unknown boundary kind {self.kind!r}")])
        object.__setattr__(self, "left", tuple(float(v) for v in self.left))
        object.__setattr__(self, "right", tuple(float(v) for v in self.right))
        if self.kind == "dirichlet":
            bad = [v for v in self.left + self.right if not (math.isfinite(v) and v >= 0)]
            if bad or not self.left or len(self.left) != len(self.right):
                raise ConfigError([("boundary", "dirichlet values must be nonnegative, one per population per side")])

    @classmethod
    def dirichlet(cls, left, right) -> "Boundary":
        return cls("dirichlet", tuple(np.atleast_1d(left)), tuple(np.atleast_1d(right)))


NO_FLUX = Boundary()


def mobility_field(mesh: Mesh1D, model: ModelSpec) -> np.ndarray:
    """Cell mobilities ``(N, n_cells)``: mu1 in D1, mu3 in D3, eps * mu_tilde in the membrane."""
    mob = np.empty((model.n_populations, mesh.n_cells))
    for n, pop in enumerate(model.populations):
        mob[n] = np.select(
            [mesh.regions == Region.D1, mesh.regions == Region.D3],
            [pop.mu1, pop.mu3],
            mesh.epsilon * pop.mu_tilde_13,
        )
    return mob


def cell_mobility(mesh: Mesh1D, model: ModelSpec, n: int, c: int) -> float:
    pop = model.populations[n]
    region = mesh.regions[c]
    if region == Region.D1:
        return pop.mu1
    if region == Region.D3:
        return pop.mu3
    return mesh.epsilon * pop.mu_tilde_13


InterfaceHook = Callable[[np.ndarray, np.ndarray], np.ndarray]


class FVScheme:
    """Precomputed stencil data for one (model, mesh, boundary) triple.

    ``interface`` optionally overrides the flux through one face: it maps the
    adjacent cell values ``(phi_L, phi_R)`` to the mass flux of every
    population through that face (positive towards +x).
    """

    def __init__(
        self,
        model: ModelSpec,
        mesh: Mesh1D,
        boundary: Boundary = NO_FLUX,
        interface: tuple[int, InterfaceHook] | None = None,
        interface_rate: Callable[[np.ndarray, np.ndarray], float] | None = None,
    ):
        self.model = model
        self.mesh = mesh
        self.boundary = boundary
        self.N = model.n_populations
        self.mob = mobility_field(mesh, model)
        w = mesh.widths
        self.widths = w
        self.inv_w = 1.0 / w
        # Series resistance of the two half cells adjacent to each interior face.
        self.trans = 1.0 / (0.5 * w[:-1] / self.mob[:, :-1] + 0.5 * w[1:] / self.mob[:, 1:])
        self.P_law = model.P_law
        self.p_laws = [pop.p_law for pop in model.populations]
        self.growth = []
        for n, pop in enumerate(model.populations):
            for region, law in (
                (Region.D1, pop.growth1),
                (Region.MEMBRANE, pop.growth_membrane),
                (Region.D3, pop.growth3),
            ):
                mask = mesh.regions == region
                if not law.is_zero and mask.any():
                    self.growth.append((n, mask, law))
        self.interface = interface
        self.interface_rate = interface_rate
        # Set by the effective solver so the compiled kernel can evaluate the closure.
        self.closure = None
        if boundary.kind == "dirichlet":
            if len(boundary.left) != self.N:
                raise ConfigError([("boundary", f"expected {self.N} dirichlet values per side")])
            bl = np.array(boundary.left)
            br = np.array(boundary.right)
            self.bc_phi = (bl, br)
            self.bc_stress = (self._stress_vec(bl), self._stress_vec(br))
            self.bc_trans = (2.0 * self.mob[:, 0] / w[0], 2.0 * self.mob[:, -1] / w[-1])
        # Dirichlet boundary cells see a half-cell stencil on the outer face.
        self.dt_factor = np.ones(mesh.n_cells)
        if boundary.kind == "dirichlet":
            self.dt_factor[0] = self.dt_factor[-1] = 1.5

    def _stress_vec(self, phi_n: np.ndarray) -> np.ndarray:
        Phi = phi_n.sum()
        base = self.P_law._value(np.asarray(Phi))
        return np.array([base + law._value(np.asarray(v)) for law, v in zip(self.p_laws, phi_n)])

    def stresses(self, phi: np.ndarray) -> np.ndarray:
        Phi = phi.sum(axis=0)
        s = np.empty_like(phi)
        base = None if self.P_law.is_zero else self.P_law._value(Phi)
        for n, law in enumerate(self.p_laws):
            if law.is_zero:
                s[n] = base
            elif base is None:
                s[n] = law._value(phi[n])
            else:
                s[n] = base + law._value(phi[n])
        return s

    def fluxes(self, phi: np.ndarray, time: float = 0.0) -> np.ndarray:
        """Mass flux through every face, shape ``(N, n_faces)``."""
        s = self.stresses(phi)
        ds = s[:, 1:] - s[:, :-1]
        up = np.where(ds < 0, phi[:, :-1], phi[:, 1:])
        F = np.zeros((self.N, self.mesh.n_faces))
        F[:, 1:-1] = -self.trans * up * ds
        if self.boundary.kind == "dirichlet":
            (bl, br), (sl, sr), (tl, tr) = self.bc_phi, self.bc_stress, self.bc_trans
            dl = s[:, 0] - sl
            F[:, 0] = -tl * np.where(dl < 0, bl, phi[:, 0]) * dl
            dr = sr - s[:, -1]
            F[:, -1] = -tr * np.where(dr < 0, phi[:, -1], br) * dr
        if self.interface is not None:
            f, hook = self.interface
            F[:, f] = hook(phi[:, f - 1], phi[:, f])
        if not np.isfinite(F).all():
            bad = np.argwhere(~np.isfinite(F))[0]
            raise NumericalBlowup("non-finite flux", time, int(bad[1]))
        return F

    def growth_rate(self, phi: np.ndarray) -> np.ndarray:
        G = np.zeros_like(phi)
        if self.growth:
            Phi = phi.sum(axis=0)
            for n, mask, law in self.growth:
                G[n, mask] = law._eval(phi[n, mask], Phi[mask])
        return G

    def stable_dt(self, phi: np.ndarray, cfl: float, dt_max: float) -> float:
        Phi = phi.sum(axis=0)
        PPhi = self.P_law._deriv(Phi) * Phi
        D = np.empty_like(phi)
        for n, law in enumerate(self.p_laws):
            D[n] = PPhi + phi[n] * law._deriv(phi[n])
        D = np.maximum(D, D_MIN)
        w = self.widths
        dt = cfl * np.min(w * w / (2.0 * self.mob * D * self.dt_factor + TINY))
        if self.growth:
            rates = [np.max(np.abs(law.rate * (1.0 - Phi[mask] / law.capacity))) for _, mask, law in self.growth]
            rmax = max(rates)
            if rmax > 0:
                dt = min(dt, cfl / rmax)
        if self.interface_rate is not None:
            f = self.interface[0]
            rate = self.interface_rate(phi[:, f - 1], phi[:, f])
            dt = min(dt, cfl * min(w[f - 1], w[f]) / (rate + TINY))
        return float(min(dt, dt_max))

    def step(self, phi: np.ndarray, dt: float, time: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
        """Forward-Euler update; returns the new field and the face fluxes used."""
        F = self.fluxes(phi, time)
        new = phi - dt / self.widths * (F[:, 1:] - F[:, :-1])
        if self.growth:
            new += dt * self.growth_rate(phi)
        lo = new.min()
        if lo < 0.0:
            if lo < -NEG_TOL:
                n, c = np.unravel_index(np.argmin(new), new.shape)
                raise SchemeFailure(
                    f"volume fraction {lo:.3e} below tolerance in population {n}, cell {c}", time + dt
                )
            new[new < 0.0] = 0.0
        if not np.isfinite(new).all():
            raise NumericalBlowup("non-finite volume fraction", time + dt)
        return new, F


def _kernel_args(scheme: FVScheme) -> tuple:
    N, nc = scheme.N, scheme.mesh.n_cells
    P = scheme.P_law
    Pk, Pg = (0.0, 1.0) if P.is_zero else (P.k, P.gamma)
    pk = np.array([0.0 if law.is_zero else law.k for law in scheme.p_laws])
    pg = np.array([1.0 if law.is_zero else law.gamma for law in scheme.p_laws])
    grate = np.zeros((N, nc))
    gcap = np.ones((N, nc))
    for n, mask, law in scheme.growth:
        grate[n, mask] = law.rate
        gcap[n, mask] = law.capacity
    dirichlet = scheme.boundary.kind == "dirichlet"
    if dirichlet:
        (bl, br), (sl, sr), (tl, tr) = scheme.bc_phi, scheme.bc_stress, scheme.bc_trans
    else:
        bl = br = sl = sr = tl = tr = np.zeros(N)
    if scheme.closure is not None:
        c = scheme.closure
        iface, mt, rule = c["face"], c["mu_tilde"], c["rule"]
        alpha, beta, mt_max = c["alpha"], c["beta"], c["mt_max"]
    elif scheme.interface is not None:
        raise ConfigError([("interface", "custom interface hooks need the numpy engine")])
    else:
        iface, rule, mt_max = -1, 0, 0.0
        mt = alpha = beta = np.zeros(N)
    return (
        scheme.widths, scheme.mob, scheme.dt_factor, scheme.trans, Pk, Pg, pk, pg,
        grate, gcap, bool(scheme.growth), dirichlet, bl, br, sl, sr, tl, tr,
        iface, mt, rule, alpha, beta, mt_max,
    )


@dataclass
class Trajectory:
    """Recorded output of a run.

    ``fluxes[k]`` holds the face fluxes evaluated on ``states[k]`` and
    ``growth[k]`` the domain integral of the net growth on that state.
    """

    mesh: Mesh1D
    model: ModelSpec
    times: list[float] = field(default_factory=list)
    states: list[np.ndarray] = field(default_factory=list)
    fluxes: list[np.ndarray] = field(default_factory=list)
    growth: list[np.ndarray] = field(default_factory=list)
    n_steps: int = 0
    dt_min: float = math.inf
    dt_max: float = 0.0
    dt_sum: float = 0.0
    max_total: float = 0.0
    phi_max_exceeded: int = 0
    steady: bool | None = None

    @property
    def final(self) -> State:
        return State(self.states[-1], self.times[-1])

    def as_states(self) -> list[State]:
        return [State(p, t) for p, t in zip(self.states, self.times)]

    def dt_summary(self) -> dict:
        return {
            "n_steps": self.n_steps,
            "dt_min": self.dt_min if self.n_steps else 0.0,
            "dt_max": self.dt_max,
            "dt_mean": self.dt_sum / self.n_steps if self.n_steps else 0.0,
        }


def output_times(t_end: float, output_every: float | None = None) -> list[float]:
    if t_end < 0:
        raise ConfigError([("time.t_end", "must be >= 0")])
    if t_end == 0:
        return [0.0]
    if not output_every:
        return [0.0, float(t_end)]
    k_max = int(math.floor(t_end / output_every + 1e-9))
    times = [k * output_every for k in range(k_max + 1)]
    times = [t for t in times if t < t_end * (1 - 1e-12)]
    return times + [float(t_end)]


def integrate(
    scheme: FVScheme,
    initial: State,
    times: Sequence[float],
    cfl: float = 0.45,
    dt_max: float = 1e-2,
    steady_tol: float | None = None,
    max_steps: int | None = None,
    engine: str = "compiled",
) -> Trajectory:
    """March ``initial`` through the output schedule ``times``.

    Steps are truncated so that every output time (and the final time) is hit
    exactly.  With ``steady_tol`` the run stops early, recording the current
    state, once ``max |dphi/dt| <= steady_tol`` (checked every 50 steps).
    ``engine="numpy"`` runs the pure-numpy reference step instead of the
    compiled loop; both produce the same trajectory up to rounding.
    """
    if not 0 < cfl <= 1:
        raise ConfigError([("time.cfl", f"must lie in (0, 1], got {cfl!r}")])
    if not dt_max > 0:
        raise ConfigError([("time.dt_max", f"must be positive, got {dt_max!r}")])
    phi = np.array(initial.phi, dtype=float)
    if phi.shape != (scheme.N, scheme.mesh.n_cells):
        raise ConfigError([("initial", f"expected shape {(scheme.N, scheme.mesh.n_cells)}, got {phi.shape}")])
    if phi.min() < 0:
        raise ConfigError([("initial", "volume fractions must be nonnegative")])
    traj = Trajectory(scheme.mesh, scheme.model)
    t = float(initial.time)
    w = scheme.widths

    def record(phi_now, t_now):
        traj.times.append(t_now)
        traj.states.append(phi_now.copy())
        traj.fluxes.append(scheme.fluxes(phi_now, t_now))
        traj.growth.append((scheme.growth_rate(phi_now) * w).sum(axis=1))

    traj.max_total = float(phi.sum(axis=0).max())
    record(phi, t)
    advance = _compiled_advance if engine == "compiled" else _numpy_advance
    stats = np.array([0.0, math.inf, 0.0, 0.0, traj.max_total, 0.0])
    args = _kernel_args(scheme) if engine == "compiled" else scheme
    for target in (tt for tt in times if tt > t):
        status, t = advance(
            phi, t, float(target), args, cfl, dt_max, scheme.model.phi_max,
            steady_tol or 0.0, max_steps or 0, stats,
        )
        traj.n_steps = int(stats[0])
        traj.dt_min, traj.dt_max, traj.dt_sum = stats[1], stats[2], stats[3]
        traj.max_total, traj.phi_max_exceeded = float(stats[4]), int(stats[5])
        record(phi, t)
        if status == _k.STEADY:
            traj.steady = True
            return traj
        if status == _k.MAX_STEPS:
            break
    if steady_tol is not None:
        traj.steady = False
    return traj


def _compiled_advance(phi, t, target, args, cfl, dt_max, phi_max, steady_tol, max_steps, stats):
    info = np.zeros(3)
    status, t_new = _k.advance(
        phi, t, target, *args, cfl, dt_max, phi_max, steady_tol, 50, max_steps, stats, info
    )
    if status == _k.NEGATIVE:
        raise SchemeFailure(
            f"volume fraction {info[2]:.3e} below tolerance in population {int(info[0])}, cell {int(info[1])}",
            t_new,
        )
    if status == _k.NONFINITE:
        raise NumericalBlowup("non-finite flux or volume fraction", t_new, int(info[1]))
    return status, t_new


def _numpy_advance(phi, t, target, scheme, cfl, dt_max, phi_max, steady_tol, max_steps, stats):
    while True:
        dt = scheme.stable_dt(phi, cfl, dt_max)
        hit = t + dt >= target * (1 - 1e-14)
        if hit:
            dt = target - t
        if dt <= 0:
            return _k.OK, target
        new, _ = scheme.step(phi, dt, t)
        stats[0] += 1
        check = steady_tol > 0 and int(stats[0]) % 50 == 0
        rate = float(np.max(np.abs(new - phi))) / dt if check else math.inf
        phi[...] = new
        tot = float(phi.sum(axis=0).max())
        stats[4] = max(stats[4], tot)
        if tot > phi_max + 1e-10:
            stats[5] += 1
        stats[1], stats[2], stats[3] = min(stats[1], dt), max(stats[2], dt), stats[3] + dt
        t = target if hit else t + dt
        if check and rate <= steady_tol:
            return _k.STEADY, t
        if hit:
            return _k.OK, t
        if max_steps and stats[0] >= max_steps:
            return _k.MAX_STEPS, t
