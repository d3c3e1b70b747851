"""Effective-interface solver.

The membrane is collapsed onto the face at ``x_m``.  The flux through that
face comes from the nonlinear Kedem-Katchalsky type closure

    Q^n = mu_tilde^n * (alpha^n Pi(Phi_R) - beta^n Pi(Phi_L) + pi^n(phi^n_R) - pi^n(phi^n_L))

with ``sum(alpha) == sum(beta) == 1``.  ``Q^n`` is the gradient-oriented flux
``mu phi d(P + p^n)/dx`` along the normal pointing into D3, so the mass flux
into D3 is ``-Q^n``.  Dividing by ``mu_tilde^n`` and summing gives
``[[Pi + sum_n pi^n]]`` whatever the partition weights.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._kernel import RULE_CODES
from .errors import ConfigError
from .fv import NO_FLUX, Boundary, FVScheme, State, Trajectory, integrate, output_times
from .mesh import Mesh1D
from .model import ModelSpec

RULE_KINDS = ("fraction-weighted", "fixed")


@dataclass(frozen=True)
class PartitionRule:
    """How the total-pressure potential jump is split between populations.

    ``fraction-weighted``: ``alpha^n = phi^n_R / Phi_R``, ``beta^n = phi^n_L / Phi_L``
    (``1/N`` in vacuum).

    ``fixed``: user-supplied constant ``alpha``, ``beta``.  Constant weights
    do not vanish with ``phi^n``, so they can push a population that is absent
    on the upstream side below zero; the scheme then stops with
    ``SchemeFailure``.  With ``alpha != beta`` equal traces still carry a flux.
    """

    kind: str = "fraction-weighted"
    alpha: tuple[float, ...] = ()
    beta: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind not in RULE_KINDS:
            raise ConfigError([("partition.kind", f"unknown partition rule {self.kind!r}")])
        object.__setattr__(self, "alpha", tuple(float(a) for a in self.alpha))
        object.__setattr__(self, "beta", tuple(float(b) for b in self.beta))
        if self.kind == "fixed":
            problems = []
            for name, arr in (("alpha", self.alpha), ("beta", self.beta)):
                if not arr:
                    problems.append((f"partition.{name}", "required for a fixed rule"))
                elif abs(math.fsum(arr) - 1.0) > 1e-14:
                    problems.append((f"partition.{name}", f"must sum to 1, sums to {math.fsum(arr)!r}"))
            if len(self.alpha) != len(self.beta):
                problems.append(("partition", "alpha and beta must have equal length"))
            if problems:
                raise ConfigError(problems)

    @classmethod
    def fixed(cls, alpha, beta) -> "PartitionRule":
        return cls("fixed", tuple(alpha), tuple(beta))

    def weights(self, phi_L: np.ndarray, phi_R: np.ndarray, model: ModelSpec):
        N = len(phi_L)
        if self.kind == "fixed":
            if len(self.alpha) != N:
                raise ConfigError([("partition.alpha", f"expected {N} weights")])
            return np.array(self.alpha), np.array(self.beta)
        return _fractions(phi_R), _fractions(phi_L)


def _fractions(phi: np.ndarray) -> np.ndarray:
    total = phi.sum()
    if total <= 0:
        return np.full(len(phi), 1.0 / len(phi))
    return phi / total


def interface_flux(
    traces_L, traces_R, model: ModelSpec, rule: PartitionRule | None = None
) -> np.ndarray:
    """Closure flux ``Q^n`` for every population (negative means mass moves into D3)."""
    rule = rule or PartitionRule()
    phi_L = np.asarray(traces_L, dtype=float)
    phi_R = np.asarray(traces_R, dtype=float)
    if phi_L.min() < 0 or phi_R.min() < 0:
        raise ConfigError([("traces", "interface traces must be nonnegative")])
    mt = model.mu_tilde()
    jump_pi = np.array([
        pop.p_law.potential(float(r)) - pop.p_law.potential(float(l))
        for pop, l, r in zip(model.populations, phi_L, phi_R)
    ])
    P = model.P_law
    if P.is_zero:
        return mt * jump_pi
    alpha, beta = rule.weights(phi_L, phi_R, model)
    Pi_L = P.potential(float(phi_L.sum()))
    Pi_R = P.potential(float(phi_R.sum()))
    return mt * (alpha * Pi_R - beta * Pi_L + jump_pi)


def interface_rate(phi_L, phi_R, model: ModelSpec, rule: PartitionRule) -> float:
    """Stiffness of the interface flux, used to cap the explicit time step."""
    mt_max = float(model.mu_tilde().max())
    P = model.P_law
    rate = 0.0
    for phi in (phi_L, phi_R):
        Phi = phi.sum()
        dPi = float(Phi * P._deriv(np.asarray(Phi)))
        dpi = max(float(v * pop.p_law._deriv(np.asarray(v))) for pop, v in zip(model.populations, phi))
        rate = max(rate, mt_max * (dPi + dpi))
    return rate


def make_scheme(
    model: ModelSpec, mesh: Mesh1D, rule: PartitionRule | None = None, boundary: Boundary = NO_FLUX
) -> FVScheme:
    if not mesh.is_effective:
        raise ConfigError([("geometry", "the effective solver needs a mesh with a single interface face")])
    rule = rule or PartitionRule()
    if rule.kind == "fixed" and len(rule.alpha) != model.n_populations:
        raise ConfigError([("partition.alpha", f"expected {model.n_populations} weights")])
    face = mesh.interface_faces[0]
    hook = lambda pl, pr: -interface_flux(pl, pr, model, rule)
    rate = lambda pl, pr: interface_rate(pl, pr, model, rule)
    scheme = FVScheme(model, mesh, boundary, interface=(face, hook), interface_rate=rate)
    N = model.n_populations
    scheme.closure = {
        "face": face,
        "mu_tilde": model.mu_tilde(),
        "rule": RULE_CODES[rule.kind],
        "alpha": np.array(rule.alpha) if rule.kind == "fixed" else np.zeros(N),
        "beta": np.array(rule.beta) if rule.kind == "fixed" else np.zeros(N),
        "mt_max": float(model.mu_tilde().max()),
    }
    return scheme


def step_effective(
    state: State, model: ModelSpec, mesh: Mesh1D, dt: float,
    rule: PartitionRule | None = None, boundary: Boundary = NO_FLUX,
) -> State:
    new, _ = make_scheme(model, mesh, rule, boundary).step(state.phi, dt, state.time)
    return State(new, state.time + dt)


def stable_dt_effective(
    state: State, model: ModelSpec, mesh: Mesh1D, cfl: float = 0.45, dt_max: float = 1e-2,
    rule: PartitionRule | None = None, boundary: Boundary = NO_FLUX,
) -> float:
    return make_scheme(model, mesh, rule, boundary).stable_dt(state.phi, cfl, dt_max)


def run_effective(
    model: ModelSpec,
    mesh: Mesh1D,
    initial: State,
    t_end: float,
    rule: PartitionRule | None = None,
    output_every: float | None = None,
    cfl: float = 0.45,
    dt_max: float = 1e-2,
    boundary: Boundary = NO_FLUX,
    times=None,
    steady_tol: float | None = None,
    max_steps: int | None = None,
    engine: str = "compiled",
) -> Trajectory:
    """Integrate the effective-interface problem; see ``full.run_full``.

    Interface jumps and fluxes per output are available through
    ``full.interface_records``.
    """
    scheme = make_scheme(model, mesh, rule, boundary)
    if times is None:
        times = output_times(t_end, output_every)
    return integrate(scheme, initial, times, cfl=cfl, dt_max=dt_max, steady_tol=steady_tol, max_steps=max_steps, engine=engine)
