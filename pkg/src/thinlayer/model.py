"""Constitutive laws, population parameters and closure-case classification.

Pressure laws are restricted to the power-law family ``k * v**gamma`` (plus
the identically-zero law).  Each law carries its derivative and the potential
``Pi(v) = int_0^v w * law'(w) dw``, which for the power law is
``k * gamma * v**(gamma + 1) / (gamma + 1)``.  The same construction gives the
total-pressure potential and the per-population potentials that drive the
membrane flux.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, InvalidModelError, ModelDomainError


def _check_nonneg(v, what: str) -> None:
    if np.any(np.asarray(v) < 0):
        raise ModelDomainError(f"{what} must be >= 0, got {v!r}")


@dataclass(frozen=True)
class PressureLaw:
    """Barotropic pressure ``k * v**gamma``; ``kind='zero'`` gives P == 0."""

    kind: str = "zero"
    k: float = 0.0
    gamma: float = 1.0

    def __post_init__(self):
        if self.kind not in ("zero", "power"):
            raise ConfigError([("kind", f"unknown pressure law kind {self.kind!r}")])
        if self.kind == "power":
            problems = []
            if not (math.isfinite(self.k) and self.k > 0):
                problems.append(("k", f"must be a finite positive number, got {self.k!r}"))
            if not (math.isfinite(self.gamma) and self.gamma >= 1):
                problems.append(("gamma", f"must be >= 1, got {self.gamma!r}"))
            if problems:
                raise ConfigError(problems)

    @classmethod
    def zero(cls) -> "PressureLaw":
        return cls("zero", 0.0, 1.0)

    @classmethod
    def power(cls, k: float, gamma: float) -> "PressureLaw":
        return cls("power", float(k), float(gamma))

    @property
    def is_zero(self) -> bool:
        return self.kind == "zero"

    # Unchecked evaluators for the solver hot loop; inputs are already >= 0.
    def _value(self, v):
        if self.is_zero:
            return np.zeros_like(v)
        return self.k * v**self.gamma

    def _deriv(self, v):
        if self.is_zero:
            return np.zeros_like(v)
        if self.gamma == 1.0:
            return np.full_like(v, self.k)
        return self.k * self.gamma * v ** (self.gamma - 1.0)

    def _potential(self, v):
        if self.is_zero:
            return np.zeros_like(v)
        g = self.gamma
        return self.k * g / (g + 1.0) * v ** (g + 1.0)

    def value(self, v):
        _check_nonneg(v, "pressure argument")
        return self._value(np.asarray(v, dtype=float))[()]

    def deriv(self, v):
        _check_nonneg(v, "pressure argument")
        return self._deriv(np.asarray(v, dtype=float))[()]

    def potential(self, v):
        _check_nonneg(v, "potential argument")
        return self._potential(np.asarray(v, dtype=float))[()]


def pressure_eval(law: PressureLaw, v):
    return law.value(v)


def pressure_deriv(law: PressureLaw, v):
    return law.deriv(v)


def potential(law: PressureLaw, v):
    """Antiderivative of ``w * law'(w)`` vanishing at zero."""
    return law.potential(v)


@dataclass(frozen=True)
class GrowthLaw:
    """Net growth ``rate * phi * (1 - Phi / capacity)`` or identically zero."""

    kind: str = "zero"
    rate: float = 0.0
    capacity: float = 1.0

    def __post_init__(self):
        if self.kind not in ("zero", "logistic"):
            raise ConfigError([("kind", f"unknown growth law kind {self.kind!r}")])
        problems = []
        if not math.isfinite(self.rate):
            problems.append(("rate", f"must be finite, got {self.rate!r}"))
        if not (0 < self.capacity <= 1):
            problems.append(("capacity", f"must lie in (0, 1], got {self.capacity!r}"))
        if problems:
            raise ConfigError(problems)

    @classmethod
    def zero(cls) -> "GrowthLaw":
        return cls()

    @classmethod
    def logistic(cls, rate: float, capacity: float = 1.0) -> "GrowthLaw":
        return cls("logistic", float(rate), float(capacity))

    @property
    def is_zero(self) -> bool:
        return self.kind == "zero" or self.rate == 0.0

    def _eval(self, phi, Phi):
        if self.is_zero:
            return np.zeros_like(phi)
        return self.rate * phi * (1.0 - Phi / self.capacity)

    def __call__(self, phi, Phi):
        _check_nonneg(phi, "phi")
        if np.any(np.asarray(Phi) < np.asarray(phi)):
            raise ModelDomainError("total volume fraction Phi must be >= phi")
        return self._eval(np.asarray(phi, dtype=float), np.asarray(Phi, dtype=float))[()]


def growth_eval(law: GrowthLaw, phi, Phi):
    return law(phi, Phi)


@dataclass(frozen=True)
class PopulationSpec:
    """Parameters of one cell population.

    ``mu1``/``mu3`` are the bulk mobilities on either side of the membrane and
    ``mu_tilde_13`` the effective membrane mobility; inside a resolved membrane
    of thickness eps the mobility is ``eps * mu_tilde_13``.
    """

    name: str
    mu1: float
    mu3: float
    mu_tilde_13: float
    p_law: PressureLaw = field(default_factory=PressureLaw.zero)
    growth1: GrowthLaw = field(default_factory=GrowthLaw.zero)
    growth3: GrowthLaw = field(default_factory=GrowthLaw.zero)
    growth_membrane: GrowthLaw = field(default_factory=GrowthLaw.zero)

    def __post_init__(self):
        problems = []
        for attr in ("mu1", "mu3", "mu_tilde_13"):
            val = getattr(self, attr)
            if not (isinstance(val, (int, float)) and math.isfinite(val) and val > 0):
                problems.append((attr, f"must be a finite positive number, got {val!r}"))
        if problems:
            raise ConfigError(problems)


class Case(enum.Enum):
    CASE1 = "Case1"
    CASE2 = "Case2"
    CASE3 = "Case3"
    CASE3_MIXED = "Case3Mixed"


@dataclass(frozen=True)
class ModelSpec:
    populations: tuple[PopulationSpec, ...]
    P_law: PressureLaw = field(default_factory=PressureLaw.zero)
    phi_max: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "populations", tuple(self.populations))
        if len(self.populations) < 1:
            raise ConfigError([("populations", "need at least one population")])
        if not (0 < self.phi_max <= 1):
            raise ConfigError([("phi_max", f"must lie in (0, 1], got {self.phi_max!r}")])
        # Rejects the one combination with no driving pressure.
        classify_case(self)

    @property
    def n_populations(self) -> int:
        return len(self.populations)

    @property
    def case(self) -> Case:
        return classify_case(self)

    def mu_tilde(self) -> np.ndarray:
        return np.array([p.mu_tilde_13 for p in self.populations])

    def with_mu_tilde(self, values) -> "ModelSpec":
        """Copy of the model with the effective membrane mobilities replaced."""
        from dataclasses import replace

        pops = tuple(replace(p, mu_tilde_13=float(v)) for p, v in zip(self.populations, values))
        return replace(self, populations=pops)

    def stresses(self, phi: np.ndarray) -> np.ndarray:
        """``P(Phi) + p^n(phi^n)`` for a ``(N, ...)`` array of volume fractions."""
        phi = np.asarray(phi, dtype=float)
        _check_nonneg(phi, "phi")
        Phi = phi.sum(axis=0)
        base = self.P_law._value(Phi)
        return np.stack([base + pop.p_law._value(phi[n]) for n, pop in enumerate(self.populations)])


def classify_case(model: ModelSpec) -> Case:
    P_zero = model.P_law.is_zero
    p_zero = [pop.p_law.is_zero for pop in model.populations]
    if P_zero:
        if any(p_zero):
            names = [pop.name for pop, z in zip(model.populations, p_zero) if z]
            raise InvalidModelError(
                f"P is zero and populations {names} have zero p^n: no driving pressure"
            )
        return Case.CASE1
    if all(p_zero):
        return Case.CASE2
    if not any(p_zero):
        return Case.CASE3
    return Case.CASE3_MIXED
