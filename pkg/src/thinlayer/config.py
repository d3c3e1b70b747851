"""JSON run configuration: parsing, validation and round-trip serialization.

Every violation is collected with its field path before anything runs, so a
broken config is reported in one pass.  ``RunConfig.to_dict`` emits the
fully resolved document; feeding it back to ``parse_config`` gives an
equivalent config.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .effective import PartitionRule
from .errors import ConfigError, InvalidModelError
from .fv import Boundary, State
from .mesh import Mesh1D, Region
from .model import GrowthLaw, ModelSpec, PopulationSpec, PressureLaw

MODES = ("full", "effective", "compare", "convergence", "fit", "oracle")
TOP_KEYS = {"mode", "model", "geometry", "initial", "time", "partition", "boundary", "convergence", "fit", "oracle"}


@dataclass(frozen=True)
class GeometryConfig:
    L: float
    x_m: float
    n1: int
    n3: int
    epsilon: float | None = None
    n2: int | None = None


@dataclass(frozen=True)
class InitialSpec:
    """Initial profile of one population; the membrane always starts empty."""

    kind: str
    value: float = 0.0
    center: float = 0.0
    width: float = 1.0
    amplitude: float = 0.0
    edge: float = 0.0
    left: float = 0.0
    right: float = 0.0

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        if self.kind == "uniform":
            return np.full_like(x, self.value)
        if self.kind == "gaussian":
            return self.amplitude * np.exp(-0.5 * ((x - self.center) / self.width) ** 2)
        return np.where(x < self.edge, self.left, self.right)

    def to_dict(self) -> dict:
        if self.kind == "uniform":
            return {"kind": "uniform", "value": self.value}
        if self.kind == "gaussian":
            return {"kind": "gaussian", "center": self.center, "width": self.width, "amplitude": self.amplitude}
        return {"kind": "step", "edge": self.edge, "left": self.left, "right": self.right}


@dataclass(frozen=True)
class TimeConfig:
    t_end: float
    cfl: float = 0.45
    dt_max: float = 1e-2
    output_every: float | None = None


@dataclass(frozen=True)
class ConvergenceConfig:
    epsilons: tuple[float, ...]


@dataclass(frozen=True)
class FitConfig:
    intervals: tuple[tuple[float, float] | None, ...]
    reference: str = "full"
    start: tuple[float, ...] | None = None
    n_grid: int = 20
    tol: float = 1e-3
    max_iter: int = 50
    sweeps: int = 5


@dataclass(frozen=True)
class OracleConfig:
    resolutions: tuple[int, ...]
    steady_tol: float = 1e-10
    t_max: float = 1e3


@dataclass(frozen=True)
class RunConfig:
    mode: str
    model: ModelSpec
    geometry: GeometryConfig
    initial: tuple[InitialSpec, ...]
    time: TimeConfig
    partition: PartitionRule = field(default_factory=PartitionRule)
    boundary: Boundary = field(default_factory=Boundary)
    convergence: ConvergenceConfig | None = None
    fit: FitConfig | None = None
    oracle: OracleConfig | None = None

    def initial_state(self, mesh: Mesh1D) -> State:
        phi = np.stack([spec.evaluate(mesh.centers) for spec in self.initial])
        phi[:, mesh.regions == Region.MEMBRANE] = 0.0
        return State(phi)

    def to_dict(self) -> dict:
        g = self.geometry
        geom = {"L": g.L, "x_m": g.x_m, "n1": g.n1, "n3": g.n3}
        if g.epsilon is not None:
            geom["epsilon"] = g.epsilon
        if g.n2 is not None:
            geom["n2"] = g.n2
        out: dict[str, Any] = {
            "mode": self.mode,
            "model": _model_dict(self.model),
            "geometry": geom,
            "initial": [s.to_dict() for s in self.initial],
            "time": {"t_end": self.time.t_end, "cfl": self.time.cfl, "dt_max": self.time.dt_max,
                     "output_every": self.time.output_every},
            "partition": {"kind": self.partition.kind},
            "boundary": {"kind": self.boundary.kind},
        }
        if self.partition.kind == "fixed":
            out["partition"].update(alpha=list(self.partition.alpha), beta=list(self.partition.beta))
        if self.boundary.kind == "dirichlet":
            out["boundary"].update(left=list(self.boundary.left), right=list(self.boundary.right))
        if self.convergence is not None:
            out["convergence"] = {"epsilons": list(self.convergence.epsilons)}
        if self.fit is not None:
            f = self.fit
            out["fit"] = {
                "intervals": [None if iv is None else list(iv) for iv in f.intervals],
                "reference": f.reference, "start": None if f.start is None else list(f.start),
                "n_grid": f.n_grid, "tol": f.tol, "max_iter": f.max_iter, "sweeps": f.sweeps,
            }
        if self.oracle is not None:
            o = self.oracle
            out["oracle"] = {"resolutions": list(o.resolutions), "steady_tol": o.steady_tol, "t_max": o.t_max}
        return out


def _law_dict(law) -> dict:
    if isinstance(law, PressureLaw):
        return {"kind": "zero"} if law.is_zero else {"kind": "power", "k": law.k, "gamma": law.gamma}
    if law.kind == "zero":
        return {"kind": "zero"}
    return {"kind": "logistic", "rate": law.rate, "capacity": law.capacity}


def _model_dict(model: ModelSpec) -> dict:
    return {
        "P_law": _law_dict(model.P_law),
        "phi_max": model.phi_max,
        "populations": [
            {
                "name": p.name, "mu1": p.mu1, "mu3": p.mu3, "mu_tilde_13": p.mu_tilde_13,
                "p_law": _law_dict(p.p_law), "growth1": _law_dict(p.growth1),
                "growth3": _law_dict(p.growth3), "growth_membrane": _law_dict(p.growth_membrane),
            }
            for p in model.populations
        ],
    }


class _Reader:
    """Pulls typed fields out of nested dicts while collecting problems."""

    def __init__(self):
        self.problems: list[tuple[str, str]] = []

    def fail(self, path: str, msg: str) -> None:
        self.problems.append((path, msg))

    def obj(self, d, path: str, allowed: set[str]) -> dict | None:
        if not isinstance(d, dict):
            self.fail(path, "must be an object")
            return None
        for key in sorted(set(d) - allowed):
            self.fail(f"{path}.{key}" if path else key, "unknown key")
        return d

    def num(self, d: dict, key: str, path: str, default=None, required=True, integer=False,
            positive=False, nonneg=False):
        p = f"{path}.{key}" if path else key
        if key not in d or d[key] is None:
            if required and default is None:
                self.fail(p, "required field is missing")
            return default
        v = d[key]
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            self.fail(p, f"must be a number, got {v!r}")
            return default
        if integer and int(v) != v:
            self.fail(p, f"must be an integer, got {v!r}")
            return default
        v = int(v) if integer else float(v)
        if not math.isfinite(v):
            self.fail(p, "must be finite")
        elif positive and not v > 0:
            self.fail(p, f"must be positive, got {v!r}")
        elif nonneg and v < 0:
            self.fail(p, f"must be >= 0, got {v!r}")
        else:
            return v
        return None

    def numlist(self, d: dict, key: str, path: str, required=True, nonneg=False):
        p = f"{path}.{key}"
        if key not in d or d[key] is None:
            if required:
                self.fail(p, "required field is missing")
            return None
        v = d[key]
        if not isinstance(v, list) or any(isinstance(x, bool) or not isinstance(x, (int, float)) for x in v):
            self.fail(p, "must be a list of numbers")
            return None
        if nonneg and any(x < 0 for x in v):
            self.fail(p, "entries must be >= 0")
        return tuple(float(x) for x in v)

    def build(self, path: str, ctor, *args, **kw):
        """Call a constructor, folding its ConfigError problems under ``path``."""
        try:
            return ctor(*args, **kw)
        except ConfigError as exc:
            for sub, msg in exc.problems:
                if not sub or sub == path or sub.startswith(path + "."):
                    self.fail(sub or path, msg)
                else:
                    self.fail(f"{path}.{sub}", msg)
        except InvalidModelError as exc:
            self.fail(path, str(exc))
        return None


def _pressure(r: _Reader, d, path: str):
    if d is None:
        return PressureLaw.zero()
    d = r.obj(d, path, {"kind", "k", "gamma"})
    if d is None:
        return None
    kind = d.get("kind", "power")
    if kind == "zero":
        return PressureLaw.zero()
    if kind != "power":
        r.fail(f"{path}.kind", f"unknown pressure law kind {kind!r}")
        return None
    k = r.num(d, "k", path)
    gamma = r.num(d, "gamma", path, default=1.0)
    if k is None:
        return None
    return r.build(path, PressureLaw.power, k, gamma)


def _growth(r: _Reader, d, path: str):
    if d is None:
        return GrowthLaw.zero()
    d = r.obj(d, path, {"kind", "rate", "capacity"})
    if d is None:
        return None
    kind = d.get("kind", "logistic")
    if kind == "zero":
        return GrowthLaw.zero()
    if kind != "logistic":
        r.fail(f"{path}.kind", f"unknown growth law kind {kind!r}")
        return None
    rate = r.num(d, "rate", path)
    cap = r.num(d, "capacity", path, default=1.0)
    if rate is None:
        return None
    return r.build(path, GrowthLaw.logistic, rate, cap)


def _model(r: _Reader, d) -> ModelSpec | None:
    d = r.obj(d, "model", {"P_law", "phi_max", "populations"})
    if d is None:
        return None
    P = _pressure(r, d.get("P_law"), "model.P_law")
    phi_max = r.num(d, "phi_max", "model", default=1.0)
    if phi_max is not None and not 0 < phi_max <= 1:
        r.fail("model.phi_max", f"must lie in (0, 1], got {phi_max!r}")
    raw = d.get("populations")
    if not isinstance(raw, list) or not raw:
        r.fail("model.populations", "must be a non-empty list")
        return None
    pops = []
    keys = {"name", "mu1", "mu3", "mu_tilde_13", "p_law", "growth1", "growth3", "growth_membrane"}
    for i, pd in enumerate(raw):
        path = f"model.populations[{i}]"
        pd = r.obj(pd, path, keys)
        if pd is None:
            pops.append(None)
            continue
        name = pd.get("name", f"pop{i}")
        if not isinstance(name, str):
            r.fail(f"{path}.name", "must be a string")
            name = f"pop{i}"
        path = f"model.populations[{i}]({name})"
        mus = {key: r.num(pd, key, path, positive=True) for key in ("mu1", "mu3", "mu_tilde_13")}
        p_law = _pressure(r, pd.get("p_law"), f"{path}.p_law")
        growth = {key: _growth(r, pd.get(key), f"{path}.{key}") for key in ("growth1", "growth3", "growth_membrane")}
        if None in mus.values() or p_law is None or None in growth.values():
            pops.append(None)
            continue
        pops.append(r.build(path, PopulationSpec, name, p_law=p_law, **mus, **growth))
    if P is None or None in pops or phi_max is None or not 0 < phi_max <= 1:
        return None
    return r.build("model", ModelSpec, tuple(pops), P, phi_max)


def _initial(r: _Reader, raw, n_pop: int | None):
    if not isinstance(raw, list):
        r.fail("initial", "must be a list with one entry per population")
        return None
    if n_pop is not None and len(raw) != n_pop:
        r.fail("initial", f"expected {n_pop} entries (one per population), got {len(raw)}")
    out = []
    fields = {"uniform": ("value",), "gaussian": ("center", "width", "amplitude"), "step": ("edge", "left", "right")}
    for i, d in enumerate(raw):
        path = f"initial[{i}]"
        if not isinstance(d, dict):
            r.fail(path, "must be an object")
            continue
        kind = d.get("kind")
        if kind not in fields:
            r.fail(f"{path}.kind", f"must be one of {sorted(fields)}, got {kind!r}")
            continue
        r.obj(d, path, {"kind", *fields[kind]})
        vals = {}
        for key in fields[kind]:
            vals[key] = r.num(d, key, path, positive=(key == "width"),
                              nonneg=key in ("value", "amplitude", "left", "right"))
        if None not in vals.values():
            out.append(InitialSpec(kind, **vals))
    return tuple(out)


def parse_config(source) -> RunConfig:
    """Parse and validate a config given as a path, JSON text or dict."""
    if isinstance(source, dict):
        doc = source
    else:
        text = source
        if isinstance(source, os.PathLike) or (isinstance(source, str) and not source.lstrip().startswith("{")):
            with open(source, encoding="utf-8") as fh:
                text = fh.read()
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError([("", f"malformed JSON: {exc}")]) from None
    r = _Reader()
    doc = r.obj(doc, "", TOP_KEYS)
    if doc is None:
        raise ConfigError(r.problems)

    mode = doc.get("mode")
    if mode not in MODES:
        r.fail("mode", f"must be one of {list(MODES)}, got {mode!r}")
    model = _model(r, doc.get("model"))
    n_pop = model.n_populations if model else None

    geometry = None
    gd = r.obj(doc.get("geometry"), "geometry", {"L", "x_m", "epsilon", "n1", "n2", "n3"})
    if gd is not None:
        L = r.num(gd, "L", "geometry", positive=True)
        x_m = r.num(gd, "x_m", "geometry", positive=True)
        n1 = r.num(gd, "n1", "geometry", integer=True)
        n3 = r.num(gd, "n3", "geometry", integer=True)
        eps = r.num(gd, "epsilon", "geometry", required=False, positive=True)
        n2 = r.num(gd, "n2", "geometry", required=False, integer=True)
        for key, n in (("n1", n1), ("n2", n2), ("n3", n3)):
            if n is not None and n < 2:
                r.fail(f"geometry.{key}", f"must be >= 2, got {n}")
        if L is not None and x_m is not None and not x_m < L:
            r.fail("geometry.x_m", "must lie inside (0, L)")
        if L is not None and x_m is not None and eps is not None and not x_m + eps < L:
            r.fail("geometry.epsilon", "membrane [x_m, x_m + epsilon] overflows the domain")
        if mode in ("full", "compare", "convergence") or (mode == "fit" and (doc.get("fit") or {}).get("reference", "full") == "full"):
            if mode != "convergence" and eps is None:
                r.fail("geometry.epsilon", f"required in {mode} mode")
            if n2 is None:
                r.fail("geometry.n2", f"required in {mode} mode")
        if None not in (L, x_m, n1, n3):
            geometry = GeometryConfig(L, x_m, n1, n3, eps, n2)

    initial = ()
    if mode != "oracle" or "initial" in doc:
        initial = _initial(r, doc.get("initial"), n_pop)

    time = None
    td = doc.get("time", {} if mode == "oracle" else None)
    td = r.obj(td, "time", {"t_end", "cfl", "dt_max", "output_every"})
    if td is not None:
        t_end = r.num(td, "t_end", "time", required=mode != "oracle", default=0.0 if mode == "oracle" else None,
                      nonneg=True)
        cfl = r.num(td, "cfl", "time", default=0.45)
        if cfl is not None and not 0 < cfl <= 1:
            r.fail("time.cfl", f"must lie in (0, 1], got {cfl!r}")
        dt_max = r.num(td, "dt_max", "time", default=1e-2, positive=True)
        every = r.num(td, "output_every", "time", required=False, positive=True)
        if t_end is not None:
            time = TimeConfig(t_end, cfl, dt_max, every)

    partition = PartitionRule()
    if "partition" in doc:
        pd = r.obj(doc["partition"], "partition", {"kind", "alpha", "beta"})
        if pd is not None:
            kind = pd.get("kind", "fraction-weighted")
            alpha = r.numlist(pd, "alpha", "partition", required=kind == "fixed", nonneg=True) or ()
            beta = r.numlist(pd, "beta", "partition", required=kind == "fixed", nonneg=True) or ()
            partition = r.build("partition", PartitionRule, kind, alpha, beta) or partition
            if partition.kind == "fixed" and n_pop is not None and len(partition.alpha) != n_pop:
                r.fail("partition.alpha", f"expected {n_pop} weights")

    boundary = Boundary()
    if "boundary" in doc:
        bd = r.obj(doc["boundary"], "boundary", {"kind", "left", "right"})
        if bd is not None:
            kind = bd.get("kind", "no-flux")
            if kind == "dirichlet":
                left = r.numlist(bd, "left", "boundary", nonneg=True)
                right = r.numlist(bd, "right", "boundary", nonneg=True)
                if left is not None and right is not None:
                    if n_pop is not None and (len(left) != n_pop or len(right) != n_pop):
                        r.fail("boundary", f"expected {n_pop} values per side")
                    else:
                        boundary = r.build("boundary", Boundary, "dirichlet", left, right) or boundary
            elif kind != "no-flux":
                r.fail("boundary.kind", f"must be 'no-flux' or 'dirichlet', got {kind!r}")

    convergence = fit = oracle = None
    for block in ("convergence", "fit", "oracle"):
        if block in doc and mode != block:
            r.fail(block, f"block only valid in {block} mode")
    if mode == "convergence":
        cd = r.obj(doc.get("convergence"), "convergence", {"epsilons"})
        if cd is not None:
            eps = r.numlist(cd, "epsilons", "convergence")
            if eps is not None:
                if not eps or any(not e > 0 for e in eps):
                    r.fail("convergence.epsilons", "need at least one epsilon, all positive")
                elif any(b >= a for a, b in zip(eps, eps[1:])):
                    r.fail("convergence.epsilons", "must be strictly decreasing")
                elif geometry is not None and not geometry.x_m + eps[0] < geometry.L:
                    r.fail("convergence.epsilons", "largest membrane overflows the domain")
                else:
                    convergence = ConvergenceConfig(eps)
    if mode == "fit":
        fit = _fit(r, doc.get("fit"), n_pop)
    if mode == "oracle":
        oracle = _oracle(r, doc.get("oracle"), model, boundary, geometry)

    if r.problems:
        raise ConfigError(r.problems)
    return RunConfig(mode, model, geometry, initial, time, partition, boundary, convergence, fit, oracle)


def _fit(r: _Reader, d, n_pop):
    d = r.obj(d, "fit", {"intervals", "reference", "start", "n_grid", "tol", "max_iter", "sweeps"})
    if d is None:
        return None
    raw = d.get("intervals")
    intervals = []
    if not isinstance(raw, list):
        r.fail("fit.intervals", "must be a list with one [a, b] or null per population")
        return None
    if n_pop is not None and len(raw) != n_pop:
        r.fail("fit.intervals", f"expected {n_pop} entries")
    for i, iv in enumerate(raw):
        if iv is None:
            intervals.append(None)
            continue
        if (not isinstance(iv, list) or len(iv) != 2
                or any(isinstance(x, bool) or not isinstance(x, (int, float)) for x in iv)):
            r.fail(f"fit.intervals[{i}]", "must be [a, b] or null")
            continue
        a, b = float(iv[0]), float(iv[1])
        if not (0 < a < b and math.isfinite(b)):
            r.fail(f"fit.intervals[{i}]", f"need 0 < a < b, got {iv}")
        intervals.append((a, b))
    if all(iv is None for iv in intervals):
        r.fail("fit.intervals", "no population to fit")
    reference = d.get("reference", "full")
    if reference not in ("full", "effective"):
        r.fail("fit.reference", f"must be 'full' or 'effective', got {reference!r}")
    start = r.numlist(d, "start", "fit", required=False)
    if start is not None:
        if n_pop is not None and len(start) != n_pop:
            r.fail("fit.start", f"expected {n_pop} values")
        if any(not s > 0 for s in start):
            r.fail("fit.start", "values must be positive")
    n_grid = r.num(d, "n_grid", "fit", default=20, integer=True)
    tol = r.num(d, "tol", "fit", default=1e-3, positive=True)
    max_iter = r.num(d, "max_iter", "fit", default=50, integer=True, positive=True)
    sweeps = r.num(d, "sweeps", "fit", default=5, integer=True, positive=True)
    if n_grid is not None and n_grid < 3:
        r.fail("fit.n_grid", "must be >= 3")
    return FitConfig(tuple(intervals), reference, start, n_grid, tol, max_iter, sweeps)


def _oracle(r: _Reader, d, model, boundary, geometry):
    d = r.obj(d if d is not None else {}, "oracle", {"resolutions", "steady_tol", "t_max"})
    if d is None:
        return None
    if model is not None:
        pop = model.populations[0]
        if model.n_populations != 1 or not model.P_law.is_zero or pop.p_law.is_zero or pop.p_law.gamma != 1.0:
            r.fail("model", "oracle mode needs one population, P zero and a linear p law (gamma = 1)")
    if boundary.kind != "dirichlet":
        r.fail("boundary", "oracle mode needs dirichlet boundary values")
    res = r.numlist(d, "resolutions", "oracle", required=False)
    if res is None:
        res = (geometry.n1,) if geometry is not None else ()
    if any(int(n) != n or n < 2 for n in res):
        r.fail("oracle.resolutions", "entries must be integers >= 2")
    steady_tol = r.num(d, "steady_tol", "oracle", default=1e-10, positive=True)
    t_max = r.num(d, "t_max", "oracle", default=1e3, positive=True)
    return OracleConfig(tuple(int(n) for n in res), steady_tol, t_max)
