"""Acceptance checks, one per criterion.

Each ``criterion_N`` returns ``(ok, detail)``.  Under pytest every check
asserts its own bound and the pass/fail lines are printed in the terminal
summary (see ``conftest.py``); ``python tests/test_acceptance.py`` runs them
all as a script.
"""

from __future__ import annotations

import csv
import functools
import sys
import tempfile
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from thinlayer import (  # noqa: E402
    GrowthLaw, ModelSpec, PartitionRule, PopulationSpec, PressureLaw, Region, State, build_effective_mesh,
    build_full_mesh, interface_flux, interface_records, run_effective, run_full,
)
from thinlayer.analysis import (  # noqa: E402
    SteadyOracle, compare_with_oracle, convergence_study, estimate_effective_mobility, membrane_flux_constancy,
    solve_steady_oracle, total_mass,
)
from thinlayer.cli import execute  # noqa: E402
from thinlayer.config import parse_config  # noqa: E402

from setups import EPSILONS, GEOMETRY, MU_TILDE, T_END, case1_model, case2_model, gaussian_initial  # noqa: E402

RESULTS: dict[int, tuple[bool, str]] = {}


def sci(values) -> str:
    return "[" + " ".join(f"{v:.2e}" for v in np.ravel(values)) + "]"


def record(n: int, ok: bool, detail: str) -> tuple[bool, str]:
    RESULTS[n] = (bool(ok), detail)
    print(f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}")
    return bool(ok), detail


# 1. conservation -------------------------------------------------------------

def conservation_model() -> ModelSpec:
    return ModelSpec((
        PopulationSpec("p1", 1.0, 1.0, 1.0, PressureLaw.power(1.0, 2.0)),
        PopulationSpec("p2", 1.0, 1.0, 0.5, PressureLaw.power(1.0, 3.0)),
    ))


def two_bumps(mesh) -> State:
    x = mesh.centers
    a = 0.6 * np.exp(-0.5 * ((x - 0.25) / 0.08) ** 2)
    b = 0.3 * np.exp(-0.5 * ((x - 0.75) / 0.08) ** 2)
    a[mesh.regions == Region.MEMBRANE] = 0.0
    b[mesh.regions == Region.MEMBRANE] = 0.0
    return State(np.stack([a, b]))


def criterion_1():
    model = conservation_model()
    out = []
    ok = True
    for label, mesh, run in (
        ("full", build_full_mesh(1.0, 0.5, 0.05, 40, 8, 40), run_full),
        ("effective", build_effective_mesh(1.0, 0.5, 40, 40), run_effective),
    ):
        t0 = time.perf_counter()
        traj = run(model, mesh, two_bumps(mesh), 0.5, output_every=0.05)
        elapsed = time.perf_counter() - t0
        m0 = total_mass(traj.states[0], mesh)
        drift = max(np.max(np.abs(total_mass(s, mesh) - m0) / m0) for s in traj.states)
        ok &= drift <= 1e-12 and elapsed <= 10.0
        out.append(f"{label} drift {drift:.2e} in {elapsed:.2f}s")
    return record(1, ok, "; ".join(out) + " (bound 1e-12, 10 s)")


# 2. transmission-condition identities ------------------------------------------

def criterion_2():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    mt = np.array([1.0, 0.3, 2.5])
    laws = [PressureLaw.power(1.0, 2.0), PressureLaw.power(0.5, 3.0), PressureLaw.power(2.0, 1.5)]
    P = PressureLaw.power(1.0, 2.0)
    case3 = ModelSpec(tuple(PopulationSpec(f"p{i}", 1, 1, m, l) for i, (m, l) in enumerate(zip(mt, laws))), P)
    case1 = ModelSpec(case3.populations)
    worst, exact = 0.0, True
    for _ in range(1000):
        L, R = rng.uniform(0, 1, 3), rng.uniform(0, 1, 3)
        a, b = rng.dirichlet(np.ones(3)), rng.dirichlet(np.ones(3))
        a[-1] = 1.0 - a[:-1].sum()
        b[-1] = 1.0 - b[:-1].sum()
        jump = P.potential(R.sum()) - P.potential(L.sum()) + sum(
            l.potential(r) - l.potential(v) for l, v, r in zip(laws, L, R))
        for rule in (PartitionRule(), PartitionRule.fixed(a, b)):
            F = interface_flux(L, R, case3, rule)
            worst = max(worst, abs(np.sum(F / mt) - jump))
            F1 = interface_flux(L, R, case1, rule)
            ref = mt * np.array([l.potential(r) - l.potential(v) for l, v, r in zip(laws, L, R)])
            exact &= bool(np.array_equal(F1, ref))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-12 and exact and elapsed <= 1.0
    return record(2, ok, f"max identity defect {worst:.2e} (bound 1e-12), Case-1 reduction exact={exact}, {elapsed:.2f}s")


# 3. steady oracle -------------------------------------------------------------

def criterion_3():
    t0 = time.perf_counter()
    oracle = SteadyOracle(L=1.0, x_m=0.5, phi_L_bc=0.8, phi_R_bc=0.2)
    rows = [compare_with_oracle(oracle, n, cfl=0.9) for n in (50, 100, 200)]
    elapsed = time.perf_counter() - t0
    err = np.array([r.linf_error for r in rows])
    orders = np.log2(err[:-1] / err[1:])
    steady = all(r.steady for r in rows)
    ok = steady and np.all(np.diff(err) < 0) and orders.min() >= 0.9 and err[-1] <= 0.01 * 0.6 and elapsed <= 30
    return record(3, ok, f"Linf errors {sci(err)}, orders {np.array2string(orders, precision=3)} "
                         f"(>= 0.9), n=200 error/range {err[-1] / 0.6:.2e} (<= 1e-2), {elapsed:.1f}s")


# 4. epsilon convergence -------------------------------------------------------

@functools.lru_cache(maxsize=None)
def convergence_tables():
    t0 = time.perf_counter()
    tables = {
        name: convergence_study(model, GEOMETRY, gaussian_initial, EPSILONS, T_END, workers=4)
        for name, model in (("Case1", case1_model()), ("Case2", case2_model()))
    }
    return tables, time.perf_counter() - t0


def criterion_4():
    tables, elapsed = convergence_tables()
    ok = elapsed <= 300
    parts = []
    for name, floor in (("Case1", 0.8), ("Case2", 0.5)):
        t = tables[name]
        mono = t.monotone(0.10)
        last = t.orders[-1]
        ok &= bool(mono.all()) and bool(np.all(last >= floor))
        parts.append(f"{name} errors {sci(t.errors[:, 0])}/"
                     f"{sci(t.errors[:, 1])} monotone={mono.tolist()} "
                     f"finest orders {np.array2string(last, precision=3)} (>= {floor})")
    return record(4, ok, "; ".join(parts) + f"; {elapsed:.0f}s")


# 5. membrane flux constancy ---------------------------------------------------

@functools.lru_cache(maxsize=None)
def finest_full_run():
    g = GEOMETRY
    mesh = build_full_mesh(g.L, g.x_m, EPSILONS[-1], g.n1, g.n2, g.n3)
    return run_full(case1_model(), mesh, gaussian_initial(mesh), T_END, output_every=0.05)


def criterion_5():
    dev = membrane_flux_constancy(finest_full_run())
    ok = bool(np.all(dev <= 0.05))
    return record(5, ok, f"relative membrane flux deviation {np.array2string(dev, precision=4)} at t={T_END} (bound 0.05)")


# 6. transparent membrane ------------------------------------------------------

def criterion_6():
    jumps = []
    for mt in (0.1, 1.0, 10.0, 100.0, 1000.0):
        model = ModelSpec((PopulationSpec("a", 1.0, 1.0, mt, PressureLaw.power(1.0, 1.0)),))
        mesh = build_effective_mesh(1.0, 0.5, 50, 50)
        phi = np.where(mesh.centers < 0.5, 0.8, 0.2)
        traj = run_effective(model, mesh, State(phi[None]), 0.1)
        jumps.append(abs(float(interface_records(traj)[-1]["jump_phi"][0])))
    jumps = np.array(jumps)
    ok = bool(np.all(np.diff(jumps) < 0)) and jumps[-1] <= 1e-3
    return record(6, ok, f"|[[phi]]| {sci(jumps)} (strictly decreasing, last <= 1e-3)")


# 7. mobility fit --------------------------------------------------------------

def criterion_7():
    t0 = time.perf_counter()
    model = case1_model()
    mesh = build_effective_mesh(GEOMETRY.L, GEOMETRY.x_m, GEOMETRY.n1, GEOMETRY.n3)
    ref = run_effective(model, mesh, gaussian_initial(mesh), T_END, output_every=0.05)
    own = estimate_effective_mobility(ref, model.with_mu_tilde([3.0, 3.0]), [(0.1, 10.0), (0.1, 10.0)])
    rel_own = np.abs(own.mu_tilde - np.array(MU_TILDE)) / np.array(MU_TILDE)
    full = estimate_effective_mobility(finest_full_run(), model.with_mu_tilde([3.0, MU_TILDE[1]]), [(0.1, 10.0), None])
    rel_full = abs(full.mu_tilde[0] - MU_TILDE[0]) / MU_TILDE[0]
    elapsed = time.perf_counter() - t0
    ok = rel_own.max() <= 0.01 and rel_full <= 0.20 and elapsed <= 180
    return record(7, ok, f"self-consistent {np.array2string(own.mu_tilde, precision=5)} (rel {rel_own.max():.1e} <= 1e-2); "
                         f"full-model p1 {full.mu_tilde[0]:.4f} (rel {rel_full:.3f} <= 0.2); {elapsed:.0f}s")


# 8. nonnegativity and determinism ---------------------------------------------

def random_config(rng: np.random.Generator, case: int) -> dict:
    n_pop = int(rng.integers(1, 4))
    pops = []
    for i in range(n_pop):
        p = {"kind": "zero"} if case == 2 else {
            "kind": "power", "k": float(rng.uniform(0.5, 10)), "gamma": float(rng.uniform(1, 3))}
        pop = {"name": f"p{i}", "mu1": float(rng.uniform(0.2, 2)), "mu3": float(rng.uniform(0.2, 2)),
               "mu_tilde_13": float(10 ** rng.uniform(-1, 1)), "p_law": p}
        if rng.random() < 0.4:
            pop["growth1"] = {"kind": "logistic", "rate": float(rng.uniform(0, 5)), "capacity": 1.0}
        pops.append(pop)
    model = {"populations": pops}
    if case != 1:
        model["P_law"] = {"kind": "power", "k": float(rng.uniform(0.5, 5)), "gamma": float(rng.uniform(1, 3))}
    mode = str(rng.choice(["effective", "full", "compare"]))
    initial = []
    for _ in range(n_pop):
        share = 0.9 / n_pop
        kind = rng.choice(["uniform", "gaussian", "step"])
        if kind == "uniform":
            initial.append({"kind": "uniform", "value": float(rng.uniform(0, share))})
        elif kind == "gaussian":
            initial.append({"kind": "gaussian", "center": float(rng.uniform(0.1, 0.9)),
                            "width": float(rng.uniform(0.03, 0.2)), "amplitude": float(rng.uniform(0, share))})
        else:
            initial.append({"kind": "step", "edge": float(rng.uniform(0.1, 0.9)),
                            "left": float(rng.uniform(0, share)), "right": float(rng.uniform(0, share))})
    geometry = {"L": 1.0, "x_m": float(rng.uniform(0.3, 0.7)), "n1": int(rng.integers(8, 30)),
                "n3": int(rng.integers(8, 30))}
    if mode != "effective":
        geometry.update(epsilon=float(rng.uniform(0.01, 0.1)), n2=int(rng.integers(2, 8)))
    return {"mode": mode, "model": model, "geometry": geometry, "initial": initial,
            "time": {"t_end": float(rng.uniform(0.01, 0.05)), "output_every": 0.01}}


def _min_phi(path: Path) -> float:
    with path.open() as fh:
        return min((float(row["phi"]) for row in csv.DictReader(fh)), default=0.0)


def criterion_8():
    rng = np.random.default_rng(8)
    worst, identical, failures = 0.0, True, []
    with tempfile.TemporaryDirectory() as tmp:
        for i in range(50):
            cfg = parse_config(random_config(rng, case=1 + i % 3))
            runs = [Path(tmp) / f"{i}-{k}" for k in range(2)]
            codes = [execute(cfg, d) for d in runs]
            if codes != [0, 0]:
                failures.append((i, codes))
                continue
            files = sorted(p.name for p in runs[0].iterdir())
            identical &= all((runs[0] / f).read_bytes() == (runs[1] / f).read_bytes() for f in files)
            for f in files:
                if f.startswith("profiles"):
                    worst = min(worst, _min_phi(runs[0] / f))
    ok = not failures and identical and worst >= -1e-13
    return record(8, ok, f"50 configs (every step is checked in-solver), failed runs {failures}, min phi {worst:.2e} (>= -1e-13), byte-identical={identical}")


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7, criterion_8]


@pytest.mark.slow
@pytest.mark.parametrize("check", CRITERIA, ids=[f"criterion_{i}" for i in range(1, 9)])
def test_acceptance(check):
    ok, detail = check()
    assert ok, detail


if __name__ == "__main__":
    results = [check()[0] for check in CRITERIA]
    sys.exit(0 if all(results) else 1)
