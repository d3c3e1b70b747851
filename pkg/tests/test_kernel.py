"""The compiled time loop must reproduce the numpy reference step."""

import numpy as np
import pytest

from thinlayer import (
    Boundary, GrowthLaw, ModelSpec, PartitionRule, PopulationSpec, PressureLaw, SchemeFailure, State,
    build_effective_mesh, build_full_mesh, run_effective, run_full,
)

G = GrowthLaw.logistic(2.0, 0.9)


def models():
    yield ModelSpec((PopulationSpec("a", 1, 2, 1, PressureLaw.power(1, 2)), PopulationSpec("b", 0.5, 1, 0.3, PressureLaw.power(2, 1))))
    yield ModelSpec((PopulationSpec("a", 1, 1, 1, growth1=G, growth3=G), PopulationSpec("b", 2, 1, 0.5)), PressureLaw.power(1, 2))
    yield ModelSpec((PopulationSpec("a", 1, 1, 1, PressureLaw.power(1, 2.5), G, G, G), PopulationSpec("b", 1, 0.5, 2)),
                    PressureLaw.power(0.5, 1.5))


def initial(mesh, floor=0.0):
    x = mesh.centers
    return State(floor + np.stack([0.5 * np.exp(-((x - 0.3) / 0.1) ** 2), 0.3 * np.exp(-((x - 0.2) / 0.08) ** 2)]))


@pytest.mark.parametrize("model", list(models()), ids=["case1", "case2", "case3mixed"])
def test_full_engines_agree(model):
    mesh = build_full_mesh(1.0, 0.5, 0.05, 20, 5, 20)
    a = run_full(model, mesh, initial(mesh), 0.02, output_every=0.01, engine="compiled")
    b = run_full(model, mesh, initial(mesh), 0.02, output_every=0.01, engine="numpy")
    assert a.n_steps == b.n_steps
    for x, y in zip(a.states, b.states):
        np.testing.assert_allclose(x, y, rtol=0, atol=1e-13)


@pytest.mark.parametrize("model", list(models()), ids=["case1", "case2", "case3mixed"])
@pytest.mark.parametrize("rule", [PartitionRule(), PartitionRule.fixed([0.3, 0.7], [0.6, 0.4])], ids=["fw", "fixed"])
def test_effective_engines_agree(model, rule):
    mesh = build_effective_mesh(1.0, 0.5, 20, 20)
    # Fixed weights need every population present on both sides.
    s = initial(mesh, 0.05 if rule.kind == "fixed" else 0.0)
    a = run_effective(model, mesh, s, 0.02, rule, engine="compiled")
    b = run_effective(model, mesh, s, 0.02, rule, engine="numpy")
    assert a.n_steps == b.n_steps
    np.testing.assert_allclose(a.states[-1], b.states[-1], rtol=0, atol=1e-13)


def test_dirichlet_engines_agree():
    model = ModelSpec((PopulationSpec("a", 1, 1, 1, PressureLaw.power(1, 1)),))
    mesh = build_effective_mesh(1.0, 0.5, 15, 15)
    bc = Boundary.dirichlet([0.8], [0.2])
    s = State(np.full((1, 30), 0.4))
    a = run_effective(model, mesh, s, 0.05, boundary=bc, engine="compiled")
    b = run_effective(model, mesh, s, 0.05, boundary=bc, engine="numpy")
    np.testing.assert_allclose(a.states[-1], b.states[-1], rtol=0, atol=1e-13)


def test_steady_detection_agrees():
    model = ModelSpec((PopulationSpec("a", 1, 1, 1, PressureLaw.power(1, 1)),))
    mesh = build_effective_mesh(1.0, 0.5, 8, 8)
    bc = Boundary.dirichlet([0.8], [0.2])
    s = State(np.full((1, 16), 0.4))
    a = run_effective(model, mesh, s, 50.0, boundary=bc, steady_tol=1e-8, engine="compiled")
    b = run_effective(model, mesh, s, 50.0, boundary=bc, steady_tol=1e-8, engine="numpy")
    assert a.steady and b.steady and a.n_steps == b.n_steps


def test_failure_reported_by_both():
    # Fixed weights push the absent population across the interface.
    model = ModelSpec((PopulationSpec("a", 1, 1, 1), PopulationSpec("b", 1, 1, 1)), PressureLaw.power(1, 2))
    mesh = build_effective_mesh(1.0, 0.5, 10, 10)
    phi = np.zeros((2, 20))
    phi[0, :10] = 0.8
    rule = PartitionRule.fixed([0.5, 0.5], [0.5, 0.5])
    times = []
    for engine in ("compiled", "numpy"):
        with pytest.raises(SchemeFailure) as info:
            run_effective(model, mesh, State(phi), 0.1, rule, engine=engine)
        times.append(info.value.time)
    assert times[0] == pytest.approx(times[1], rel=1e-13)
