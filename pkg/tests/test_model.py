import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from thinlayer import (
    Case, ConfigError, GrowthLaw, InvalidModelError, ModelDomainError, ModelSpec, PopulationSpec, PressureLaw,
    classify_case, growth_eval, potential, pressure_deriv, pressure_eval,
)


def pop(name="a", p=None, mu_tilde=1.0):
    return PopulationSpec(name, 1.0, 1.0, mu_tilde, p or PressureLaw.zero())


class TestPressure:
    def test_examples(self):
        assert pressure_eval(PressureLaw.power(1, 2), 0.0) == 0.0
        assert pressure_eval(PressureLaw.power(1, 1), 0.5) == 0.5
        assert pressure_eval(PressureLaw.power(2, 3), 0.5) == pytest.approx(0.25, abs=1e-15)

    def test_deriv_examples(self):
        assert pressure_deriv(PressureLaw.power(1, 2), 0.5) == pytest.approx(1.0)
        assert pressure_deriv(PressureLaw.zero(), 0.7) == 0.0
        # gamma = 1 gives k even at the origin
        assert pressure_deriv(PressureLaw.power(3, 1), 0.0) == 3.0

    @pytest.mark.parametrize("v", [0.05, 0.3, 0.77, 1.0])
    def test_deriv_matches_central_difference(self, v):
        law = PressureLaw.power(1, 2)
        h = 1e-6
        fd = (pressure_eval(law, v + h) - pressure_eval(law, v - h)) / (2 * h)
        assert pressure_deriv(law, v) == pytest.approx(fd, rel=1e-8)

    def test_potential_examples(self):
        assert potential(PressureLaw.power(1, 2), 1.0) == pytest.approx(2 / 3, abs=1e-15)
        assert potential(PressureLaw.zero(), 0.4) == 0.0
        q, _ = quad(lambda w: w * pressure_deriv(PressureLaw.power(1, 2), w), 0, 0.8, epsabs=1e-14)
        assert abs(potential(PressureLaw.power(1, 2), 0.8) - q) <= 1e-10

    @pytest.mark.parametrize("fn", [pressure_eval, pressure_deriv, potential])
    def test_negative_argument_rejected(self, fn):
        with pytest.raises(ModelDomainError):
            fn(PressureLaw.power(1, 2), -0.1)

    @pytest.mark.parametrize("k,gamma", [(0, 2), (-1, 2), (1, 0.5), (math.inf, 1)])
    def test_invalid_parameters(self, k, gamma):
        with pytest.raises(ConfigError):
            PressureLaw.power(k, gamma)

    @settings(max_examples=100, deadline=None)
    @given(k=st.floats(0.1, 5), gamma=st.floats(1, 4), v=st.floats(0, 1))
    def test_potential_equals_quadrature(self, k, gamma, v):
        law = PressureLaw.power(k, gamma)
        q, _ = quad(lambda w: w * pressure_deriv(law, w), 0, v, epsabs=1e-13, epsrel=1e-13)
        assert abs(potential(law, v) - q) <= 1e-10

    @pytest.mark.parametrize("law", [PressureLaw.zero(), PressureLaw.power(1, 1), PressureLaw.power(2.5, 3.5)])
    def test_monotone_and_convex_consistent(self, law):
        v = np.linspace(0, 1, 11)
        assert np.all(np.diff(pressure_eval(law, v)) >= 0)
        assert np.all(np.diff(potential(law, v)) >= 0)
        # potential' = v * law'(v); its finite-difference slope must be >= 0
        slope = v * pressure_deriv(law, v)
        assert np.all(np.diff(slope) / 0.1 >= -1e-8)


class TestGrowth:
    def test_examples(self):
        assert growth_eval(GrowthLaw.zero(), 0.3, 0.5) == 0.0
        assert growth_eval(GrowthLaw.logistic(1, 1), 0.2, 1.0) == 0.0
        assert growth_eval(GrowthLaw.logistic(2, 1), 0.25, 0.5) == pytest.approx(0.25, abs=1e-15)

    def test_vanishes_without_cells(self):
        assert growth_eval(GrowthLaw.logistic(3, 0.5), 0.0, 0.9) == 0.0

    def test_domain(self):
        with pytest.raises(ModelDomainError):
            growth_eval(GrowthLaw.logistic(1, 1), 0.5, 0.4)
        with pytest.raises(ModelDomainError):
            growth_eval(GrowthLaw.logistic(1, 1), -0.1, 0.4)

    def test_capacity_range(self):
        with pytest.raises(ConfigError):
            GrowthLaw.logistic(1, 1.5)


class TestCases:
    def test_case1(self):
        m = ModelSpec((pop("a", PressureLaw.power(1, 2)), pop("b", PressureLaw.power(1, 3))))
        assert classify_case(m) is Case.CASE1

    def test_case2(self):
        m = ModelSpec((pop("a"), pop("b")), PressureLaw.power(1, 2))
        assert classify_case(m) is Case.CASE2

    def test_case3(self):
        m = ModelSpec((pop("a", PressureLaw.power(1, 1)), pop("b", PressureLaw.power(1, 2))), PressureLaw.power(1, 2))
        assert classify_case(m) is Case.CASE3

    def test_case3_mixed(self):
        m = ModelSpec((pop("a", PressureLaw.power(1, 2)), pop("b")), PressureLaw.power(1, 2))
        assert classify_case(m) is Case.CASE3_MIXED

    def test_no_driving_pressure_rejected(self):
        with pytest.raises(InvalidModelError):
            ModelSpec((pop("a", PressureLaw.power(1, 2)), pop("b")))

    @pytest.mark.parametrize("field", ["mu1", "mu3", "mu_tilde_13"])
    @pytest.mark.parametrize("bad", [0.0, -1.0, math.inf, math.nan])
    def test_mobilities_positive_finite(self, field, bad):
        kw = dict(name="a", mu1=1.0, mu3=1.0, mu_tilde_13=1.0)
        kw[field] = bad
        with pytest.raises(ConfigError) as info:
            PopulationSpec(**kw)
        assert info.value.problems[0][0] == field

    def test_with_mu_tilde(self):
        m = ModelSpec((pop("a", PressureLaw.power(1, 2)), pop("b", PressureLaw.power(1, 2))))
        assert m.with_mu_tilde([3, 4]).mu_tilde().tolist() == [3.0, 4.0]
        assert m.mu_tilde().tolist() == [1.0, 1.0]


@settings(max_examples=1, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_stress_map_injective(seed):
    # 1000 random pairs of distinct states never share a stress vector.
    rng = np.random.default_rng(seed)
    m = ModelSpec(
        (pop("a", PressureLaw.power(1.3, 1.5)), pop("b", PressureLaw.power(0.7, 2.0)), pop("c", PressureLaw.power(2, 1))),
        PressureLaw.power(1, 2),
    )
    checked = 0
    while checked < 1000:
        a, b = rng.uniform(0, 1, 3), rng.uniform(0, 1, 3)
        if np.max(np.abs(a - b)) < 1e-3:
            continue
        sa, sb = m.stresses(a[:, None])[:, 0], m.stresses(b[:, None])[:, 0]
        assert np.max(np.abs(sa - sb)) > 1e-12
        checked += 1
