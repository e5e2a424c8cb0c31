import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from fqcov.functions import (
    Curve,
    FunctionSpec,
    as_step,
    below_curve,
    bump_normalizer,
    check_derivative,
    constant,
    identity,
    indicator,
    linear_combination,
    mollifier_rule,
    mollify,
    polynomial,
    ramp,
    step,
    zeta,
)
from fqcov.kernel import hermite_normal

SMOOTH = [
    polynomial([1.0, -2.0, 0.5, 0.25]),
    FunctionSpec("sin"),
    FunctionSpec("cos"),
    FunctionSpec("tanh"),
    FunctionSpec("gauss_bump"),
    FunctionSpec("power_abs", {"p": 2.5}),
    linear_combination([(2.0, FunctionSpec("sin")), (-1.0, polynomial([0, 0, 1]))]),
]


class TestEvaluation:
    def test_step_left_continuous(self):
        f = step([0.0, 1.0, 2.0], [3.0, -1.0])
        x = np.array([-0.5, 0.0, 1e-12, 1.0, 1.5, 2.0, 2.0 + 1e-12])
        np.testing.assert_array_equal(f(x), [0, 0, 3, 3, -1, -1, 0])

    def test_indicator_half_open(self):
        f = indicator(-0.5, 0.5)
        np.testing.assert_array_equal(f(np.array([-0.5, 0.0, 0.5, 0.6])), [0, 1, 1, 0])

    def test_step_validation(self):
        with pytest.raises(ValueError):
            step([0.0, 1.0], [1.0, 2.0])
        with pytest.raises(ValueError):
            step([1.0, 0.0], [1.0])
        with pytest.raises(ValueError):
            indicator(1.0, 1.0)
        with pytest.raises(ValueError):
            FunctionSpec("nope")

    def test_time_dependent_needs_s(self):
        f = FunctionSpec("x_times_s")
        assert f.time_dependent
        assert f(np.array([2.0]), np.array([3.0]))[0] == 6.0
        with pytest.raises(ValueError):
            f(np.array([1.0]))

    def test_below_curve(self):
        f = below_curve(Curve("linear", {"c1": 1.0}))
        assert f(np.array([0.4]), np.array([0.5]))[0] == 1.0
        assert f(np.array([0.5]), np.array([0.5]))[0] == 0.0

    def test_curves(self):
        assert Curve("constant", {"c": 2.0})(np.array([0.3]))[0] == 2.0
        assert Curve("sinusoid", {"amp": 1.0, "freq": 1.0})(0.25) == pytest.approx(1.0)
        with pytest.raises(ValueError):
            Curve("spline")

    def test_ramp(self):
        f = ramp(-1.0, 1.0)
        np.testing.assert_allclose(f(np.array([-2.0, 0.0, 3.0])), [0.0, 1.0, 2.0])

    def test_as_step(self):
        a, lv = as_step(indicator(0.0, 1.0))
        assert list(a) == [0.0, 1.0] and list(lv) == [1.0]
        a, lv = as_step(constant(2.0))
        assert np.isinf(a).all() and lv[0] == 2.0
        assert as_step(FunctionSpec("sin")) is None


class TestDerivatives:
    @pytest.mark.parametrize("f", SMOOTH, ids=lambda f: f.kind)
    def test_finite_difference(self, f):
        pts = np.random.default_rng(0).uniform(-3, 3, 100)
        assert check_derivative(f, pts) <= 1e-6

    def test_time_dependent(self):
        f = FunctionSpec("x_times_s")
        pts = np.random.default_rng(1).uniform(-3, 3, 100)
        s = np.random.default_rng(2).uniform(0, 1, 100)
        assert check_derivative(f, pts, s) <= 1e-6

    def test_mollified_steps(self):
        pts = np.random.default_rng(3).uniform(-1, 2, 100)
        for base in (indicator(0.0, 1.0), step([-1.0, 0.0, 0.5], [2.0, -1.0]), FunctionSpec("sign")):
            assert check_derivative(mollify(base, 8), pts) <= 1e-6

    def test_missing(self):
        assert indicator(0, 1).derivative() is None
        with pytest.raises(ValueError):
            check_derivative(indicator(0, 1), [0.5])

    def test_catalog_pairs(self):
        assert ramp(0, 1).derivative() == indicator(0, 1)
        assert FunctionSpec("abs_shift", {"a": 0.5}).derivative() == FunctionSpec("sign", {"a": 0.5})
        assert polynomial([0, 0, 1]).derivative() == polynomial([0.0, 2.0])


class TestMollifier:
    def test_normaliser(self):
        assert bump_normalizer() == pytest.approx(2.2522836210435817, rel=1e-12)
        val, _ = integrate.quad(lambda y: float(zeta(np.array([y]))[0]), 0, 2, epsabs=1e-13)
        assert val == pytest.approx(1.0, abs=1e-12)

    def test_rule_mass(self):
        y, w0, w1 = mollifier_rule()
        assert w0.sum() == pytest.approx(1.0, abs=1e-10)
        # int zeta' = 0 over its support
        assert w1.sum() == pytest.approx(0.0, abs=1e-10)

    @given(st.floats(-10, 10), st.integers(1, 200))
    def test_constant(self, c, n):
        x = np.linspace(-3, 3, 7)
        np.testing.assert_allclose(mollify(constant(c), n)(x), c, atol=1e-8)

    @pytest.mark.parametrize("n", [1, 4, 64])
    def test_identity(self, n):
        y, w0, _ = mollifier_rule()
        m1 = float(np.sum(w0 * y))
        assert m1 == pytest.approx(1.0, abs=1e-9)  # zeta is symmetric about 1
        x = np.linspace(-2, 2, 9)
        np.testing.assert_allclose(mollify(identity(), n)(x), x - m1 / n, atol=1e-10)

    def test_indicator_profile(self):
        f = mollify(indicator(0.0, 1.0), 8)
        vals = f(np.array([-0.1, 0.0, 0.125, 0.25, 0.5, 1.0, 1.25, 1.3]))
        np.testing.assert_allclose(vals[[0, 1, 6, 7]], 0.0, atol=1e-14)
        np.testing.assert_allclose(vals[[3, 4]], 1.0, atol=1e-12)
        # centre of the rising edge is halfway by symmetry of zeta
        assert vals[2] == pytest.approx(0.5, abs=1e-10)

    def test_rejects_time_dependent(self):
        with pytest.raises(ValueError):
            mollify(FunctionSpec("x_times_s"), 4)
        with pytest.raises(ValueError):
            FunctionSpec("mollified", {"base": constant(1).to_dict(), "n": 0})

    @pytest.mark.parametrize("base", [indicator(0, 1), FunctionSpec("sign"), FunctionSpec("power_abs", {"p": 0.5})], ids=str)
    def test_smooth_differences_bounded(self, base):
        f = mollify(base, 16)
        x = np.linspace(-2, 2, 801)
        v = f(x)
        d1 = np.diff(v) / np.diff(x)
        d2 = np.diff(d1) / np.diff(x)[1:]
        assert np.all(np.isfinite(d1)) and np.max(np.abs(d1)) < 100
        assert np.max(np.abs(d2)) < 1e4


class TestSecondMoments:
    CASES = [
        constant(1.5),
        indicator(-0.3, 0.8),
        step([-1.0, 0.0, 2.0], [1.0, -2.0]),
        FunctionSpec("sign"),
        FunctionSpec("power_abs", {"p": 0.7}),
        FunctionSpec("power_abs", {"p": -0.3}),
        polynomial([1.0, 0.5, -0.2]),
    ]

    @pytest.mark.parametrize("f", CASES, ids=lambda f: f.kind)
    def test_against_quad(self, f):
        sigma = 0.7

        def g(x):
            return float(f(np.array([x]))[0]) ** 2 * math.exp(-0.5 * (x / sigma) ** 2) / (sigma * math.sqrt(2 * math.pi))

        pts = list(f.breakpoints())
        val = sum(
            integrate.quad(g, a, b, limit=200, epsabs=1e-12)[0]
            for a, b in zip([-12.0] + pts, pts + [12.0])
        )
        assert f.gaussian_second_moment(sigma) == pytest.approx(val, rel=1e-7)

    def test_divergent_power(self):
        assert FunctionSpec("power_abs", {"p": -0.5}).gaussian_second_moment(1.0) == math.inf

    def test_time_dependent(self):
        z, w = hermite_normal()
        f = FunctionSpec("x_times_s")
        assert f.gaussian_second_moment(0.6, 2.0) == pytest.approx(float(w @ (0.6 * z * 2.0) ** 2))
        g = below_curve(Curve("constant", {"c": 0.0}))
        assert g.gaussian_second_moment(0.6, 0.5) == pytest.approx(0.5)

    def test_no_closed_form(self):
        assert FunctionSpec("sin").gaussian_second_moment(1.0) is None


functions = st.sampled_from(
    [
        constant(2.0),
        indicator(-1.0, 0.5),
        polynomial([0.0, 1.0, 3.0]),
        FunctionSpec("sin"),
        mollify(indicator(0.0, 1.0), 4),
        below_curve(Curve("linear", {"c0": 0.1, "c1": 1.0})),
        linear_combination([(1.0, FunctionSpec("tanh")), (0.5, step([0, 1, 2], [1, 2]))]),
    ]
)


class TestSerialisation:
    @settings(max_examples=30)
    @given(functions)
    def test_json_roundtrip(self, f):
        g = FunctionSpec.from_json(f.to_json())
        assert g == f and hash(g) == hash(f)
        x = np.linspace(-2, 2, 11)
        s = np.full_like(x, 0.5)
        np.testing.assert_array_equal(g(x, s), f(x, s))

    def test_schema(self):
        d = indicator(0.0, 1.0).to_dict()
        assert d == {"kind": "indicator", "params": {"a": 0.0, "b": 1.0}, "time_dependent": False}
        assert FunctionSpec.from_dict("sin") == FunctionSpec("sin")
