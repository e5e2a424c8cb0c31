import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fqcov.engine import TimeGrid, generate_path, generate_paths
from fqcov.functions import FunctionSpec, constant, identity, indicator, linear_combination, polynomial
from fqcov.montecarlo import mc_estimate
from fqcov.qcov import (
    QcovEstimate,
    cell_weights,
    closed_form,
    estimate_decomposed,
    estimate_eps,
    estimate_eps_td,
    estimate_riemann,
    expected_closed_form,
)

SQUARE = polynomial([0.0, 0.0, 1.0])
CUBE = polynomial([0.0, 0.0, 0.0, 1.0])


def _paths(h, n_paths, n_steps=4096, look=8, seed=2024):
    return list(generate_paths(TimeGrid(1.0, n_steps, look), h, seed, n_paths))


@pytest.fixture(scope="module")
def paths03():
    return _paths(0.3, 200)


@pytest.fixture(scope="module")
def one_path():
    return generate_path(TimeGrid(1.0, 512, 16), 0.3, 77)


class TestDeterministic:
    def test_weights_telescope(self, one_path):
        w = cell_weights(one_path, 512)
        assert math.fsum(w) == pytest.approx(1.0, abs=1e-14)
        assert np.all(w > 0)

    def test_constant_is_zero(self, one_path):
        assert estimate_eps(constant(3.0), one_path, 4 / 512, 1.0).value == 0.0
        assert estimate_riemann(constant(3.0), one_path, t=1.0).value == 0.0
        assert closed_form(constant(3.0), one_path, 1.0).value == 0.0

    @settings(max_examples=25, deadline=None)
    @given(st.floats(-3, 3), st.floats(-3, 3))
    def test_linear_in_f(self, a, b):
        p = generate_path(TimeGrid(1.0, 256, 8), 0.3, 5)
        f, g = FunctionSpec("sin"), indicator(-0.2, 0.4)
        combo = linear_combination([(a, f), (b, g)])
        eps = 4 / 256
        lhs = estimate_eps(combo, p, eps, 0.5).value
        rhs = a * estimate_eps(f, p, eps, 0.5).value + b * estimate_eps(g, p, eps, 0.5).value
        assert lhs == pytest.approx(rhs, abs=1e-10)

    @pytest.mark.parametrize("f", [SQUARE, FunctionSpec("tanh"), indicator(0.0, 0.3)], ids=lambda f: f.kind)
    def test_decomposition_identity(self, one_path, f):
        i_plus, i_minus = estimate_decomposed(f, one_path, 8 / 512, 1.0)
        assert i_plus - i_minus == pytest.approx(estimate_eps(f, one_path, 8 / 512, 1.0).value, abs=1e-12)

    def test_identity_closed_form(self, one_path):
        # f' = 1, so the sum is the total weight t^2H
        assert closed_form(identity(), one_path, 0.5).value == pytest.approx(0.5**0.6, rel=1e-14)

    def test_riemann_partition(self, one_path):
        full = estimate_riemann(SQUARE, one_path, t=1.0)
        same = estimate_riemann(SQUARE, one_path, partition=one_path.times[:513])
        assert full.value == same.value
        coarse = estimate_riemann(SQUARE, one_path, partition=np.linspace(0, 1, 65))
        assert coarse.eps_or_mesh == pytest.approx(1 / 64)

    def test_riemann_first_cell(self, one_path):
        unit = estimate_riemann(identity(), one_path, partition=[0.0, 0.5])
        literal = estimate_riemann(identity(), one_path, partition=[0.0, 0.5], first_cell="literal")
        b = one_path.at(0.5)
        assert unit.value == pytest.approx(b**2)
        assert literal.value == pytest.approx(0.6 * b**2)

    def test_td_reduces(self, one_path):
        f = FunctionSpec("sin")
        assert estimate_eps_td(f, one_path, 4 / 512, 1.0).value == estimate_eps(f, one_path, 4 / 512, 1.0).value

    def test_errors(self, one_path):
        with pytest.raises(ValueError, match="lookahead"):
            estimate_eps(SQUARE, one_path, 32 / 512, 1.0)
        with pytest.raises(ValueError):
            estimate_eps(FunctionSpec("x_times_s"), one_path, 4 / 512, 1.0)
        with pytest.raises(ValueError):
            estimate_eps(SQUARE, one_path, 0.001, 1.0)
        with pytest.raises(ValueError):
            closed_form(indicator(0, 1), one_path, 1.0)
        with pytest.raises(ValueError):
            estimate_riemann(SQUARE, one_path, partition=[0.5, 1.0])
        with pytest.raises(ValueError):
            estimate_riemann(SQUARE, one_path)
        with pytest.raises(ValueError):
            estimate_riemann(SQUARE, one_path, t=1.0, first_cell="half")
        with pytest.raises(ValueError):
            QcovEstimate(1.0, "midpoint", 1.0, 0.1)


class TestOracle:
    def test_cube(self):
        # E 3 B_s^2 integrated against d s^2H: 1.5 t^4H
        assert expected_closed_form(CUBE, 0.3, 1.0) == pytest.approx(1.5, rel=1e-14)
        assert expected_closed_form(CUBE, 0.3, 2.0) == pytest.approx(1.5 * 2**1.2, rel=1e-14)

    def test_sin(self):
        # int_0^1 exp(-u/2) du
        assert expected_closed_form(FunctionSpec("sin"), 0.3, 1.0) == pytest.approx(0.7869386805747333, rel=1e-13)

    def test_polynomials(self):
        # f' = 1 gives t^2H; f' = 2x is odd and averages to 0
        assert expected_closed_form(identity(), 0.2, 1.7) == pytest.approx(1.7**0.4, rel=1e-14)
        assert expected_closed_form(SQUARE, 0.2, 1.7) == pytest.approx(0.0, abs=1e-14)


class TestMonteCarlo:
    @pytest.mark.parametrize("f", [SQUARE, CUBE, FunctionSpec("sin")], ids=["x2", "x3", "sin"])
    def test_eps_vs_oracle(self, paths03, f):
        target = expected_closed_form(f, 0.3, 1.0)
        est = mc_estimate([estimate_eps(f, p, 8 / 4096, 1.0).value for p in paths03])
        assert abs(est.value - target) <= max(3 * est.std_error, 0.05 * abs(target))

    def test_closed_form_means(self, paths03):
        est = mc_estimate([closed_form(SQUARE, p, 1.0).value for p in paths03])
        assert est.within(0.0, 3)
        est = mc_estimate([closed_form(CUBE, p, 1.0).value for p in paths03])
        assert abs(est.value - 1.5) <= max(3 * est.std_error, 0.05 * 1.5)

    def test_time_only_function_is_zero_mean(self, paths03):
        f = FunctionSpec("time")
        est = mc_estimate([estimate_eps_td(f, p, 8 / 4096, 1.0).value for p in paths03])
        assert est.within(0.0, 3)

    def test_x_times_s(self, paths03):
        target = 0.6 / 1.6
        est = mc_estimate([estimate_eps_td(FunctionSpec("x_times_s"), p, 8 / 4096, 1.0).value for p in paths03])
        assert abs(est.value - target) <= max(3 * est.std_error, 0.05 * target)

    def test_riemann_vs_eps(self, paths03):
        eps = mc_estimate([estimate_eps(SQUARE, p, 8 / 4096, 1.0).value for p in paths03])
        rie = mc_estimate([estimate_riemann(SQUARE, p, t=1.0).value for p in paths03])
        diff = mc_estimate([estimate_eps(SQUARE, p, 8 / 4096, 1.0).value - estimate_riemann(SQUARE, p, t=1.0).value for p in paths03])
        assert eps.within(0.0, 3) and rie.within(0.0, 3)
        assert diff.within(0.0, 3)

    def test_brownian_case(self):
        ps = _paths(0.5, 200, n_steps=2048)
        est = mc_estimate([estimate_eps(identity(), p, 8 / 2048, 1.0).value for p in ps])
        assert abs(est.value - 1.0) <= max(3 * est.std_error, 0.05)

    def test_ito_square(self, paths03):
        # F = x^2: E F(B_1) = 1 = half of E[2x, B]
        lhs = mc_estimate([p.at(1.0) ** 2 for p in paths03])
        half = mc_estimate([0.5 * estimate_eps(polynomial([0.0, 2.0]), p, 8 / 4096, 1.0).value for p in paths03])
        assert abs(lhs.value - 1.0) <= 3 * lhs.std_error
        assert abs(half.value - 1.0) <= max(3 * half.std_error, 0.05)

    @pytest.mark.slow
    def test_minus_i_minus_identity(self):
        # f = x: -I- tends to t^2H / 2
        ps = _paths(0.3, 500, n_steps=16384, look=1, seed=7)
        vals = [-estimate_decomposed(identity(), p, 1 / 16384, 1.0)[1] for p in ps]
        est = mc_estimate(vals)
        assert abs(est.value - 0.5) <= 0.05 * 0.5
