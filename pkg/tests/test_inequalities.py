import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fqcov import inequalities as ineq
from fqcov.kernel import covariance


def _rng(seed=0):
    return np.random.default_rng(seed)


class TestPowGap:
    @given(st.floats(0.0, 1.0), st.floats(0.01, 1.0))
    def test_matches_naive(self, x, a):
        naive = (1 - x) ** a - (1 - x**a)
        assert ineq._pow_gap(np.array(x), a) == pytest.approx(naive, abs=1e-12)

    def test_endpoints(self):
        assert ineq._pow_gap(np.array(0.0), 0.4) == pytest.approx(0.0, abs=1e-16)
        assert ineq._pow_gap(np.array(1.0), 0.4) == pytest.approx(0.0, abs=1e-16)


class TestChecks:
    N = 20_000

    def test_lemma31(self):
        r = ineq.check_lemma31(_rng(1), self.N)
        assert r.violations == 0 and r.samples == self.N

    def test_lemma31_middle_is_rho2(self):
        # the cancellation-free middle equals t^2H s^2H - mu^2
        s, t, h = 0.7, 2.9, 0.35
        mu = covariance(s, t, h)
        gap = 0.5 * ((t - s) ** (2 * h) - (t**h - s**h) ** 2)
        assert gap * ((s * t) ** h + mu) == pytest.approx((s * t) ** (2 * h) - mu**2, rel=1e-12)

    def test_lemma32(self):
        a, b, b_alt = ineq.check_lemma32(_rng(2), self.N)
        assert a.violations == 0
        assert b_alt.violations == 0
        # the (2 - 2^H) lower bound fails on a large share of tuples
        assert b.violations > self.N // 10

    def test_lemma32_counterexample(self):
        s, t, h = 1.0, 2.0, 0.3
        middle = s ** (2 * h) - covariance(s, t, h)
        weak_bound = 0.5 * (2 - 2**h) * (s / t) ** (2 * h) * (t - s) ** (2 * h)
        corrected = 0.5 * (2 - 4**h) * (s / t) ** (2 * h) * (t - s) ** (2 * h)
        assert middle == pytest.approx(0.24214, abs=1e-5)
        assert weak_bound == pytest.approx(0.25363, abs=1e-5)
        assert corrected <= middle < weak_bound

    def test_elementary(self):
        for r in ineq.check_elementary(_rng(3), self.N):
            assert r.violations == 0

    def test_lemma35(self):
        for r in ineq.check_lemma35(_rng(4), self.N):
            assert r.violations == 0

    def test_lemma36(self):
        for r in ineq.check_lemma36(_rng(5), self.N):
            assert r.violations == 0

    def test_degenerate_lemma31(self):
        s = t = np.array([1.3])
        h = np.array([0.3])
        r = ineq.check_bounds("x", 0.0 * s, 0.0 * s, 0.0 * s, {"s": s, "t": t, "H": h})
        assert r.violations == 0

    def test_check_bounds_flags(self):
        r = ineq.check_bounds("x", np.array([0.0, 0.0]), np.array([1.0, 2.0]), np.array([1.5, 1.5]), {"i": np.array([0, 1])})
        assert r.violations == 1
        assert r.worst_tuple == {"i": 1.0}
        assert r.worst_margin < 0

    def test_slack_absorbs_rounding(self):
        mid = np.array([1.0 + 1e-14])
        r = ineq.check_bounds("x", None, mid, np.array([1.0]), {})
        assert r.violations == 0


class TestSuite:
    def test_report(self):
        rep = ineq.verify_inequality_suite(5000, seed=11)
        names = [r.name for r in rep.results]
        assert names == [
            "lemma3.1",
            "lemma3.2(3.3)",
            "lemma3.2(3.4)",
            "lemma3.2(3.4)[2^2H]",
            "elementary(1+x)^a",
            "elementary(1-x)^a-(1-x^a)",
            "lemma3.5(ordered,C=1)",
            "lemma3.5(interleaved,C=3)",
            "lemma3.6(a)",
            "lemma3.6(b)",
            "lemma3.6(c)",
        ]
        assert rep.total_violations == rep.by_name("lemma3.2(3.4)").violations

    def test_deterministic_and_json(self):
        a = ineq.verify_inequality_suite(2000, seed=3)
        b = ineq.verify_inequality_suite(2000, seed=3)
        assert a.to_json() == b.to_json()
        back = ineq.ViolationReport.from_dict(json.loads(a.to_json()))
        assert back.to_dict() == a.to_dict()

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            ineq.verify_inequality_suite(0, seed=1)

    def test_constant_ratios_reported(self):
        rep = ineq.verify_inequality_suite(100, seed=1, ratio_samples=5)
        for name in ineq.RATIO_FUNCTIONS:
            entry = rep.constant_ratios[name]
            assert entry["lemma3.3_max_ratio"] > 0
            assert np.isfinite(entry["lemma3.4_max_ratio"])

    def test_by_name_missing(self):
        with pytest.raises(KeyError):
            ineq.verify_inequality_suite(10, seed=1).by_name("nope")
