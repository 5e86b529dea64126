import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from mpmath import mp
from scipy import integrate, special

from beamrate import numerics


class TestExpIntegral:
    @pytest.mark.parametrize("x", [1e-6, 0.01, 0.3, 0.99, 1.0, 2.5, 10.0,
                                   50.0, 300.0])
    def test_matches_scipy(self, x):
        assert numerics.exp_integral_e1(x) == pytest.approx(
            float(special.exp1(x)), rel=1e-12)

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            numerics.exp_integral_e1(0.0)

    @pytest.mark.parametrize("x", [0.1, 1.0, 30.0, 700.0, 5000.0])
    def test_scaled_variant_no_overflow(self, x):
        # e^x E1(x) stays in (0, ...) and ~ 1/x for large x
        val = numerics.e1_scaled(x)
        ref = float(mp.e1(x) * mp.exp(x))
        assert val == pytest.approx(ref, rel=1e-12)

    @given(st.floats(min_value=0.01, max_value=100.0))
    @settings(max_examples=50, deadline=None)
    def test_decreasing(self, x):
        assert numerics.exp_integral_e1(x) > numerics.exp_integral_e1(x * 1.5)


class TestIIntegral:
    """I(a, b) = int_0^inf e^(-a x) (1+x)^(-b) dx."""

    def _quad(self, alpha, beta):
        val, err = integrate.quad(
            lambda x: math.exp(-alpha * x) * (1 + x) ** (-beta),
            0.0, np.inf, epsabs=1e-14, epsrel=1e-12, limit=400)
        return val

    @pytest.mark.parametrize("alpha", [0.05, 0.2, 0.8, 2.0, 11.0, 50.0])
    @pytest.mark.parametrize("beta", [1, 2, 3, 13, 40, 130])
    def test_recurrence_matches_quadrature(self, alpha, beta):
        assert numerics.i_integral(alpha, beta) == pytest.approx(
            self._quad(alpha, beta), rel=1e-8)

    def test_beta_one_closed_form(self):
        # I(a, 1) = e^a E1(a)
        a = 0.7
        assert numerics.i_integral(a, 1) == pytest.approx(
            math.exp(a) * float(special.exp1(a)), rel=1e-13)

    def test_extreme_arguments_stay_accurate(self):
        # far outside the naive alternating sum's reach
        alpha, beta = 2880.0, 2161
        ref = float(numerics.i_integral_mp(2880, beta))
        assert numerics.i_integral(alpha, beta) == pytest.approx(ref, rel=1e-10)

    def test_mp_matches_float_on_easy_inputs(self):
        for alpha_num, den, beta in [(1, 1, 1), (3, 10, 4), (12, 10, 10),
                                     (320, 10, 241)]:
            v = float(numerics.i_integral_mp(alpha_num, beta, alpha_den=den))
            assert v == pytest.approx(numerics.i_integral(alpha_num / den, beta),
                                      rel=1e-12)

    def test_mp_alpha_formed_at_working_precision(self):
        # (alpha, alpha_den) must reproduce the exact quotient, not the
        # double-rounded alpha: compare against a high-precision direct eval
        with mp.workdps(60):
            ref = mp.quad(lambda x: mp.e ** (-mp.mpf(7) / 3 * x) / (1 + x) ** 5,
                          [0, mp.inf])
            got = numerics.i_integral_mp(7, 5, alpha_den=3)
            assert abs(got / ref - 1) < mp.mpf("1e-30")

    @given(st.floats(min_value=0.05, max_value=50.0),
           st.integers(min_value=1, max_value=120))
    @settings(max_examples=60, deadline=None)
    def test_positive_and_bounded(self, alpha, beta):
        val = numerics.i_integral(alpha, beta)
        # 1/(alpha+beta) <= I <= min(1/alpha, 1/(beta-1)) for beta > 1
        assert val > 1.0 / (alpha + beta) * 0.999999
        assert val < 1.0 / alpha + 1e-15

    @given(st.floats(min_value=0.05, max_value=50.0),
           st.integers(min_value=1, max_value=100))
    @settings(max_examples=40, deadline=None)
    def test_monotone_decreasing_in_beta(self, alpha, beta):
        assert numerics.i_integral(alpha, beta) > numerics.i_integral(alpha,
                                                                      beta + 1)

    def test_cancellation_estimate_is_an_upper_bound_witness(self):
        # the a-priori digit bound must grow with alpha at fixed large beta
        d_small = numerics.i_integral_cancellation_digits(1.0, 100)
        d_large = numerics.i_integral_cancellation_digits(50.0, 100)
        assert d_large > d_small


class TestSignedTermSum:
    def test_exact_cancellation(self):
        s = numerics.SignedTermSum()
        s.add(+1, math.log(3.0))
        s.add(-1, math.log(3.0))
        assert s.total() == pytest.approx(0.0, abs=1e-300)

    def test_matches_direct_sum(self):
        terms = [2.5, -1.25, 0.75, -3.5, 1.0]
        s = numerics.SignedTermSum()
        for t in terms:
            s.add(int(math.copysign(1, t)), math.log(abs(t)))
        assert s.total() == pytest.approx(sum(terms), rel=1e-14)

    def test_precision_loss_flag(self):
        s = numerics.SignedTermSum()
        s.add(+1, 40.0)
        s.add(-1, 40.0)
        s.add(+1, 0.0)
        assert s.total() == pytest.approx(1.0, rel=1e-6)
        assert s.precision_loss
        assert s.relative_error_estimate() > 1e-10


class TestSemiInfiniteIntegration:
    def test_exponential(self):
        spec = numerics.QuadratureSpec()
        val, err = numerics.integrate_semi_infinite(lambda x: math.exp(-x),
                                                    spec)
        assert val == pytest.approx(1.0, rel=1e-10)
        assert err < 1e-8

    def test_heavy_tail_converges(self):
        spec = numerics.QuadratureSpec(domain_split_point=5.0)
        val, _ = numerics.integrate_semi_infinite(
            lambda x: 1.0 / (1.0 + x) ** 3, spec)
        assert val == pytest.approx(0.5, rel=1e-9)

    def test_divergent_raises(self):
        spec = numerics.QuadratureSpec()
        with pytest.raises(numerics.IntegrationError):
            numerics.integrate_semi_infinite(lambda x: 1.0 / (1.0 + x), spec)

    def test_spec_validation(self):
        with pytest.raises(ValueError):
            numerics.QuadratureSpec(abs_tol=-1.0)
        with pytest.raises(ValueError):
            numerics.QuadratureSpec(domain_split_point=0.0)


class TestLogBinomial:
    @given(st.integers(min_value=0, max_value=300))
    @settings(max_examples=40, deadline=None)
    def test_matches_exact(self, n):
        k = n // 2
        if n == 0:
            assert numerics.log_binomial(n, k) == 0.0
        else:
            assert numerics.log_binomial(n, k) == pytest.approx(
                math.log(math.comb(n, k)), rel=1e-12)
