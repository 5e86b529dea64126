import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from beamrate import distributions as dist
from beamrate.distributions import (CoefficientTable, LawKind, SinrLaw,
                                    UserChannelProfile)

P4 = UserChannelProfile(M=4, rho=10.0)
P1 = UserChannelProfile(M=1, rho=1.0)

profiles = st.builds(
    UserChannelProfile,
    M=st.integers(min_value=1, max_value=6),
    rho=st.floats(min_value=0.05, max_value=200.0),
)


class TestProfile:
    def test_validation(self):
        with pytest.raises(ValueError):
            UserChannelProfile(M=0, rho=1.0)
        with pytest.raises(ValueError):
            UserChannelProfile(M=2, rho=-1.0)
        with pytest.raises(ValueError):
            UserChannelProfile(M=2, rho=1.0, N=2, L=3)

    def test_frozen(self):
        with pytest.raises(AttributeError):
            P4.M = 2


class TestPerBeamLaw:
    def test_known_value_at_zero(self):
        # f_Z(0) = M/rho + M - 1
        p = UserChannelProfile(M=2, rho=1.0)
        assert dist.pdf_z(0.0, p) == pytest.approx(3.0)

    def test_exponential_special_case(self):
        # M=1: Z ~ Exp(1/rho)
        xs = np.linspace(0.0, 20.0, 50)
        assert dist.cdf_z(xs, P1) == pytest.approx(1.0 - np.exp(-xs), rel=1e-12)

    def test_pdf_normalizes(self):
        val, _ = integrate.quad(lambda x: dist.pdf_z(x, P4), 0.0, np.inf)
        assert val == pytest.approx(1.0, abs=1e-10)

    def test_pdf_is_cdf_derivative(self):
        h = 1e-6
        for x in (0.1, 0.9, 3.0, 8.0):
            num = (dist.cdf_z(x + h, P4) - dist.cdf_z(x - h, P4)) / (2 * h)
            assert dist.pdf_z(x, P4) == pytest.approx(num, rel=1e-5)

    @given(profiles, st.floats(min_value=0.0, max_value=100.0))
    @settings(max_examples=100, deadline=None)
    def test_cdf_sf_complement(self, p, x):
        assert dist.cdf_z(x, p) + dist.sf_z(x, p) == pytest.approx(1.0,
                                                                   abs=1e-12)

    @given(profiles)
    @settings(max_examples=50, deadline=None)
    def test_monotone(self, p):
        xs = np.linspace(0.0, 50.0, 200)
        c = dist.cdf_z(xs, p)
        assert np.all(np.diff(c) >= -1e-12)
        assert c[0] == 0.0

    def test_step_convention(self):
        assert dist.cdf_z(-1.0, P4) == 0.0
        assert dist.sf_z(-1.0, P4) == 1.0


class TestBestBeamLaw:
    def test_reduces_to_z_at_m1(self):
        xs = np.linspace(0.0, 10.0, 30)
        assert dist.cdf_y(xs, P1) == pytest.approx(dist.cdf_z(xs, P1),
                                                   rel=1e-12)

    def test_monte_carlo_agreement(self):
        rng = np.random.default_rng(7)
        g = rng.standard_exponential((200_000, 4))
        sinr = g / (4 / 10.0 + g.sum(1, keepdims=True) - g)
        y = sinr.max(axis=1)
        ks = stats.kstest(y, lambda x: dist.cdf_y(x, P4)).statistic
        assert ks < 0.005

    def test_bounded_by_per_beam_law(self):
        # max of M >= each component: F_Y <= F_Z pointwise
        xs = np.linspace(0.01, 20.0, 100)
        assert np.all(dist.cdf_y(xs, P4) <= dist.cdf_z(xs, P4) + 1e-12)

    def test_independence_approx_close_in_tail(self):
        xs = np.linspace(3.0, 20.0, 50)
        exact = dist.cdf_y(xs, P4)
        approx = dist.cdf_y_approx(xs, P4)
        assert np.max(np.abs(exact - approx)) < 5e-3

    def test_support_boundary(self):
        # Y < 1/(M-1) is impossible to exceed ... the max SINR is bounded
        # below 1/(M-1) only when all beams interfere; CDF reaches 1 at inf
        assert dist.cdf_y(1e9, P4) == pytest.approx(1.0, abs=1e-9)

    @given(profiles)
    @settings(max_examples=50, deadline=None)
    def test_monotone_nondecreasing(self, p):
        xs = np.linspace(0.0, 30.0, 300)
        c = dist.cdf_y(xs, p)
        assert np.all(np.diff(c) >= -1e-12)


class TestSpectralCoefficients:
    def test_partition_of_unity(self):
        # sum_l xi1 = 1 (F_W must tend to 1)
        for N in range(1, 12):
            for L in range(1, N + 1):
                total = sum(dist.xi1(N, L, ell, exact=True)
                            for ell in range(L))
                assert total == Fraction(1)

    def test_full_depth_collapses(self):
        # L=N: best-N of N keeps everything, single term at ell = N-1
        for N in range(2, 8):
            assert dist.xi1(N, N, N - 1, exact=True) == Fraction(1)

    def test_depth_one(self):
        for N in range(1, 8):
            assert dist.xi1(N, 1, 0, exact=True) == Fraction(1)

    def test_known_table(self):
        # N=10, L=2: xi1 = (-4, 5)
        assert dist.xi1(10, 2, 0, exact=True) == Fraction(-4)
        assert dist.xi1(10, 2, 1, exact=True) == Fraction(5)

    @pytest.mark.parametrize("N", range(1, 7))
    def test_recursion_equals_bruteforce(self, N):
        for L in range(1, N + 1):
            for tau2 in range(1, 6):
                for ell in range(tau2 * (L - 1) + 1):
                    assert dist.xi2(N, L, tau2, ell, exact=True) == \
                        dist.xi2_bruteforce(N, L, tau2, ell, exact=True)

    def test_fallback_engaged_when_base_coefficient_vanishes(self):
        # xi1(N, L, 0) = 0 makes the recursion's division undefined
        cases = [(N, L) for N in range(2, 12) for L in range(1, N + 1)
                 if dist.xi1(N, L, 0, exact=True) == 0]
        assert cases, "expected at least one degenerate case in range"
        for N, L in cases:
            assert dist.xi2_uses_fallback(N, L)
            for ell in range(2 * (L - 1) + 1):
                assert dist.xi2(N, L, 2, ell, exact=True) == \
                    dist.xi2_bruteforce(N, L, 2, ell, exact=True)

    def test_tail_equivalent_exponent(self):
        assert dist.tail_equivalent_exponent(10, 2) == pytest.approx(5.0)
        for N in range(1, 9):
            assert dist.tail_equivalent_exponent(N, N) == pytest.approx(1.0)
            assert dist.tail_equivalent_exponent(N, 1) == pytest.approx(N)


class TestBestLLaw:
    def test_collapses_to_y_at_full_depth(self):
        p = UserChannelProfile(M=4, rho=10.0, N=10, L=10)
        xs = np.linspace(0.0, 15.0, 60)
        assert dist.cdf_w(xs, p) == pytest.approx(dist.cdf_y(xs, p),
                                                  rel=1e-12, abs=1e-15)

    def test_depth_one_is_nth_power(self):
        p = UserChannelProfile(M=4, rho=10.0, N=6, L=1)
        xs = np.linspace(0.0, 15.0, 60)
        assert dist.cdf_w(xs, p) == pytest.approx(dist.cdf_y(xs, p) ** 6,
                                                  rel=1e-10, abs=1e-15)

    def test_monte_carlo_agreement(self):
        p = UserChannelProfile(M=4, rho=10.0, N=10, L=2)
        rng = np.random.default_rng(11)
        g = rng.standard_exponential((100_000, 10, 4))
        sinr = g / (4 / 10.0 + g.sum(2, keepdims=True) - g)
        y = sinr.max(axis=2)
        # the reported-value law is the uniform mixture of the top-L order
        # statistics: pool both reported blocks per user
        w = np.sort(y, axis=1)[:, -2:].ravel()
        ks = stats.kstest(w, lambda x: dist.cdf_w(x, p)).statistic
        assert ks < 0.006

    def test_survival_complement(self):
        p = UserChannelProfile(M=4, rho=10.0, N=10, L=4)
        xs = np.linspace(0.0, 12.0, 50)
        assert dist.cdf_w(xs, p) + dist.sf_w(xs, p) == pytest.approx(
            1.0, abs=1e-9)

    def test_sf_power_cancellation_free_tail(self):
        p = UserChannelProfile(M=4, rho=10.0, N=10, L=2)
        # deep tail where 1 - F_Y^eta would lose all digits in naive form
        x = 60.0
        val = dist.sf_y_power(x, p, 5.0)
        ref = 5.0 * dist.sf_y(x, p)  # first-order expansion, tiny sf
        assert val == pytest.approx(ref, rel=1e-6)


class TestFeedbackCountPmf:
    def test_sums_to_one(self):
        total = sum(dist.feedback_count_pmf(t, 20, 0.25) for t in range(21))
        assert total == pytest.approx(1.0, rel=1e-12)

    def test_matches_scipy(self):
        for t in range(11):
            assert dist.feedback_count_pmf(t, 10, 0.1) == pytest.approx(
                float(stats.binom.pmf(t, 10, 0.1)), rel=1e-10)

    def test_degenerate_probabilities(self):
        assert dist.feedback_count_pmf(0, 5, 0.0) == 1.0
        assert dist.feedback_count_pmf(5, 5, 1.0) == 1.0

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            dist.feedback_count_pmf(6, 5, 0.5)


class TestSinrLaw:
    @pytest.mark.parametrize("kind", list(LawKind))
    def test_inverse_cdf_round_trip(self, kind):
        p = UserChannelProfile(M=4, rho=10.0, N=10, L=2)
        law = SinrLaw(kind=kind, profile=p)
        for q in (0.1, 0.5, 0.9, 0.999):
            x = law.inverse_cdf(q)
            assert float(law.cdf(x)) == pytest.approx(q, abs=1e-9)

    @pytest.mark.parametrize("kind", list(LawKind))
    def test_cdf_sf_complement(self, kind):
        p = UserChannelProfile(M=4, rho=10.0, N=10, L=2)
        law = SinrLaw(kind=kind, profile=p)
        for x in (0.1, 1.0, 5.0, 20.0):
            assert float(law.cdf(x)) + float(law.sf(x)) == pytest.approx(
                1.0, abs=1e-10)


class TestCoefficientTable:
    def test_round_trip(self, tmp_path, monkeypatch):
        monkeypatch.setenv(dist.CACHE_DIR_ENV, str(tmp_path))
        t = CoefficientTable()
        v = t.get_xi1(10, 2, 0)
        t.get_xi2(6, 3, 2, 1)
        path = t.save()
        assert path.parent == tmp_path / "beamrate" \
            or str(tmp_path) in str(path)
        loaded = CoefficientTable.load(path)
        assert loaded.xi1[(10, 2, 0)] == v
        assert loaded.xi2[(6, 3, 2, 1)] == t.xi2[(6, 3, 2, 1)]

    def test_env_var_controls_location(self, tmp_path, monkeypatch):
        monkeypatch.setenv(dist.CACHE_DIR_ENV, str(tmp_path))
        assert str(CoefficientTable.default_path()).startswith(str(tmp_path))

    def test_schema_version_check(self, tmp_path):
        bad = tmp_path / "coefficients.json"
        bad.write_text('{"schema_version": 99, "xi1": {}, "xi2": {}}')
        with pytest.raises(ValueError):
            CoefficientTable.load(bad)
