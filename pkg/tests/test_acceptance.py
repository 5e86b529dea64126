"""Acceptance gate: one test per top-level criterion.

Each test states its tolerance inline and is verified against an
independent oracle (adaptive quadrature, brute-force polynomial algebra,
Monte Carlo with fixed seeds).  Three tests are expected to fail: the
stated blanket tolerances do not hold at the edges of their own grids
(small user counts for the rate approximations, depth L=2 for the tail
bound).  They are kept at the stated tolerance rather than loosened; see
the failure messages for the measured values.
"""

import math
import time

import numpy as np
import pytest
from scipy import integrate

from beamrate import distributions as dist
from beamrate import figures, rates, scaling, simulator
from beamrate.distributions import UserChannelProfile
from beamrate.numerics import i_integral, i_integral_cancellation_digits
from beamrate.rates import Scheme
from beamrate.simulator import SchedulerKind, SystemConfig, run_drops


def db(x):
    return 10.0 ** (x / 10.0)


# --------------------------------------------------------------------------
# closed-form fidelity


@pytest.mark.slow
def test_single_user_rate_closed_form_grid():
    """j_k closed form vs adaptive quadrature: rel err <= 1e-7 over
    (M, rho, eps) in {1,2,4} x {1,10,100} x {1..64}, <= 60 s total."""
    t0 = time.monotonic()
    worst = 0.0
    for M in (1, 2, 4):
        for rho in (1.0, 10.0, 100.0):
            p = UserChannelProfile(M=M, rho=rho)
            for eps in range(1, 65):
                r = rates.j_k(eps, p)
                q = rates.j_k(eps, p, force_quadrature=True)
                if r.precision_loss:
                    # documented flag escape: the fallback must still agree
                    assert r.method is rates.Method.QUADRATURE
                worst = max(worst, abs(r.value / q.value - 1.0))
    elapsed = time.monotonic() - t0
    assert worst <= 1e-7, f"worst rel err {worst:.3e}"
    assert elapsed <= 60.0, f"grid took {elapsed:.1f} s"


def test_interference_integral_recursion_grid():
    """I(alpha, beta) stable recursion vs quadrature: rel err <= 1e-8 on
    alpha in [0.05, 50] x beta in [1, 130]."""
    worst = 0.0
    for alpha in (0.05, 0.2, 0.8, 3.0, 12.0, 50.0):
        for beta in (1, 2, 5, 13, 40, 90, 130):
            val = i_integral(alpha, beta)
            ref, _ = integrate.quad(
                lambda x, a=alpha, b=beta: math.exp(
                    -a * x - b * math.log1p(x)), 0.0, np.inf)
            worst = max(worst, abs(val / ref - 1.0))
    assert worst <= 1e-8, f"worst rel err {worst:.3e}"


def test_cdf_power_decomposition_identity():
    """Binomial decomposition of F_Z^eps reconstructs the power to 1e-9
    pointwise on 100-point grids for eps <= 30."""
    p = UserChannelProfile(M=4, rho=10.0)
    xs = np.linspace(0.01, 25.0, 100)
    for eps in range(1, 31):
        w = rates.decomposition_weights(eps, p)
        for x in xs:
            assert abs(float(w.reconstruct_cdf_power(x))
                       - dist.cdf_z(x, p) ** eps) <= 1e-9


def test_selection_coefficient_recursion_exact():
    """Second-stage mixture coefficients: recursion equals brute-force
    polynomial powers exactly (rational arithmetic) for N <= 6, L <= N,
    tau2 <= 5."""
    for N in range(1, 7):
        for L in range(1, N + 1):
            for tau2 in range(1, 6):
                for ell in range(tau2 * (L - 1) + 1):
                    assert dist.xi2(N, L, tau2, ell, exact=True) == \
                        dist.xi2_bruteforce(N, L, tau2, ell, exact=True)


# --------------------------------------------------------------------------
# figure reproduction


@pytest.mark.slow
def test_best_beam_rate_approximation_3pct():
    """Exact vs approximate best-beam individual sum rate within 3% for
    K=1..50, M in {2,4}, rho in {0,10,20} dB; gap non-increasing from
    K=10 to K=50.  Expected to fail: the 3% blanket does not hold for
    small K (measured 11.7% at K=1, M=2, 20 dB; the exact value there is
    itself confirmed by 4e6-sample Monte Carlo), while the K=10 -> K=50
    shrinkage assertion does hold."""
    t0 = time.monotonic()
    _, rows = figures.compute_figure("fig2")
    gaps = {}
    for r in rows:
        gaps[(r["M"], r["rho_dB"], r["K"])] = abs(
            r["approx_rate"] / r["exact_rate"] - 1.0)
    for M in (2, 4):
        for rho_db in (0.0, 10.0, 20.0):
            assert gaps[(M, rho_db, 50)] <= gaps[(M, rho_db, 10)] + 1e-12
    assert time.monotonic() - t0 <= 600.0
    worst = max(gaps.items(), key=lambda kv: kv[1])
    assert worst[1] <= 0.03, (
        f"worst gap {worst[1]:.3%} at (M, rho_dB, K)={worst[0]}")


@pytest.mark.slow
def test_best_l_rate_approximation_3pct():
    """Exact vs approximate best-L individual sum rate within 3% for M=4,
    N=10, L in {1,2,4,10} over K <= 30 at 10 dB and over rho in
    {0..20} dB at K=20; the L=N case equals the per-block spatial value
    to 1e-9.  Expected to fail: the 3% blanket again breaks at small K
    (measured 11.2% at K=1, L=10); the SNR sweep at K=20 passes."""
    _, rows4 = figures.compute_figure("fig4")
    _, rows5 = figures.compute_figure("fig5")

    p_full = UserChannelProfile(M=4, rho=db(10.0))
    for r in rows4:
        if r["L"] == 10:
            spatial = rates.individual_sum_rate_spatial_exact(
                r["K"], p_full).value
            assert r["exact_rate"] == pytest.approx(spatial, abs=1e-9)

    gap5 = max(abs(r["approx_rate"] / r["exact_rate"] - 1.0) for r in rows5)
    assert gap5 <= 0.03, f"worst SNR-sweep gap {gap5:.3%}"

    worst = max(rows4, key=lambda r: abs(r["approx_rate"] / r["exact_rate"]
                                         - 1.0))
    gap4 = abs(worst["approx_rate"] / worst["exact_rate"] - 1.0)
    assert gap4 <= 0.03, (
        f"worst gap {gap4:.3%} at K={worst['K']}, L={worst['L']}")


# --------------------------------------------------------------------------
# simulation vs analysis


@pytest.mark.slow
def test_simulation_matches_analysis_2pct():
    """Monte Carlo individual sum rate within 2% of quadrature: spatial
    (K=10, M=4) and best-L (K=20, M=4, N=10, L=2), >= 2e5 drops."""
    t0 = time.monotonic()
    p = UserChannelProfile(M=4, rho=10.0)
    c = SystemConfig(M=4, K=10, rho=(10.0,) * 10, scheme=Scheme.SPATIAL,
                     drops=200_000, seed=2026)
    est = run_drops(c)
    exact = rates.individual_sum_rate_spatial_exact(10, p).value
    assert est.individual_sum_rate.mean() == pytest.approx(exact, rel=0.02)

    pl = UserChannelProfile(M=4, rho=10.0, N=10, L=2)
    cl = SystemConfig(M=4, K=20, rho=(10.0,) * 20, N=10, L=2,
                      scheme=Scheme.BEST_L, drops=200_000, seed=2026)
    estl = run_drops(cl)
    exactl = rates.individual_sum_rate_bestL_exact(20, pl).value
    assert estl.individual_sum_rate.mean() == pytest.approx(exactl,
                                                            rel=0.02)
    assert time.monotonic() - t0 <= 600.0


@pytest.mark.slow
def test_distribution_oracles_ks():
    """Empirical CDFs of simulated per-beam, best-beam, and best-L SINRs
    match the analytic laws with KS <= 0.005 at 1e6 samples each."""
    rng = np.random.default_rng(7)
    n = 1_000_000
    M, rho, N, L = 4, 10.0, 10, 2
    p = UserChannelProfile(M=M, rho=rho, N=N, L=L)

    def ks(samples, cdf):
        s = np.sort(samples)
        grid = np.arange(1, len(s) + 1) / len(s)
        theo = cdf(s)
        return max(np.max(np.abs(grid - theo)),
                   np.max(np.abs(grid - 1 / len(s) - theo)))

    g = rng.standard_exponential((n, M))
    z = g[:, 0] / (M / rho + g[:, 1:].sum(axis=1))
    assert ks(z, lambda x: dist.cdf_z(x, p)) <= 0.005

    sinr = g / (M / rho + g.sum(axis=1, keepdims=True) - g)
    y = sinr.max(axis=1)
    assert ks(y, lambda x: dist.cdf_y(x, p)) <= 0.005

    # best-L: uniform mixture over the top-L per-block best-beam values
    blocks = n // (N * 8)
    gw = rng.standard_exponential((blocks, N, M))
    sw = gw / (M / rho + gw.sum(axis=2, keepdims=True) - gw)
    yw = sw.max(axis=2)
    w = np.sort(yw, axis=1)[:, -L:].ravel()
    reps = max(1, n // w.size)
    pool = [w]
    for r in range(1, reps):
        gw = rng.standard_exponential((blocks, N, M))
        sw = gw / (M / rho + gw.sum(axis=2, keepdims=True) - gw)
        pool.append(np.sort(sw.max(axis=2), axis=1)[:, -L:].ravel())
    w = np.concatenate(pool)[:n]
    assert w.size == n
    assert ks(w, lambda x: dist.cdf_w(x, p)) <= 0.005


@pytest.mark.slow
def test_fairness_under_snr_heterogeneity():
    """K=9 users at {0,10,20} dB: CDF-based selection frequencies sit in
    4-sigma binomial bands of 1/K over 1e5 drops; greedy gives the top-SNR
    group strictly more slots than the bottom group."""
    K, drops = 9, 100_000
    rho = tuple(db(d) for d in (0.0,) * 3 + (10.0,) * 3 + (20.0,) * 3)
    c = SystemConfig(M=1, K=K, rho=rho, scheme=Scheme.FULL, drops=drops,
                     seed=42)
    est = run_drops(c)
    p0 = 1.0 / K
    sigma = math.sqrt(p0 * (1 - p0) / drops)
    assert np.all(np.abs(est.selection_frequency - p0) <= 4 * sigma), \
        est.selection_frequency

    g = run_drops(SystemConfig(M=1, K=K, rho=rho, scheme=Scheme.FULL,
                               drops=drops, seed=42,
                               scheduler=SchedulerKind.GREEDY))
    low = g.selection_frequency[:3].sum()
    high = g.selection_frequency[6:].sum()
    assert high > low


# --------------------------------------------------------------------------
# tail equivalence


def test_selected_sinr_tail_equivalence_1pct():
    """|(1-F_W)/(1-F_Y^eta) - 1| <= 1% wherever F_Y >= 0.99, for M=4,
    N=10, L in {1,2,4,10}.  Expected to fail: at L=2 the ratio error at
    the F_Y = 0.99 boundary is 1.90%, shrinking below 1% only deeper in
    the tail; L=1, 4, 10 satisfy the stated band."""
    worst = (0.0, None)
    for L in (1, 2, 4, 10):
        p = UserChannelProfile(M=4, rho=10.0, N=10, L=L)
        eta = dist.tail_equivalent_exponent(10, L)
        x0 = dist.SinrLaw(dist.LawKind.BEST_BEAM_Y, p).inverse_cdf(0.99)
        for x in np.linspace(x0, 4 * x0, 60):
            ratio = dist.sf_w(x, p) / dist.sf_y_power(x, p, eta)
            err = abs(ratio - 1.0)
            if err > worst[0]:
                worst = (err, (L, float(x)))
    assert worst[0] <= 0.01, f"worst ratio error {worst[0]:.3%} at " \
        f"(L, x)={worst[1]}"


# --------------------------------------------------------------------------
# scaling-law property suite (limits are not reachable at desk scale;
# these are the agreed finite-K substitutes)


@pytest.mark.slow
def test_scaling_ratio_moves_toward_one():
    """(i) rate / (M log2 log2 K_eff) moves strictly toward 1 along
    K in {1e2, 1e3, 1e4} for each scheme."""
    grids = {
        Scheme.FULL: (UserChannelProfile(M=4, rho=10.0),
                      rates.individual_sum_rate_full),
        Scheme.SPATIAL: (UserChannelProfile(M=2, rho=10.0),
                         rates.individual_sum_rate_spatial_exact),
        Scheme.BEST_L: (UserChannelProfile(M=4, rho=10.0, N=10, L=2),
                        rates.individual_sum_rate_bestL_exact),
    }
    Ks = (100, 1000, 10000)
    for scheme, (p, fn) in grids.items():
        rs = [fn(K, p) for K in Ks]
        rep = scaling.scaling_ratio_report(scheme, Ks, p, rs)
        d = [abs(1.0 - r) for r in rep.ratios]
        assert d[0] > d[1] > d[2], f"{scheme}: ratios {rep.ratios}"


@pytest.mark.slow
def test_gumbel_ks_strictly_decreases():
    """(ii) KS distance between normalized simulated scheduling maxima and
    the double-exponential limit strictly decreases along
    K in {1e2, 1e3, 1e4}, per scheme (quantile-calibrated constants)."""
    cases = {
        Scheme.FULL: dict(M=4, N=1, L=1),
        Scheme.SPATIAL: dict(M=4, N=1, L=1),
        Scheme.BEST_L: dict(M=4, N=10, L=2),
    }
    for scheme, dims in cases.items():
        ks_seq = []
        for K in (100, 1000, 10000):
            c = SystemConfig(K=K, rho=(10.0,) * K, scheme=scheme,
                             scheduler=SchedulerKind.GREEDY,
                             drops=10_000, seed=123, **dims)
            _, maxima = run_drops(c, return_maxima=True)
            p = c.profile(0)
            nc = scaling.calibrated_normalizing_constants(scheme, K, p)
            samples = maxima[np.isfinite(maxima)].ravel()
            ks_seq.append(scaling.gumbel_diagnostic(samples, nc))
        assert ks_seq[0] > ks_seq[1] > ks_seq[2], f"{scheme}: {ks_seq}"


def test_limit_law_power_shift_identity():
    """(iii) Psi(x)^M == Psi(x - log M) to 1e-12 at 20 points."""
    xs = np.linspace(-2.0, 8.0, 20)
    for M in (2, 4):
        lhs = scaling.gumbel_cdf(xs) ** M
        rhs = scaling.gumbel_cdf(xs - math.log(M))
        np.testing.assert_allclose(lhs, rhs, atol=1e-12)


def test_effective_user_count_collapse():
    """(iv) depth-1 and depth-N selective feedback give the same effective
    virtual-user count K/M, exactly."""
    K, M, N = 40, 4, 10
    counts = []
    for L in (1, N):
        p = UserChannelProfile(M=M, rho=10.0, N=N, L=L)
        counts.append(scaling.effective_user_count(Scheme.BEST_L, K, p))
    assert counts[0] == counts[1] == K / M
