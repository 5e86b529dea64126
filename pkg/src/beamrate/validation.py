"""Fast self-check suite behind the `validate` command.

Each check is independent, seconds-scale, and compares an implementation
path against an independent oracle (quadrature, brute-force combinatorics,
degeneracy identities, or Monte Carlo with wide statistical bands).  The full
statistical test suite lives in the test tree; this is the operational
smoke screen.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np
from scipy import integrate, special

from . import distributions as dist
from . import numerics, rates, scaling, simulator
from .distributions import UserChannelProfile
from .rates import Scheme

__all__ = ["CheckResult", "run_all_checks", "CHECKS"]


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def _check_exp_integral() -> CheckResult:
    xs = [0.01, 0.3, 1.0, 2.5, 10.0, 50.0]
    worst = max(abs(numerics.exp_integral_e1(x) / float(special.exp1(x)) - 1)
                for x in xs)
    return CheckResult("exp_integral_e1 vs scipy.special.exp1", worst < 1e-12,
                       f"max rel err {worst:.2e}")


def _check_i_recurrence() -> CheckResult:
    worst = 0.0
    for alpha in (0.05, 0.8, 4.0, 50.0):
        for beta in (1, 2, 7, 40, 130):
            val = numerics.i_integral(alpha, beta)
            ref, _ = integrate.quad(
                lambda x, a=alpha, b=beta: math.exp(-a * x - b * math.log1p(x)),
                0.0, np.inf)
            worst = max(worst, abs(val / ref - 1.0))
    return CheckResult("interference integral recurrence vs quadrature",
                       worst < 1e-8, f"max rel err {worst:.2e}")


def _check_pdf_normalization() -> CheckResult:
    p = UserChannelProfile(M=4, rho=10.0)
    val, _ = integrate.quad(lambda x: dist.pdf_z(x, p), 0.0, np.inf)
    return CheckResult("per-beam SINR pdf integrates to 1",
                       abs(val - 1.0) < 1e-10, f"integral {val:.12f}")


def _check_xi_recursion() -> CheckResult:
    for N in range(1, 6):
        for L in range(1, N + 1):
            for tau2 in range(1, 4):
                for ell in range(tau2 * (L - 1) + 1):
                    a = dist.xi2(N, L, tau2, ell, exact=True)
                    b = dist.xi2_bruteforce(N, L, tau2, ell, exact=True)
                    if a != b:
                        return CheckResult(
                            "spectral coefficient recursion vs brute force",
                            False, f"mismatch at N={N} L={L} t={tau2} l={ell}")
    return CheckResult("spectral coefficient recursion vs brute force", True,
                       "exact match, N<=5")


def _check_closed_form_rate() -> CheckResult:
    worst = 0.0
    for M, rho, eps in ((1, 1.0, 5), (2, 10.0, 20), (4, 100.0, 40)):
        p = UserChannelProfile(M=M, rho=rho)
        cf = rates.j_k(eps, p).value
        q = rates.j_k(eps, p, force_quadrature=True).value
        worst = max(worst, abs(cf / q - 1.0))
    return CheckResult("closed-form rate vs quadrature", worst < 1e-7,
                       f"max rel err {worst:.2e}")


def _check_degeneracies() -> CheckResult:
    p1 = UserChannelProfile(M=1, rho=10.0)
    full = rates.individual_sum_rate_full(5, p1).value
    spatial = rates.individual_sum_rate_spatial_exact(5, p1).value
    p11 = UserChannelProfile(M=1, rho=10.0, N=1, L=1)
    bestl = rates.individual_sum_rate_bestL_exact(5, p11).value
    dev = max(abs(spatial / full - 1), abs(bestl / full - 1))
    return CheckResult("scheme degeneracies agree at M=1, N=1", dev < 1e-9,
                       f"max rel dev {dev:.2e}")


def _check_simulator_agreement() -> CheckResult:
    cfg = simulator.SystemConfig(M=4, K=10, rho=(10.0,) * 10,
                                 scheme=Scheme.SPATIAL, drops=50_000, seed=1)
    est = simulator.run_drops(cfg)
    ref = rates.individual_sum_rate_spatial_exact(10, cfg.profile(0)).value
    dev = abs(est.individual_sum_rate.mean() / ref - 1.0)
    return CheckResult("simulated vs analytic individual sum rate",
                       dev < 0.02, f"rel dev {dev:.3%} at 5e4 drops")


def _check_gumbel_identity() -> CheckResult:
    xs = np.linspace(-3.0, 5.0, 20)
    worst = 0.0
    for M in (2, 4, 8):
        dev = np.max(np.abs(scaling.gumbel_cdf(xs) ** M
                            - scaling.gumbel_cdf(xs - math.log(M))))
        worst = max(worst, float(dev))
    return CheckResult("extreme-law power/shift identity", worst < 1e-12,
                       f"max dev {worst:.2e}")


CHECKS: tuple[Callable[[], CheckResult], ...] = (
    _check_exp_integral,
    _check_i_recurrence,
    _check_pdf_normalization,
    _check_xi_recursion,
    _check_closed_form_rate,
    _check_degeneracies,
    _check_simulator_agreement,
    _check_gumbel_identity,
)


def run_all_checks() -> list[CheckResult]:
    results = []
    for check in CHECKS:
        try:
            results.append(check())
        except Exception as exc:  # a crashed check is a failed check
            results.append(CheckResult(check.__name__, False,
                                       f"{type(exc).__name__}: {exc}"))
    return results
