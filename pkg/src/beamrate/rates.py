"""Closed-form and quadrature rate expressions for the three feedback schemes.

The central object is

    J(eps) = int_0^inf log2(1+x) d(F_Z(x))^eps,

evaluated in closed form through the alternating binomial decomposition of
d(F_Z^eps) and the I(alpha, beta) integrals.  The binomial sum cancels
~0.301*eps decimal digits, and the I terms cancel more for large alpha, so the
closed form runs in mpmath at working precision sized from a-priori
cancellation bounds.  Above a precision budget the operation falls back to
direct quadrature and flags the precision loss.

Individual sum rates:

    full feedback      M * J(K)
    spatial exact      M * sum_tau1 Binom(K,1/M)(tau1) * int log2(1+x) d F_Y^tau1
    spatial approx     M * sum_tau1 Binom(K,1/M)(tau1) * J(M*tau1)
    best-L exact       M * sum_tau1 sum_tau2 Binom weights * int log2(1+x) d F_W^tau2
    best-L approx      same weights, inner integral expanded through xi2 into J's

Scheduling outage: the tau = 0 binomial terms carry zero rate and are excluded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from functools import lru_cache

import mpmath as mp
import numpy as np

from . import distributions as dist
from . import numerics
from .distributions import UserChannelProfile

LN2 = math.log(2.0)

# Beyond this estimated working precision the closed form is abandoned in
# favour of quadrature (precision_loss flag set).
DPS_BUDGET = 2500

__all__ = [
    "Method",
    "Scheme",
    "RateResult",
    "DecompositionWeights",
    "decomposition_weights",
    "j_k",
    "individual_sum_rate_full",
    "sum_rate_full",
    "individual_sum_rate_spatial_exact",
    "individual_sum_rate_spatial_approx",
    "individual_sum_rate_bestL_exact",
    "individual_sum_rate_bestL_approx",
]


class Method(str, Enum):
    CLOSED_FORM = "closed_form"
    QUADRATURE = "quadrature"
    APPROXIMATION = "approximation"


class Scheme(str, Enum):
    FULL = "full"
    SPATIAL = "spatial"
    BEST_L = "best_l"


@dataclass(frozen=True)
class RateResult:
    """A rate in bits/s/Hz with provenance."""

    value: float
    method: Method
    error_estimate: float = 0.0
    scheme: Scheme | None = None
    precision_loss: bool = False

    def __post_init__(self):
        if self.value < -1e-12:
            raise ValueError("rates are nonnegative")
        if self.error_estimate < 0:
            raise ValueError("error_estimate must be nonnegative")


# ---------------------------------------------------------------------------
# PDF decomposition
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DecompositionWeights:
    """Expansion of d(F_Z^eps) into eps weighted elementary differentials.

    Term i carries coefficient eps*C(eps-1,i)*(-1)^i/(i+1) on
    d(1 - exp(-alpha_i x) (1+x)^(-e_i)) with alpha_i = M(i+1)/rho and
    e_i = (M-1)(i+1).
    """

    epsilon: int
    profile: UserChannelProfile
    coefficients: tuple[Fraction, ...]
    alphas: tuple[float, ...]
    exponents: tuple[int, ...]

    def reconstruct_cdf_power(self, x: float) -> float:
        """sum_i coef_i * (1 - e^(-alpha_i x)(1+x)^(-e_i)), which must equal
        F_Z(x)^eps.  Evaluated in mpmath because the coefficients alternate
        with magnitudes up to 2^eps."""
        dps = int(0.302 * self.epsilon) + 25
        with mp.workdps(dps):
            xm = mp.mpf(x)
            total = mp.mpf(0)
            for c, a, e in zip(self.coefficients, self.alphas, self.exponents):
                comp = 1 - mp.exp(-a * xm) * (1 + xm) ** (-e)
                total += mp.mpf(c.numerator) / c.denominator * comp
            return float(total)


def decomposition_weights(epsilon: int, p: UserChannelProfile) -> DecompositionWeights:
    if epsilon < 1:
        raise ValueError("epsilon must be >= 1")
    coefs, alphas, exps = [], [], []
    for i in range(epsilon):
        coefs.append(Fraction(epsilon * math.comb(epsilon - 1, i) * (-1) ** i, i + 1))
        alphas.append(p.M * (i + 1) / p.rho)
        exps.append((p.M - 1) * (i + 1))
    return DecompositionWeights(epsilon, p, tuple(coefs), tuple(alphas), tuple(exps))


# ---------------------------------------------------------------------------
# J(eps): closed form with precision management
# ---------------------------------------------------------------------------

class PrecisionBudgetExceeded(RuntimeError):
    pass


# (alpha_num, rho, beta) -> (guard_digits, mpf value); values are recomputed
# when a caller needs more guard digits than the cached evaluation carried.
# alpha is keyed as an exact (integer numerator, rho) pair: forming it in
# double precision perturbs the terms of the alternating outer sum off the
# smooth progression in i, and the binomial cancellation amplifies that
# roundoff by C(eps, eps/2).
_I_MP_CACHE: dict[tuple[int, float, int], tuple[int, mp.mpf]] = {}


def _i_mp(alpha_num: int, rho: float, beta: int, guard_digits: int) -> mp.mpf:
    key = (alpha_num, rho, beta)
    hit = _I_MP_CACHE.get(key)
    if hit is not None and hit[0] >= guard_digits:
        return hit[1]
    # round the guard up in coarse buckets so a slowly growing requirement
    # (outer digits scale with eps) does not recompute every cached value
    eff = guard_digits if hit is None else max(guard_digits, hit[0])
    eff = (eff // 100 + 1) * 100
    val = numerics.i_integral_mp(alpha_num, beta, extra_dps=eff,
                                 alpha_den=rho)
    _I_MP_CACHE[key] = (eff, val)
    return val


def _outer_digits(epsilon: int) -> float:
    """Decimal digits cancelled by the alternating binomial sum of J(eps)."""
    mid = epsilon // 2
    return numerics.log_binomial(epsilon, mid) / math.log(10.0)


def closed_form_dps_estimate(epsilon: int, p: UserChannelProfile) -> int:
    """A-priori working precision for the closed-form J(eps)."""
    inner = 0.0
    for j in (1, max(1, epsilon // 2), epsilon):
        alpha = p.M * j / p.rho
        beta = (p.M - 1) * j + 1
        inner = max(inner, numerics.i_integral_cancellation_digits(alpha, beta))
    return int(_outer_digits(epsilon) + inner) + 30


def _j_closed_form_mp(epsilon: int, p: UserChannelProfile, extra_digits: int = 0) -> mp.mpf:
    """J(eps) = (1/ln2) sum_i C(eps, i+1) (-1)^i I(M(i+1)/rho, (M-1)(i+1)+1)."""
    if closed_form_dps_estimate(epsilon, p) + extra_digits > DPS_BUDGET:
        raise PrecisionBudgetExceeded(
            f"closed-form J({epsilon}) needs more than {DPS_BUDGET} digits")
    guard = int(_outer_digits(epsilon)) + extra_digits + 20
    dps = guard + 15
    with mp.workdps(dps):
        total = mp.mpf(0)
        binom = epsilon  # C(eps, 1), updated incrementally
        for i in range(epsilon):
            beta = (p.M - 1) * (i + 1) + 1
            term = binom * _i_mp(p.M * (i + 1), p.rho, beta, guard)
            total += -term if i % 2 else term
            binom = binom * (epsilon - i - 1) // (i + 2)
        return total / mp.ln(2)


def _j_quadrature(epsilon: int, p: UserChannelProfile) -> tuple[float, float]:
    """J(eps) = int_0^inf (1 - F_Z(x)^eps) / ((1+x) ln 2) dx (by parts)."""
    split = max(1.0, p.rho / p.M * (math.log(max(epsilon, 2)) + p.M))
    spec = numerics.QuadratureSpec(abs_tol=1e-12, rel_tol=1e-10,
                                   domain_split_point=split)
    f = lambda x: dist._sf_z_power(x, p, float(epsilon)) / ((1.0 + x) * LN2)
    return numerics.integrate_semi_infinite(f, spec)


def j_k(epsilon: int, p: UserChannelProfile,
        force_quadrature: bool = False) -> RateResult:
    """int_0^inf log2(1+x) d(F_Z(x))^eps for integer eps >= 1."""
    if epsilon < 1:
        raise ValueError("epsilon must be >= 1")
    if not force_quadrature:
        try:
            value = float(_j_closed_form_mp(epsilon, p))
            return RateResult(value, Method.CLOSED_FORM,
                              error_estimate=abs(value) * 1e-12)
        except PrecisionBudgetExceeded:
            pass
    value, err = _j_quadrature(epsilon, p)
    return RateResult(value, Method.QUADRATURE, error_estimate=err,
                      precision_loss=not force_quadrature)


# ---------------------------------------------------------------------------
# binomial mixtures
# ---------------------------------------------------------------------------

def binomial_weights(K: int, prob: float, prune: float = 1e-12) -> list[tuple[int, float]]:
    """(tau, Binomial(K, prob) mass) for tau >= 1, pruning negligible mass."""
    if not (0.0 < prob <= 1.0):
        raise ValueError("prob must be in (0, 1]")
    log_p = math.log(prob)
    log_q = math.log1p(-prob) if prob < 1.0 else float("-inf")
    out = []
    mean = K * prob
    sigma = math.sqrt(max(K * prob * (1.0 - prob), 1.0))
    lo = max(1, int(mean - 12 * sigma))
    hi = min(K, int(mean + 12 * sigma) + 1)
    if prob == 1.0:
        return [(K, 1.0)]
    for tau in range(lo, hi + 1):
        w = math.exp(numerics.log_binomial(K, tau) + tau * log_p + (K - tau) * log_q)
        if w >= prune:
            out.append((tau, w))
    return out


# quadrature of int (1 - F^tau)/((1+x) ln2) dx for the exact-path laws,
# cached per profile and exponent
@lru_cache(maxsize=100000)
def _rate_integral_y(M: int, rho: float, tau: int) -> tuple[float, float]:
    p = UserChannelProfile(M=M, rho=rho)
    split = max(1.0, rho / M * (math.log(max(tau * M, 2)) + M))
    spec = numerics.QuadratureSpec(abs_tol=1e-11, rel_tol=1e-9,
                                   domain_split_point=split)
    f = lambda x: dist.sf_y_power(x, p, float(tau)) / ((1.0 + x) * LN2)
    return numerics.integrate_semi_infinite(f, spec)


@lru_cache(maxsize=100000)
def _rate_integral_w(M: int, rho: float, N: int, L: int, tau2: int) -> tuple[float, float]:
    p = UserChannelProfile(M=M, rho=rho, N=N, L=L)
    split = max(1.0, rho / M * (math.log(max(tau2 * M * N, 2)) + M))
    spec = numerics.QuadratureSpec(abs_tol=1e-11, rel_tol=1e-9,
                                   domain_split_point=split)

    def f(x: float) -> float:
        s = dist.sf_w(x, p)
        if s >= 1.0:
            return 1.0 / ((1.0 + x) * LN2)
        return -math.expm1(tau2 * math.log1p(-s)) / ((1.0 + x) * LN2)

    return numerics.integrate_semi_infinite(f, spec)


# ---------------------------------------------------------------------------
# individual sum rates
# ---------------------------------------------------------------------------

def individual_sum_rate_full(K: int, p: UserChannelProfile) -> RateResult:
    """M * J(K): individual sum rate under full feedback."""
    if K < 1:
        raise ValueError("K must be >= 1")
    r = j_k(K, p)
    return RateResult(p.M * r.value, r.method, p.M * r.error_estimate,
                      Scheme.FULL, r.precision_loss)


def sum_rate_full(profiles: list[UserChannelProfile]) -> RateResult:
    """(M/K) sum_k J_k(K) over heterogeneous users (all sharing M)."""
    K = len(profiles)
    if K < 1:
        raise ValueError("need at least one user")
    M = profiles[0].M
    if any(q.M != M for q in profiles):
        raise ValueError("all users share the beam count M")
    parts = [j_k(K, q) for q in profiles]
    value = M / K * sum(r.value for r in parts)
    err = M / K * sum(r.error_estimate for r in parts)
    return RateResult(value, parts[0].method, err, Scheme.FULL,
                      any(r.precision_loss for r in parts))


def individual_sum_rate_spatial_exact(
        K: int, p: UserChannelProfile, prune: float = 1e-12) -> RateResult:
    """Binomial mixture over reporter counts of exact F_Y order statistics."""
    if K < 1:
        raise ValueError("K must be >= 1")
    total = 0.0
    err = 0.0
    for tau1, w in binomial_weights(K, 1.0 / p.M, prune):
        v, e = _rate_integral_y(p.M, p.rho, tau1)
        total += w * v
        err += w * e
    return RateResult(p.M * total, Method.QUADRATURE, p.M * err, Scheme.SPATIAL)


def individual_sum_rate_spatial_approx(
        K: int, p: UserChannelProfile, prune: float = 1e-12) -> RateResult:
    """Closed-form approximation through F_Y ~ (F_Z)^M."""
    if K < 1:
        raise ValueError("K must be >= 1")
    total = 0.0
    err = 0.0
    loss = False
    for tau1, w in binomial_weights(K, 1.0 / p.M, prune):
        r = j_k(p.M * tau1, p)
        total += w * r.value
        err += w * r.error_estimate
        loss = loss or r.precision_loss
    return RateResult(p.M * total, Method.APPROXIMATION, p.M * err,
                      Scheme.SPATIAL, loss)


def individual_sum_rate_bestL_exact(
        K: int, p: UserChannelProfile, prune: float = 1e-12) -> RateResult:
    """Double binomial mixture (beam selection, then best-L in frequency) of
    exact F_W order statistics."""
    if K < 1:
        raise ValueError("K must be >= 1")
    total = 0.0
    err = 0.0
    p_l = p.L / p.N
    for tau1, w1 in binomial_weights(K, 1.0 / p.M, prune):
        for tau2, w2 in binomial_weights(tau1, p_l, prune):
            v, e = _rate_integral_w(p.M, p.rho, p.N, p.L, tau2)
            total += w1 * w2 * v
            err += w1 * w2 * e
    return RateResult(p.M * total, Method.QUADRATURE, p.M * err, Scheme.BEST_L)


def _xi2_mixture_closed_form(tau2: int, p: UserChannelProfile) -> float:
    """sum_l xi2(N, L, tau2, l) * J(M*(N*tau2 - l)) at working precision
    sized for both the xi2 magnitudes and the inner J cancellations."""
    coeffs = [dist.xi2(p.N, p.L, tau2, ell, exact=True)
              for ell in range(tau2 * (p.L - 1) + 1)]
    mag = max(float(abs(c)) for c in coeffs)
    xi_digits = int(math.log10(mag + 1.0)) + 5
    worst_eps = p.M * p.N * tau2
    if closed_form_dps_estimate(worst_eps, p) + xi_digits > DPS_BUDGET:
        raise PrecisionBudgetExceeded("xi2 mixture over precision budget")
    with mp.workdps(xi_digits + 30):
        total = mp.mpf(0)
        for ell, c in enumerate(coeffs):
            if c == 0:
                continue
            j_val = _j_closed_form_mp(p.M * (p.N * tau2 - ell), p,
                                      extra_digits=xi_digits)
            total += (mp.mpf(c.numerator) / c.denominator) * j_val
        return float(total)


@lru_cache(maxsize=100000)
def _rate_integral_w_approx(M: int, rho: float, N: int, L: int, tau2: int) -> tuple[float, float]:
    """Quadrature fallback for the xi2 mixture: the same quantity equals
    int (1 - G(x)^tau2)/((1+x) ln2) dx with G = sum_l xi1 (F_Z^M)^(N-l)."""
    p = UserChannelProfile(M=M, rho=rho, N=N, L=L)
    xi = [float(dist.xi1(N, L, ell, exact=True)) for ell in range(L)]
    split = max(1.0, rho / M * (math.log(max(tau2 * M * N, 2)) + M))
    spec = numerics.QuadratureSpec(abs_tol=1e-11, rel_tol=1e-9,
                                   domain_split_point=split)

    def f(x: float) -> float:
        fz = dist.cdf_z(x, p)
        g = sum(c * fz ** (M * (N - ell)) for ell, c in enumerate(xi))
        g = min(max(g, 0.0), 1.0)
        if g <= 0.0:
            return 1.0 / ((1.0 + x) * LN2)
        return -math.expm1(tau2 * math.log(g)) / ((1.0 + x) * LN2) if g < 1.0 else 0.0

    return numerics.integrate_semi_infinite(f, spec)


def individual_sum_rate_bestL_approx(
        K: int, p: UserChannelProfile, prune: float = 1e-12) -> RateResult:
    """Closed-form approximation: xi2 expansion with J(M(N*tau2 - l))."""
    if K < 1:
        raise ValueError("K must be >= 1")
    total = 0.0
    err = 0.0
    loss = False
    p_l = p.L / p.N
    inner_cache: dict[int, tuple[float, float, bool]] = {}
    for tau1, w1 in binomial_weights(K, 1.0 / p.M, prune):
        for tau2, w2 in binomial_weights(tau1, p_l, prune):
            if tau2 not in inner_cache:
                try:
                    inner_cache[tau2] = (_xi2_mixture_closed_form(tau2, p), 0.0, False)
                except PrecisionBudgetExceeded:
                    v, e = _rate_integral_w_approx(p.M, p.rho, p.N, p.L, tau2)
                    inner_cache[tau2] = (v, e, True)
            v, e, fl = inner_cache[tau2]
            total += w1 * w2 * v
            err += w1 * w2 * e
            loss = loss or fl
    return RateResult(p.M * total, Method.APPROXIMATION, p.M * err,
                      Scheme.BEST_L, loss)
