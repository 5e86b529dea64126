"""Special functions, stable alternating sums, and semi-infinite quadrature.

Everything here is a pure function of its inputs.  The two workhorses are the
exponential integral E1 and the family of integrals

    I(alpha, beta) = int_0^inf exp(-alpha*x) / (1+x)^beta dx,

which every closed-form rate expression in :mod:`beamrate.rates` reduces to.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import mpmath as mp
from scipy import integrate as _scipy_integrate

EULER_GAMMA = 0.5772156649015328606

__all__ = [
    "QuadratureSpec",
    "SignedTermSum",
    "IntegrationError",
    "exp_integral_e1",
    "e1_scaled",
    "i_integral",
    "i_integral_mp",
    "i_integral_cancellation_digits",
    "log_binomial",
    "integrate_semi_infinite",
]


class IntegrationError(RuntimeError):
    """Quadrature did not converge.  Carries the partial estimate."""

    def __init__(self, message: str, partial: float, error_estimate: float):
        super().__init__(message)
        self.partial = partial
        self.error_estimate = error_estimate


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerances and limits for semi-infinite quadrature."""

    abs_tol: float = 1e-12
    rel_tol: float = 1e-10
    max_subdivisions: int = 200
    domain_split_point: float = 1.0

    def __post_init__(self):
        if self.abs_tol <= 0 or self.rel_tol <= 0:
            raise ValueError("tolerances must be strictly positive")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be >= 1")
        if self.domain_split_point <= 0:
            raise ValueError("domain_split_point must be positive")


@dataclass
class SignedTermSum:
    """Compensated accumulation of signed terms given as (sign, log magnitude).

    Terms with wildly different magnitudes and alternating signs are summed by
    rescaling to the largest magnitude and applying exact (fsum) summation.
    The relative-error estimate accounts for the representation error of each
    exp() call; when it exceeds ``rel_tol`` the ``precision_loss`` flag is set.
    """

    rel_tol: float = 1e-10
    terms: list[tuple[int, float]] = field(default_factory=list)

    def add(self, sign: int, log_magnitude: float) -> None:
        if sign not in (-1, 0, 1):
            raise ValueError("sign must be -1, 0, or +1")
        if sign != 0:
            self.terms.append((sign, log_magnitude))

    def add_value(self, value: float) -> None:
        if value != 0.0:
            self.add(1 if value > 0 else -1, math.log(abs(value)))

    def total(self) -> float:
        value, _, _ = self._evaluate()
        return value

    @property
    def precision_loss(self) -> bool:
        _, rel_err, _ = self._evaluate()
        return rel_err > self.rel_tol

    def relative_error_estimate(self) -> float:
        _, rel_err, _ = self._evaluate()
        return rel_err

    def _evaluate(self) -> tuple[float, float, float]:
        if not self.terms:
            return 0.0, 0.0, float("-inf")
        log_max = max(lm for _, lm in self.terms)
        scaled = [s * math.exp(lm - log_max) for s, lm in self.terms]
        total_scaled = math.fsum(scaled)
        abs_scaled = math.fsum(abs(t) for t in scaled)
        value = total_scaled * math.exp(log_max)
        if total_scaled == 0.0:
            rel_err = float("inf") if abs_scaled > 0 else 0.0
        else:
            # each exp() contributes ~1 ulp; fsum itself is exact
            rel_err = abs_scaled / abs(total_scaled) * 2.3e-16
        return value, rel_err, log_max


# ---------------------------------------------------------------------------
# exponential integral
# ---------------------------------------------------------------------------

def exp_integral_e1(x: float) -> float:
    """E1(x) = int_x^inf exp(-t)/t dt for x > 0, relative accuracy ~1e-12.

    Power series below 1, modified Lentz continued fraction above.
    """
    if x <= 0:
        raise ValueError("exp_integral_e1 requires x > 0")
    if x < 1.0:
        return _e1_series(x)
    return math.exp(-x) * _e1_cf_scaled(x)


def e1_scaled(x: float) -> float:
    """exp(x) * E1(x), overflow-free for large x."""
    if x <= 0:
        raise ValueError("e1_scaled requires x > 0")
    if x < 1.0:
        return math.exp(x) * _e1_series(x)
    return _e1_cf_scaled(x)


def _e1_series(x: float) -> float:
    # E1(x) = -gamma - ln x + sum_{n>=1} (-1)^{n+1} x^n / (n * n!)
    total = -EULER_GAMMA - math.log(x)
    term = 1.0
    for n in range(1, 60):
        term *= -x / n
        contrib = -term / n
        total += contrib
        if abs(contrib) < 1e-17 * abs(total):
            break
    return total

def _e1_cf_scaled(x: float) -> float:
    # exp(x)*E1(x) = 1/(x+1- 1/(x+3- 4/(x+5- 9/(...)))), Lentz's method
    tiny = 1e-300
    b = x + 1.0
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 200):
        a = -float(i) * float(i)
        b += 2.0
        d = 1.0 / (a * d + b)
        c = b + a / c
        delta = c * d
        h *= delta
        if abs(delta - 1.0) < 1e-15:
            return h
    raise RuntimeError(f"continued fraction for E1 did not converge at x={x}")


# ---------------------------------------------------------------------------
# I(alpha, beta)
# ---------------------------------------------------------------------------

def _i_quadrature(alpha: float, beta: float) -> tuple[float, float]:
    """Direct quadrature of int_0^inf exp(-a x)(1+x)^{-b} dx."""
    spec = QuadratureSpec(abs_tol=1e-14, rel_tol=1e-13,
                          domain_split_point=max(1.0, 2.0 / alpha))
    f = lambda x: math.exp(-alpha * x) * (1.0 + x) ** (-beta)
    return integrate_semi_infinite(f, spec)


def i_integral(alpha: float, beta: int) -> float:
    """I(alpha, beta) via the first-order recurrence, run in its stable direction.

    The recurrence I(a, b) = (1 - a*I(a, b-1)) / (b-1) amplifies errors by
    a/(b-1) per upward step, so it is only run upward where b-1 >= a.  The
    chain is seeded at beta0 = floor(a)+1 by direct quadrature (or at beta=1
    by e^a E1(a) when a is small), and run downward, where the inverse step
    damps errors, for targets below the seed.
    """
    if alpha <= 0:
        raise ValueError("i_integral requires alpha > 0")
    if beta < 1 or int(beta) != beta:
        raise ValueError("i_integral requires integer beta >= 1")
    beta = int(beta)
    if alpha <= 1.5:
        seed_beta, seed_val = 1, e1_scaled(alpha)
    else:
        seed_beta = min(beta, int(math.floor(alpha)) + 1)
        if seed_beta == 1:
            seed_val = e1_scaled(alpha)
        else:
            seed_val, _ = _i_quadrature(alpha, seed_beta)
    val = seed_val
    if beta >= seed_beta:
        for b in range(seed_beta + 1, beta + 1):
            val = (1.0 - alpha * val) / (b - 1)
    else:
        for b in range(seed_beta, beta, -1):
            val = (1.0 - (b - 1) * val) / alpha
    return val


def i_integral_cancellation_digits(alpha: float, beta: int) -> float:
    """Decimal digits cancelled when evaluating the alternating closed form.

    Upper bound: largest term magnitude over a rigorous lower bound
    I(a,b) >= 1/(a+b).  Used to size working precision for the mpmath path.
    """
    if beta <= 1:
        return 0.0
    lg_beta = math.lgamma(beta)
    ln_a = math.log(alpha)

    def term_log(i: int) -> float:
        return math.lgamma(max(i, 1)) + (beta - i - 1) * ln_a - lg_beta

    # (i-1)! * a^(b-i-1) is log-convex in i with minimum ratio at i ~ a
    candidates = {1, beta - 1}
    i_star = int(round(alpha))
    for di in (-1, 0, 1):
        i = min(max(i_star + di, 1), beta - 1)
        candidates.add(i)
    max_log = max(term_log(i) for i in candidates)
    # E1 term: a^(b-1) e^a E1(a) / (b-1)!
    log_e1 = math.log(e1_scaled(alpha))
    max_log = max(max_log, (beta - 1) * ln_a + log_e1 - lg_beta)
    lower = -math.log(alpha + beta)
    return max(0.0, (max_log - lower) / math.log(10.0))


def i_integral_mp(alpha, beta: int, extra_dps: int = 20, alpha_den=1):
    """Closed-form I(alpha, beta) as an mpf, at precision sized to the known
    cancellation of the alternating sum.  Exact to ~extra_dps guard digits.

    When callers build alpha from exact parts (e.g. M*(i+1) over rho), pass
    the parts via (alpha, alpha_den) so the quotient is formed at working
    precision: pre-rounding alpha to a double perturbs each term of an
    alternating outer sum independently, which downstream binomial
    cancellations amplify by the full binomial magnitude.
    """
    if beta < 1:
        raise ValueError("beta must be >= 1")
    beta = int(beta)
    a_f = float(alpha) / float(alpha_den)
    digits = i_integral_cancellation_digits(a_f, beta)
    dps = int(math.ceil(digits)) + extra_dps + 10
    with mp.workdps(dps):
        a = mp.mpf(alpha) / mp.mpf(alpha_den)
        e1_term = mp.e1(a) * mp.exp(a)
        if beta == 1:
            return +e1_term
        # sum_{i=1}^{beta-1} (i-1)! (-a)^(beta-i-1) / (beta-1)!
        # = Horner evaluation of sum_{j=0}^{beta-2} (beta-2-j)! (-a)^j
        neg_a = -a
        poly = mp.mpf(1)
        fact = 1
        for k in range(1, beta - 1):
            fact *= k
            poly = poly * neg_a + fact
        fact_top = fact * (beta - 1) if beta > 2 else 1
        # E1 contribution carries coefficient (-a)^(beta-1)/(beta-1)!
        total = (poly + neg_a ** (beta - 1) * e1_term) / fact_top
        return +total


# ---------------------------------------------------------------------------
# combinatorics
# ---------------------------------------------------------------------------

def log_binomial(n: int, k: int) -> float:
    """Natural log of C(n, k)."""
    if k < 0 or k > n or n < 0:
        raise ValueError(f"log_binomial requires 0 <= k <= n, got n={n} k={k}")
    if n <= 300:
        return math.log(math.comb(n, k))
    return math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)


# ---------------------------------------------------------------------------
# semi-infinite quadrature
# ---------------------------------------------------------------------------

def integrate_semi_infinite(
    f: Callable[[float], float],
    spec: QuadratureSpec = QuadratureSpec(),
) -> tuple[float, float]:
    """Integrate f over (0, inf): adaptive quadrature on (0, split], plus the
    tail mapped onto (0, 1) via x = split + s/(1-s).

    Returns (value, error_estimate); raises IntegrationError when the
    estimated error exceeds the requested tolerances.
    """
    split = spec.domain_split_point

    head, head_err, head_info = _scipy_integrate.quad(
        f, 0.0, split, epsabs=spec.abs_tol / 2, epsrel=spec.rel_tol,
        limit=spec.max_subdivisions, full_output=True)[:3]

    def tail_integrand(s: float) -> float:
        u = 1.0 - s
        if u <= 0.0:
            return 0.0
        return f(split + s / u) / (u * u)

    tail, tail_err, tail_info = _scipy_integrate.quad(
        tail_integrand, 0.0, 1.0, epsabs=spec.abs_tol / 2, epsrel=spec.rel_tol,
        limit=spec.max_subdivisions, full_output=True)[:3]

    value = head + tail
    err = head_err + tail_err
    tol = max(spec.abs_tol, spec.rel_tol * abs(value))
    if not math.isfinite(value) or err > 100.0 * tol:
        raise IntegrationError(
            f"semi-infinite quadrature did not converge (err={err:.3g})",
            partial=value, error_estimate=err)
    return value, err
