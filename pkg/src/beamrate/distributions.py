"""Analytic SINR distribution laws.

Three laws matter:

* Z  -- per-beam SINR of a user (Rayleigh small-scale fading, M beams,
        average SNR rho),
* Y  -- the user-side best beam, max over the M correlated per-beam SINRs,
* W  -- the best-L selected value in a wideband system with N independent
        resource blocks (W = Y for L = N, W = Y^N in distribution for L = 1).

plus the negative-association approximation F_Y ~ (F_Z)^M, the tail
equivalent of F_W, and the binomial feedback-count law.

All CDFs accept scalars or numpy arrays and follow the step-function
convention: 0 for x < 0.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy.optimize import brentq

__all__ = [
    "UserChannelProfile",
    "LawKind",
    "SinrLaw",
    "CoefficientTable",
    "cdf_z",
    "pdf_z",
    "sf_z",
    "cdf_y",
    "sf_y",
    "cdf_y_approx",
    "cdf_w",
    "sf_w",
    "sf_y_power",
    "xi1",
    "xi2",
    "xi2_bruteforce",
    "tail_equivalent_exponent",
    "feedback_count_pmf",
]

# largest double strictly below 1, for clipping CDF values before log1p
_ALMOST_ONE = float(np.nextafter(1.0, 0.0))


@dataclass(frozen=True)
class UserChannelProfile:
    """Static channel parameters of one user.

    M     beams / transmit antennas
    rho   average received SNR, linear scale
    N     resource blocks (1 = narrowband)
    L     spectral feedback depth, 1 <= L <= N
    """

    M: int
    rho: float
    N: int = 1
    L: int = 1

    def __post_init__(self):
        if self.M < 1:
            raise ValueError("M must be >= 1")
        if self.rho <= 0:
            raise ValueError("rho must be positive")
        if not (1 <= self.L <= self.N):
            raise ValueError("need 1 <= L <= N")


# ---------------------------------------------------------------------------
# per-beam law Z
# ---------------------------------------------------------------------------

def cdf_z(x, p: UserChannelProfile):
    """F_Z(x) = 1 - exp(-M x / rho) / (1+x)^(M-1) for x >= 0."""
    x = np.asarray(x, dtype=float)
    pos = x > 0
    xp = np.where(pos, x, 0.0)
    out = -np.expm1(-p.M * xp / p.rho - (p.M - 1) * np.log1p(xp))
    out = np.where(pos, out, 0.0)
    return out if out.ndim else float(out)


def sf_z(x, p: UserChannelProfile):
    """1 - F_Z(x), computed without cancellation near 1."""
    x = np.asarray(x, dtype=float)
    xp = np.maximum(x, 0.0)
    out = np.exp(-p.M * xp / p.rho - (p.M - 1) * np.log1p(xp))
    out = np.where(x < 0, 1.0, out)
    return out if out.ndim else float(out)


def pdf_z(x, p: UserChannelProfile):
    """f_Z(x) = exp(-Mx/rho)(1+x)^(-M) (M(1+x)/rho + M - 1) for x >= 0."""
    x = np.asarray(x, dtype=float)
    pos = x >= 0
    xp = np.where(pos, x, 0.0)
    out = np.exp(-p.M * xp / p.rho - p.M * np.log1p(xp)) * (
        p.M * (1.0 + xp) / p.rho + p.M - 1.0)
    out = np.where(pos, out, 0.0)
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# best-beam law Y
# ---------------------------------------------------------------------------

def _y_terms(x, p: UserChannelProfile):
    """Sum of the survival terms of F_Y: sf_y = sum_i [d_i]_+^M e^(...) / A_i.

    d_i(x) = 2(1-(M-i)x)/(M-i+1);  A_i = d_i * prod_{j != i} (d_i - d_j) with
    d_i - d_j = 2(i-j)(1+x)/((M-i+1)(M-j+1)).  Terms with d_i <= 0 are
    exactly zero (both the positive part and the exponential vanish).
    """
    x = np.asarray(x, dtype=float)
    M = p.M
    one_px = 1.0 + x
    total = np.zeros_like(x)
    for i in range(1, M + 1):
        d_i = 2.0 * (1.0 - (M - i) * x) / (M - i + 1)
        alive = d_i > 1e-300
        d_safe = np.where(alive, d_i, 1.0)
        log_a = np.log(np.abs(d_safe))
        sign = np.ones_like(x)
        for j in range(1, M + 1):
            if j == i:
                continue
            diff = 2.0 * (i - j) * one_px / ((M - i + 1) * (M - j + 1))
            log_a = log_a + np.log(np.abs(diff))
            sign = sign * np.sign(diff)
        log_term = M * np.log(d_safe) - 2.0 * M * x / (p.rho * d_safe) - log_a
        term = np.where(alive, sign * np.exp(log_term), 0.0)
        total = total + term
    return total


def sf_y(x, p: UserChannelProfile):
    """1 - F_Y(x), evaluated directly from the survival-term sum."""
    x = np.asarray(x, dtype=float)
    out = np.where(x < 0, 1.0, np.clip(_y_terms(np.maximum(x, 0.0), p), 0.0, 1.0))
    return out if out.ndim else float(out)


def cdf_y(x, p: UserChannelProfile):
    """CDF of the best beam, max over the M correlated per-beam SINRs."""
    x = np.asarray(x, dtype=float)
    out = np.where(x <= 0, 0.0, 1.0 - np.clip(_y_terms(np.maximum(x, 0.0), p), 0.0, 1.0))
    return out if out.ndim else float(out)


def cdf_y_approx(x, p: UserChannelProfile):
    """Negative-association approximation (F_Z(x))^M."""
    z = np.asarray(cdf_z(x, p))
    out = z ** p.M
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# xi coefficients for the best-L law
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _xi1_exact(N: int, L: int, ell: int) -> Fraction:
    total = Fraction(0)
    for i in range(ell, L):
        total += Fraction(L - i, L) * math.comb(N, i) * math.comb(i, ell) * (-1) ** (i - ell)
    return total


def xi1(N: int, L: int, ell: int, exact: bool = False):
    """Coefficient of (F_Y)^(N-ell) in F_W; exact rational arithmetic."""
    if not (1 <= L <= N):
        raise ValueError("need 1 <= L <= N")
    if not (0 <= ell <= L - 1):
        raise ValueError("need 0 <= ell <= L-1")
    v = _xi1_exact(N, L, ell)
    return v if exact else float(v)


@lru_cache(maxsize=None)
def _xi2_table(N: int, L: int, tau2: int) -> tuple:
    """xi2(N, L, tau2, ell) for ell = 0..tau2*(L-1), exact Fractions.

    Uses the power-series recursion when xi1(N, L, 0) != 0; otherwise the
    recursion is undefined and the direct polynomial power is used.
    """
    if tau2 < 1:
        raise ValueError("tau2 must be >= 1")
    x1 = [_xi1_exact(N, L, ell) for ell in range(L)]
    top = tau2 * (L - 1)
    if x1[0] == 0:
        return tuple(_poly_power(x1, tau2))
    out = [Fraction(0)] * (top + 1)
    out[0] = x1[0] ** tau2
    for ell in range(1, top + 1):
        if ell == top:
            out[ell] = x1[L - 1] ** tau2
            break
        acc = Fraction(0)
        for i in range(1, min(ell, L - 1) + 1):
            acc += ((tau2 + 1) * i - ell) * x1[i] * out[ell - i]
        out[ell] = acc / (ell * x1[0])
    return tuple(out)


def _poly_power(coeffs: list[Fraction], power: int) -> list[Fraction]:
    """Coefficients of (sum_l c_l t^(N-l))^power collected by total ell offset."""
    result = [Fraction(1)]
    for _ in range(power):
        new = [Fraction(0)] * (len(result) + len(coeffs) - 1)
        for a, ca in enumerate(result):
            if ca == 0:
                continue
            for b, cb in enumerate(coeffs):
                new[a + b] += ca * cb
        result = new
    return result


def xi2(N: int, L: int, tau2: int, ell: int, exact: bool = False):
    """Coefficient of (F_Y)^(N*tau2 - ell) in (F_W)^tau2."""
    if not (1 <= L <= N):
        raise ValueError("need 1 <= L <= N")
    if tau2 < 1:
        raise ValueError("tau2 must be >= 1")
    if not (0 <= ell <= tau2 * (L - 1)):
        raise ValueError("ell out of range")
    v = _xi2_table(N, L, tau2)[ell]
    return v if exact else float(v)


def xi2_bruteforce(N: int, L: int, tau2: int, ell: int, exact: bool = False):
    """Independent oracle: direct polynomial exponentiation, no recursion."""
    x1 = [_xi1_exact(N, L, e) for e in range(L)]
    coeffs = _poly_power(x1, tau2)
    v = coeffs[ell] if ell < len(coeffs) else Fraction(0)
    return v if exact else float(v)


def xi2_uses_fallback(N: int, L: int) -> bool:
    """True when xi1(N,L,0) = 0 and the recursion is replaced by the
    polynomial-power route."""
    return _xi1_exact(N, L, 0) == 0


def tail_equivalent_exponent(N: int, L: int) -> float:
    """eta = N - sum_l xi1(N,L,l) * l; F_W is tail equivalent to F_Y^eta."""
    total = Fraction(N)
    for ell in range(L):
        total -= _xi1_exact(N, L, ell) * ell
    return float(total)


# ---------------------------------------------------------------------------
# best-L law W
# ---------------------------------------------------------------------------

def cdf_w(x, p: UserChannelProfile):
    """F_W(x) = sum_l xi1(N, L, l) * F_Y(x)^(N-l)."""
    fy = np.asarray(cdf_y(x, p))
    out = np.zeros_like(fy)
    for ell in range(p.L):
        out = out + float(_xi1_exact(p.N, p.L, ell)) * fy ** (p.N - ell)
    out = np.clip(out, 0.0, 1.0)
    return out if out.ndim else float(out)


def sf_w(x, p: UserChannelProfile):
    """1 - F_W(x) without cancellation: sum_l xi1 * (1 - F_Y^(N-l))."""
    s = np.asarray(sf_y(x, p))
    log_fy = np.log1p(-np.minimum(s, _ALMOST_ONE))
    out = np.zeros_like(s)
    for ell in range(p.L):
        out = out + float(_xi1_exact(p.N, p.L, ell)) * (-np.expm1((p.N - ell) * log_fy))
    out = np.where(s >= 1.0, 1.0, np.clip(out, 0.0, 1.0))
    return out if out.ndim else float(out)


def sf_y_power(x, p: UserChannelProfile, eta: float):
    """1 - F_Y(x)^eta without cancellation (tail-equivalent comparisons)."""
    s = np.asarray(sf_y(x, p))
    log_fy = np.log1p(-np.minimum(s, _ALMOST_ONE))
    out = np.where(s >= 1.0, 1.0, -np.expm1(eta * log_fy))
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# feedback counts
# ---------------------------------------------------------------------------

def feedback_count_pmf(tau: int, K: int, p_success: float) -> float:
    """Binomial(K, p) mass at tau: reporters per beam (and resource block)."""
    if not (0 <= tau <= K):
        raise ValueError("need 0 <= tau <= K")
    if not (0.0 <= p_success <= 1.0):
        raise ValueError("p_success must be a probability")
    if p_success in (0.0, 1.0):
        expect = K if p_success == 1.0 else 0
        return 1.0 if tau == expect else 0.0
    return math.comb(K, tau) * p_success ** tau * (1.0 - p_success) ** (K - tau)


# ---------------------------------------------------------------------------
# law objects
# ---------------------------------------------------------------------------

class LawKind(str, Enum):
    PER_BEAM_Z = "per_beam_z"
    BEST_BEAM_Y = "best_beam_y"
    BEST_BEAM_APPROX = "best_beam_approx"
    BEST_L_W = "best_l_w"
    TAIL_EQUIVALENT_W = "tail_equivalent_w"


@dataclass(frozen=True)
class SinrLaw:
    """Immutable handle on one analytic law: CDF, survival, inverse CDF."""

    kind: LawKind
    profile: UserChannelProfile

    def cdf(self, x):
        p = self.profile
        if self.kind == LawKind.PER_BEAM_Z:
            return cdf_z(x, p)
        if self.kind == LawKind.BEST_BEAM_Y:
            return cdf_y(x, p)
        if self.kind == LawKind.BEST_BEAM_APPROX:
            return cdf_y_approx(x, p)
        if self.kind == LawKind.BEST_L_W:
            return cdf_w(x, p)
        eta = tail_equivalent_exponent(p.N, p.L)
        out = np.asarray(cdf_y(x, p)) ** eta
        return out if out.ndim else float(out)

    def sf(self, x):
        p = self.profile
        if self.kind == LawKind.PER_BEAM_Z:
            return sf_z(x, p)
        if self.kind == LawKind.BEST_BEAM_Y:
            return sf_y(x, p)
        if self.kind == LawKind.BEST_BEAM_APPROX:
            return _sf_z_power(x, p, float(p.M))
        if self.kind == LawKind.BEST_L_W:
            return sf_w(x, p)
        eta = tail_equivalent_exponent(p.N, p.L)
        return sf_y_power(x, p, eta)

    def pdf(self, x):
        if self.kind == LawKind.PER_BEAM_Z:
            return pdf_z(x, self.profile)
        raise NotImplementedError(f"no analytic pdf for {self.kind.value}")

    def inverse_cdf(self, q: float, prob_tol: float = 1e-10) -> float:
        """Quantile by bracketed root finding, to prob_tol in probability."""
        if not (0.0 <= q < 1.0):
            raise ValueError("q must lie in [0, 1)")
        if q <= 0.0:
            return 0.0
        hi = 1.0
        while self.cdf(hi) < q and hi < 1e12:
            hi *= 2.0
        return brentq(lambda x: self.cdf(x) - q, 0.0, hi, xtol=1e-14, rtol=8.9e-16)


def _sf_z_power(x, p: UserChannelProfile, power: float):
    """1 - F_Z(x)^power without cancellation."""
    s = np.asarray(sf_z(x, p))
    log_fz = np.log1p(-np.minimum(s, _ALMOST_ONE))
    out = np.where(s >= 1.0, 1.0, -np.expm1(power * log_fz))
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# coefficient cache
# ---------------------------------------------------------------------------

CACHE_DIR_ENV = "BEAMRATE_CACHE_DIR"


class CoefficientTable:
    """Exact xi1/xi2 values with an optional JSON cache file.

    Keys are "N,L,ell" (xi1) and "N,L,tau2,ell" (xi2); values are exact
    "numerator/denominator" strings.
    """

    SCHEMA_VERSION = 1

    def __init__(self):
        self.xi1: dict[tuple[int, int, int], Fraction] = {}
        self.xi2: dict[tuple[int, int, int, int], Fraction] = {}

    def get_xi1(self, N: int, L: int, ell: int) -> Fraction:
        key = (N, L, ell)
        if key not in self.xi1:
            self.xi1[key] = xi1(N, L, ell, exact=True)
        return self.xi1[key]

    def get_xi2(self, N: int, L: int, tau2: int, ell: int) -> Fraction:
        key = (N, L, tau2, ell)
        if key not in self.xi2:
            self.xi2[key] = xi2(N, L, tau2, ell, exact=True)
        return self.xi2[key]

    @staticmethod
    def default_path() -> Path:
        base = os.environ.get(CACHE_DIR_ENV)
        root = Path(base) if base else Path.home() / ".cache" / "beamrate"
        return root / "coefficients.json"

    def save(self, path: Path | None = None) -> Path:
        path = path or self.default_path()
        path.parent.mkdir(parents=True, exist_ok=True)
        payload = {
            "schema_version": self.SCHEMA_VERSION,
            "xi1": {",".join(map(str, k)): f"{v.numerator}/{v.denominator}"
                    for k, v in sorted(self.xi1.items())},
            "xi2": {",".join(map(str, k)): f"{v.numerator}/{v.denominator}"
                    for k, v in sorted(self.xi2.items())},
        }
        tmp = path.with_suffix(".tmp")
        tmp.write_text(json.dumps(payload, indent=1))
        tmp.replace(path)
        return path

    @classmethod
    def load(cls, path: Path | None = None) -> "CoefficientTable":
        path = path or cls.default_path()
        table = cls()
        payload = json.loads(Path(path).read_text())
        if payload.get("schema_version") != cls.SCHEMA_VERSION:
            raise ValueError("unsupported coefficient cache schema")
        for k, v in payload["xi1"].items():
            num, den = v.split("/")
            table.xi1[tuple(map(int, k.split(",")))] = Fraction(int(num), int(den))
        for k, v in payload["xi2"].items():
            num, den = v.split("/")
            table.xi2[tuple(map(int, k.split(",")))] = Fraction(int(num), int(den))
        return table
