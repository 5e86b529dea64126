"""Figure-data catalog: the five standard parameter studies.

Each figure is computed as a list of flat records (one CSV row each) so the
service, the CLI, and the plotting layer share one schema.  Every numeric
column carries a provenance tag (closed_form / quadrature / approximation /
simulation) in the sidecar metadata.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import distributions as dist
from . import rates
from .distributions import LawKind, SinrLaw, UserChannelProfile
from .rates import Scheme

__all__ = ["FigureSpec", "FIGURE_IDS", "figure_catalog", "compute_figure"]


@dataclass(frozen=True)
class FigureSpec:
    figure_id: str
    description: str
    params: dict
    columns: tuple[str, ...]


def _db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def figure_catalog() -> list[FigureSpec]:
    return [
        FigureSpec(
            "fig1",
            "Best-beam SINR CDF: empirical vs exact vs per-beam bound vs "
            "independence approximation (M=4, 10 dB)",
            {"M": 4, "rho_dB": 10.0},
            ("x", "cdf_empirical", "cdf_exact", "cdf_bound", "cdf_approx"),
        ),
        FigureSpec(
            "fig2",
            "Best-beam feedback: exact vs approximate individual sum rate "
            "over K (M=2,4; 0/10/20 dB)",
            {"M": [2, 4], "rho_dB": [0.0, 10.0, 20.0], "K": "1..50"},
            ("K", "M", "rho_dB", "exact_rate", "approx_rate"),
        ),
        FigureSpec(
            "fig4",
            "Best-L feedback: exact vs approximate individual sum rate over "
            "K (M=4, N=10, 10 dB, L=1,2,4,10)",
            {"M": 4, "N": 10, "rho_dB": 10.0, "L": [1, 2, 4, 10], "K": "1..30"},
            ("K", "L", "exact_rate", "approx_rate"),
        ),
        FigureSpec(
            "fig5",
            "Best-L feedback: exact vs approximate individual sum rate over "
            "SNR (M=4, N=10, K=20, L=1,2,4,10)",
            {"M": 4, "N": 10, "K": 20, "L": [1, 2, 4, 10],
             "rho_dB": [0.0, 5.0, 10.0, 15.0, 20.0]},
            ("rho_dB", "L", "exact_rate", "approx_rate"),
        ),
        FigureSpec(
            "fig6",
            "Best-L selected-SINR CDF vs its tail-equivalent power law "
            "(M=4, N=10, 10 dB, L=1,2,4,10)",
            {"M": 4, "N": 10, "rho_dB": 10.0, "L": [1, 2, 4, 10]},
            ("x", "L", "cdf_w", "cdf_tail_equivalent"),
        ),
    ]


FIGURE_IDS = tuple(s.figure_id for s in figure_catalog())


def _spec(figure_id: str) -> FigureSpec:
    for s in figure_catalog():
        if s.figure_id == figure_id:
            return s
    raise KeyError(f"unknown figure id: {figure_id!r}")


def _fig1_rows(seed: int, samples: int) -> list[dict]:
    p = UserChannelProfile(M=4, rho=_db_to_linear(10.0))
    law = SinrLaw(kind=LawKind.BEST_BEAM_Y, profile=p)
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    g = rng.standard_exponential((samples, p.M))
    sinr = g / (p.M / p.rho + g.sum(axis=1, keepdims=True) - g)
    y = np.sort(sinr.max(axis=1))
    hi = law.inverse_cdf(0.999)
    xs = np.linspace(0.0, hi, 200)
    emp = np.searchsorted(y, xs, side="right") / samples
    return [
        {"x": float(x),
         "cdf_empirical": float(e),
         "cdf_exact": float(dist.cdf_y(x, p)),
         "cdf_bound": float(dist.cdf_z(x, p)),
         "cdf_approx": float(dist.cdf_y_approx(x, p))}
        for x, e in zip(xs, emp)
    ]


def _fig2_rows() -> list[dict]:
    rows = []
    for M in (2, 4):
        for db in (0.0, 10.0, 20.0):
            p = UserChannelProfile(M=M, rho=_db_to_linear(db))
            for K in range(1, 51):
                exact = rates.individual_sum_rate_spatial_exact(K, p)
                approx = rates.individual_sum_rate_spatial_approx(K, p)
                rows.append({"K": K, "M": M, "rho_dB": db,
                             "exact_rate": exact.value,
                             "approx_rate": approx.value})
    return rows


def _fig4_rows(k_max: int = 30) -> list[dict]:
    rows = []
    for L in (1, 2, 4, 10):
        p = UserChannelProfile(M=4, rho=_db_to_linear(10.0), N=10, L=L)
        for K in range(1, k_max + 1):
            exact = rates.individual_sum_rate_bestL_exact(K, p)
            approx = rates.individual_sum_rate_bestL_approx(K, p)
            rows.append({"K": K, "L": L,
                         "exact_rate": exact.value,
                         "approx_rate": approx.value})
    return rows


def _fig5_rows() -> list[dict]:
    rows = []
    for L in (1, 2, 4, 10):
        for db in (0.0, 5.0, 10.0, 15.0, 20.0):
            p = UserChannelProfile(M=4, rho=_db_to_linear(db), N=10, L=L)
            exact = rates.individual_sum_rate_bestL_exact(20, p)
            approx = rates.individual_sum_rate_bestL_approx(20, p)
            rows.append({"rho_dB": db, "L": L,
                         "exact_rate": exact.value,
                         "approx_rate": approx.value})
    return rows


def _fig6_rows() -> list[dict]:
    rows = []
    for L in (1, 2, 4, 10):
        p = UserChannelProfile(M=4, rho=_db_to_linear(10.0), N=10, L=L)
        eta = dist.tail_equivalent_exponent(p.N, p.L)
        hi = SinrLaw(kind=LawKind.BEST_BEAM_Y, profile=p).inverse_cdf(0.9999)
        for x in np.linspace(0.0, hi, 200):
            rows.append({"x": float(x), "L": L,
                         "cdf_w": float(dist.cdf_w(x, p)),
                         "cdf_tail_equivalent":
                             float(dist.cdf_y(x, p) ** eta)})
    return rows


def compute_figure(figure_id: str, seed: int = 0,
                   samples: int = 100_000) -> tuple[FigureSpec, list[dict]]:
    """Rows for one figure id.  `seed`/`samples` only affect the empirical
    curve of fig1; every other figure is deterministic analytics."""
    spec = _spec(figure_id)
    if figure_id == "fig1":
        return spec, _fig1_rows(seed, samples)
    if figure_id == "fig2":
        return spec, _fig2_rows()
    if figure_id == "fig4":
        return spec, _fig4_rows()
    if figure_id == "fig5":
        return spec, _fig5_rows()
    return spec, _fig6_rows()
