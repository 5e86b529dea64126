"""HTTP service exposing the analytic and simulation engines.

The CLI talks to this app in-process by default (ASGI transport), so the
service layer is the single integration surface: request validation,
dB-to-linear conversion, and flattening of core results into wire schemas
all happen here.
"""

from __future__ import annotations

import numpy as np
from fastapi import FastAPI, HTTPException

from .. import __version__, figures, rates, scaling, simulator, validation
from ..distributions import UserChannelProfile
from ..rates import RateResult, Scheme
from ..simulator import CdfSource, SchedulerKind, SystemConfig
from . import models

_SCHEMES = {"full": Scheme.FULL, "spatial": Scheme.SPATIAL,
            "best_l": Scheme.BEST_L}
_SCHEDULERS = {"cdf_based": SchedulerKind.CDF_BASED,
               "greedy": SchedulerKind.GREEDY,
               "round_robin": SchedulerKind.ROUND_ROBIN}

app = FastAPI(title="beamrate", version=__version__)


def _rate_for(scheme: Scheme, variant: str, K: int,
              p: UserChannelProfile) -> RateResult:
    if scheme is Scheme.FULL:
        return rates.individual_sum_rate_full(K, p)
    if scheme is Scheme.SPATIAL:
        if variant == "approx":
            return rates.individual_sum_rate_spatial_approx(K, p)
        return rates.individual_sum_rate_spatial_exact(K, p)
    if variant == "approx":
        return rates.individual_sum_rate_bestL_approx(K, p)
    return rates.individual_sum_rate_bestL_exact(K, p)


@app.get("/health", response_model=models.HealthResponse)
def health() -> models.HealthResponse:
    return models.HealthResponse(status="ok", version=__version__)


@app.get("/figures", response_model=list[models.FigureCatalogEntry])
def figure_catalog() -> list[models.FigureCatalogEntry]:
    return [models.FigureCatalogEntry(
                figure_id=s.figure_id, description=s.description,
                params=s.params, columns=list(s.columns))
            for s in figures.figure_catalog()]


@app.get("/figure/{figure_id}", response_model=models.FigureResponse)
def figure(figure_id: str, seed: int = 0) -> models.FigureResponse:
    try:
        spec, rows = figures.compute_figure(figure_id, seed=seed)
    except KeyError as exc:
        raise HTTPException(status_code=404, detail=str(exc))
    return models.FigureResponse(
        figure_id=spec.figure_id, description=spec.description,
        params=spec.params, columns=list(spec.columns), rows=rows, seed=seed)


@app.post("/rate-table", response_model=models.RateTableResponse)
def rate_table(req: models.RateTableRequest) -> models.RateTableResponse:
    scheme = _SCHEMES[req.scheme]
    p = UserChannelProfile(M=req.M, rho=models.db_to_linear(req.rho_dB),
                           N=req.N, L=req.L)
    rows = []
    for variant in req.variants:
        if scheme is Scheme.FULL and variant == "approx":
            continue
        for K in req.K_grid:
            r = _rate_for(scheme, variant, K, p)
            rows.append(models.RateRow(
                scheme=req.scheme, method=r.method.value, K=K, M=req.M,
                N=req.N, L=req.L, rho_dB=req.rho_dB, value=r.value,
                error_estimate=r.error_estimate,
                precision_loss=r.precision_loss))
    return models.RateTableResponse(rows=rows)


@app.post("/simulate", response_model=models.SimulateResponse)
def simulate(req: models.SimulateRequest) -> models.SimulateResponse:
    try:
        cfg = SystemConfig(
            M=req.M, K=req.K, rho=req.rho_linear(), N=req.N, L=req.L,
            scheme=_SCHEMES[req.scheme], scheduler=_SCHEDULERS[req.scheduler],
            drops=req.drops, seed=req.seed,
            cdf_source=CdfSource(req.cdf_source),
            calibration_drops=req.calibration_drops)
    except simulator.ConfigurationError as exc:
        raise HTTPException(status_code=422, detail=str(exc))
    est = simulator.run_drops(cfg)
    return models.SimulateResponse(
        mean_rate=est.mean_rate.tolist(),
        mean_rate_stderr=est.mean_rate_stderr.tolist(),
        individual_sum_rate=est.individual_sum_rate.tolist(),
        individual_sum_rate_stderr=est.individual_sum_rate_stderr.tolist(),
        sum_rate=est.sum_rate, sum_rate_stderr=est.sum_rate_stderr,
        selection_frequency=est.selection_frequency.tolist(),
        selection_frequency_stderr=est.selection_frequency_stderr.tolist(),
        outage_fraction=est.outage_fraction.tolist(),
        feedback_count_mean=est.feedback_count_mean,
        feedback_count_var=est.feedback_count_var,
        multi_beam_win_fraction=est.multi_beam_win_fraction,
        drops=est.drops, batches=est.batches)


@app.post("/scaling", response_model=models.ScalingResponse)
def scaling_report(req: models.ScalingRequest) -> models.ScalingResponse:
    scheme = _SCHEMES[req.scheme]
    rho = models.db_to_linear(req.rho_dB)
    p = UserChannelProfile(M=req.M, rho=rho, N=req.N, L=req.L)
    def constants_for(K: int) -> scaling.NormalizingConstants:
        if req.constants == "calibrated":
            return scaling.calibrated_normalizing_constants(scheme, K, p)
        return scaling.normalizing_constants(scheme, K, p,
                                             natural_log=req.natural_log)

    rate_results = [_rate_for(scheme, "exact", K, p) for K in req.K_grid]
    ks_list: list[float | None] = [None] * len(req.K_grid)
    if req.drops > 0:
        for i, K in enumerate(req.K_grid):
            cfg = SystemConfig(
                M=req.M, K=K, rho=(rho,) * K, N=req.N, L=req.L,
                scheme=scheme, scheduler=SchedulerKind.GREEDY,
                drops=req.drops, seed=req.seed)
            _, maxima = simulator.run_drops(cfg, return_maxima=True)
            samples = maxima[np.isfinite(maxima)].ravel()
            ks_list[i] = scaling.gumbel_diagnostic(samples, constants_for(K))
    report = scaling.scaling_ratio_report(
        scheme, req.K_grid, p, rate_results,
        ks_distances=ks_list)
    rows = []
    for i, K in enumerate(report.K_grid):
        nc = constants_for(K)
        rows.append(models.ScalingRow(
            K=K, effective_K=report.effective_K[i],
            rate=rate_results[i].value,
            method=rate_results[i].method.value,
            ratio=report.ratios[i],
            location=nc.location, scale=nc.scale,
            ks_distance=report.ks_distance[i]))
    return models.ScalingResponse(scheme=req.scheme, rows=rows)


@app.post("/validate", response_model=models.ValidateResponse)
def validate() -> models.ValidateResponse:
    checks = [models.ValidationCheck(name=c.name, passed=bool(c.passed),
                                     detail=c.detail)
              for c in validation.run_all_checks()]
    return models.ValidateResponse(passed=all(c.passed for c in checks),
                                   checks=checks)
