"""Request/response schemas for the HTTP service.

SNRs cross the wire in dB and are converted to linear scale at the model
boundary; everything inside the core package is linear.
"""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, Field, field_validator, model_validator

SCHEMA_VERSION = 1

SchemeName = Literal["full", "spatial", "best_l"]
SchedulerName = Literal["cdf_based", "greedy", "round_robin"]
MethodName = Literal["closed_form", "quadrature", "approximation"]


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


class HealthResponse(BaseModel):
    status: Literal["ok"]
    version: str
    schema_version: int = SCHEMA_VERSION


class RateTableRequest(BaseModel):
    scheme: SchemeName = "full"
    K_grid: list[int] = Field(min_length=1)
    M: int = Field(ge=1)
    N: int = Field(default=1, ge=1)
    L: int = Field(default=1, ge=1)
    rho_dB: float = 10.0
    # exact = defining integral (closed form where available, else
    # quadrature); approx = the independence/decoupling approximation,
    # which only exists for the selective-feedback schemes
    variants: list[Literal["exact", "approx"]] = ["exact", "approx"]

    @model_validator(mode="after")
    def _bounds(self):
        if not 1 <= self.L <= self.N:
            raise ValueError("need 1 <= L <= N")
        if any(k < 1 for k in self.K_grid):
            raise ValueError("user counts must be >= 1")
        if self.scheme == "full" and self.variants == ["approx"]:
            raise ValueError("the full-feedback rate has no approximation variant")
        return self


class RateRow(BaseModel):
    scheme: SchemeName
    method: MethodName
    K: int
    M: int
    N: int
    L: int
    rho_dB: float
    value: float
    error_estimate: Optional[float] = None
    precision_loss: bool = False


class RateTableResponse(BaseModel):
    rows: list[RateRow]
    schema_version: int = SCHEMA_VERSION


class SimulateRequest(BaseModel):
    scheme: SchemeName = "full"
    scheduler: SchedulerName = "cdf_based"
    M: int = Field(ge=1)
    K: int = Field(ge=1)
    N: int = Field(default=1, ge=1)
    L: int = Field(default=1, ge=1)
    rho_dB: list[float] = Field(min_length=1)
    drops: int = Field(default=10_000, ge=1)
    seed: int = Field(default=0, ge=0, lt=2 ** 64)
    cdf_source: Literal["analytic", "empirical"] = "analytic"
    calibration_drops: int = 0

    @model_validator(mode="after")
    def _bounds(self):
        if not 1 <= self.L <= self.N:
            raise ValueError("need 1 <= L <= N")
        if len(self.rho_dB) not in (1, self.K):
            raise ValueError("rho_dB must list one shared value or one per user")
        return self

    def rho_linear(self) -> tuple[float, ...]:
        vals = self.rho_dB if len(self.rho_dB) == self.K else self.rho_dB * self.K
        return tuple(db_to_linear(v) for v in vals)


class SimulateResponse(BaseModel):
    mean_rate: list[float]
    mean_rate_stderr: list[float]
    individual_sum_rate: list[float]
    individual_sum_rate_stderr: list[float]
    sum_rate: float
    sum_rate_stderr: float
    selection_frequency: list[float]
    selection_frequency_stderr: list[float]
    outage_fraction: list[list[float]]
    feedback_count_mean: float
    feedback_count_var: float
    multi_beam_win_fraction: float
    drops: int
    batches: int
    schema_version: int = SCHEMA_VERSION


class ScalingRequest(BaseModel):
    scheme: SchemeName = "full"
    K_grid: list[int] = Field(min_length=1)
    M: int = Field(ge=1)
    N: int = Field(default=1, ge=1)
    L: int = Field(default=1, ge=1)
    rho_dB: float = 10.0
    drops: int = Field(default=0, ge=0)  # 0 disables the Gumbel diagnostic
    seed: int = Field(default=0, ge=0, lt=2 ** 64)
    # "calibrated": quantile-based attraction coefficients (KS shrinks with
    # K); "as_printed": rho-scaled log2 constants with o(1) terms dropped
    constants: Literal["calibrated", "as_printed"] = "calibrated"
    natural_log: bool = False

    @model_validator(mode="after")
    def _bounds(self):
        if not 1 <= self.L <= self.N:
            raise ValueError("need 1 <= L <= N")
        if any(k < 3 for k in self.K_grid):
            raise ValueError("scaling diagnostics need K >= 3")
        if self.K_grid != sorted(self.K_grid):
            raise ValueError("K_grid must be ascending")
        return self


class ScalingRow(BaseModel):
    K: int
    effective_K: float
    rate: float
    method: MethodName
    ratio: float
    location: float
    scale: float
    ks_distance: Optional[float] = None


class ScalingResponse(BaseModel):
    scheme: SchemeName
    rows: list[ScalingRow]
    schema_version: int = SCHEMA_VERSION


class FigureResponse(BaseModel):
    figure_id: str
    description: str
    params: dict
    columns: list[str]
    rows: list[dict]
    seed: int
    schema_version: int = SCHEMA_VERSION


class FigureCatalogEntry(BaseModel):
    figure_id: str
    description: str
    params: dict
    columns: list[str]


class ValidationCheck(BaseModel):
    name: str
    passed: bool
    detail: str


class ValidateResponse(BaseModel):
    passed: bool
    checks: list[ValidationCheck]
    schema_version: int = SCHEMA_VERSION
