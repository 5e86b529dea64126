"""Monte Carlo simulation of the random-beamforming downlink.

Per drop, every user sees M orthonormal random beams through an i.i.d.
Rayleigh channel; users report SINRs according to the active feedback scheme
(full, best-beam-per-block, or best-L-blocks) and the scheduler picks, per
(resource block, beam), the reporter whose CDF-transformed value is largest.
Greedy (raw-SINR) and round-robin baselines share the same drop stream.

Two engines are provided: an explicit per-drop path (generate_beams ->
compute_sinr -> apply_feedback -> schedule) used as the reference, and a
vectorized batch engine inside run_drops that exploits the fact that the
squared projections of an isotropic Gaussian channel onto an orthonormal
basis are i.i.d. unit-mean exponentials.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from . import distributions as dist
from .distributions import LawKind, SinrLaw, UserChannelProfile
from .rates import Scheme

__all__ = [
    "SchedulerKind",
    "CdfSource",
    "SystemConfig",
    "FeedbackReport",
    "DropOutcome",
    "SimulationEstimate",
    "EmpiricalCdf",
    "ConfigurationError",
    "generate_beams",
    "compute_sinr",
    "sinr_table",
    "apply_feedback",
    "schedule",
    "calibrate_empirical_cdf",
    "run_drops",
    "run_drops_reference",
]

MIN_BATCHES = 20
MIN_CALIBRATION_DROPS = 1000


class ConfigurationError(ValueError):
    """Invalid or internally inconsistent simulation configuration."""


class SchedulerKind(str, Enum):
    CDF_BASED = "cdf_based"
    GREEDY = "greedy"
    ROUND_ROBIN = "round_robin"


class CdfSource(str, Enum):
    ANALYTIC = "analytic"
    EMPIRICAL = "empirical"


@dataclass(frozen=True)
class SystemConfig:
    M: int
    K: int
    rho: tuple[float, ...]
    N: int = 1
    L: int = 1
    scheme: Scheme = Scheme.FULL
    scheduler: SchedulerKind = SchedulerKind.CDF_BASED
    drops: int = 1000
    seed: int = 0
    cdf_source: CdfSource = CdfSource.ANALYTIC
    calibration_drops: int = 0

    def __post_init__(self):
        if self.M < 1 or self.K < 1 or self.N < 1:
            raise ConfigurationError("M, K, N must be positive")
        if not 1 <= self.L <= self.N:
            raise ConfigurationError("L must satisfy 1 <= L <= N")
        if len(self.rho) != self.K:
            raise ConfigurationError("one SNR per user required")
        if any(r <= 0 for r in self.rho):
            raise ConfigurationError("SNRs must be positive (linear scale)")
        if self.drops < 1:
            raise ConfigurationError("drops must be >= 1")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigurationError("seed must fit in 64 bits")
        if (self.cdf_source is CdfSource.EMPIRICAL
                and self.calibration_drops < MIN_CALIBRATION_DROPS):
            raise ConfigurationError(
                f"empirical CDFs need >= {MIN_CALIBRATION_DROPS} calibration drops")

    def profile(self, k: int) -> UserChannelProfile:
        return UserChannelProfile(M=self.M, rho=self.rho[k], N=self.N, L=self.L)


_SCHEME_LAW = {
    Scheme.FULL: LawKind.PER_BEAM_Z,
    Scheme.SPATIAL: LawKind.BEST_BEAM_Y,
    Scheme.BEST_L: LawKind.BEST_L_W,
}


def _analytic_laws(config: SystemConfig) -> list[SinrLaw]:
    kind = _SCHEME_LAW[config.scheme]
    return [SinrLaw(kind=kind, profile=config.profile(k))
            for k in range(config.K)]


class EmpiricalCdf:
    """Monotone step CDF built from calibration samples of the reported value."""

    def __init__(self, samples: Sequence[float]):
        arr = np.sort(np.asarray(samples, dtype=float))
        if arr.size < 2:
            raise ConfigurationError("insufficient samples for an empirical CDF")
        self._sorted = arr

    @property
    def n_samples(self) -> int:
        return int(self._sorted.size)

    def cdf(self, x):
        idx = np.searchsorted(self._sorted, np.asarray(x, dtype=float),
                              side="right")
        return idx / self._sorted.size

    __call__ = cdf


def generate_beams(M: int, rng: np.random.Generator) -> np.ndarray:
    """M random orthonormal beams (columns), Haar-distributed.

    QR of a standard complex Gaussian matrix, with the R diagonal phases
    absorbed into Q so the factorization (and hence the law) is unique.
    """
    A = rng.standard_normal((M, M)) + 1j * rng.standard_normal((M, M))
    Q, R = np.linalg.qr(A)
    d = np.diagonal(R)
    return Q * (d / np.abs(d))


def compute_sinr(h: np.ndarray, beams: np.ndarray, m: int,
                 rho: float) -> float:
    """|h^H phi_m|^2 / (M/rho + sum_{i != m} |h^H phi_i|^2)."""
    M = beams.shape[1]
    g = np.abs(h.conj() @ beams) ** 2
    return float(g[m] / (M / rho + g.sum() - g[m]))


def sinr_table(channels: np.ndarray, beams: np.ndarray,
               rho: Sequence[float]) -> np.ndarray:
    """Per-(user, resource block, beam) SINR from explicit channels.

    channels: complex (K, N, M) — one vector per user and resource block;
    beams: complex (N, M, M) or (M, M) shared across blocks.
    """
    K, N, M = channels.shape
    b = np.broadcast_to(beams, (N, M, M))
    g = np.abs(np.einsum("knm,nmj->knj", channels.conj(), b)) ** 2
    noise = np.asarray([M / r for r in rho], dtype=float)[:, None, None]
    total = g.sum(axis=-1, keepdims=True)
    return g / (noise + total - g)


@dataclass(frozen=True)
class FeedbackReport:
    user: int
    rb: int
    beam: int
    value: float


@dataclass(frozen=True)
class DropOutcome:
    """Per-(resource block, beam) scheduling result for one drop."""

    selected_user: np.ndarray      # (N, M) int, -1 on outage
    sinr: np.ndarray               # (N, M) raw SINR of the selection, 0 on outage
    rate_contribution: np.ndarray  # (N, M) log2(1 + sinr), 0 on outage
    feedback_counts: np.ndarray    # (N, M) reporter counts


@dataclass(frozen=True)
class SimulationEstimate:
    """Aggregates over drops with batch-mean standard errors."""

    mean_rate: np.ndarray                 # (K,) per-user rate per resource block
    mean_rate_stderr: np.ndarray
    individual_sum_rate: np.ndarray       # (K,) K * mean_rate
    individual_sum_rate_stderr: np.ndarray
    sum_rate: float
    sum_rate_stderr: float
    selection_frequency: np.ndarray       # (K,) share of all (rb, beam) slots
    selection_frequency_stderr: np.ndarray
    outage_fraction: np.ndarray           # (N, M)
    outage_fraction_stderr: np.ndarray
    feedback_count_mean: float            # reporters per (rb, beam) slot
    feedback_count_var: float
    multi_beam_win_fraction: float        # P(some user wins >= 2 beams in a drop)
    drops: int
    batches: int


def apply_feedback(table: np.ndarray, scheme: Scheme,
                   L: int = 1) -> list[FeedbackReport]:
    """Turn a complete (K, N, M) SINR table into the scheme's reports.

    Full: every value.  Spatial: per (user, block), the best beam.  Best-L:
    per user, the best beam of each block, then only the top-L blocks.
    """
    K, N, M = table.shape
    reports: list[FeedbackReport] = []
    if scheme is Scheme.FULL:
        for k in range(K):
            for n in range(N):
                for m in range(M):
                    reports.append(FeedbackReport(k, n, m, float(table[k, n, m])))
        return reports
    best_beam = table.argmax(axis=2)
    best_val = table.max(axis=2)
    for k in range(K):
        if scheme is Scheme.SPATIAL:
            chosen = range(N)
        else:
            order = np.argsort(-best_val[k], kind="stable")
            chosen = sorted(int(n) for n in order[:L])
        for n in chosen:
            reports.append(FeedbackReport(k, int(n), int(best_beam[k, n]),
                                          float(best_val[k, n])))
    return reports


def schedule(reports: Sequence[FeedbackReport], config: SystemConfig,
             laws: Optional[Sequence] = None, drop_index: int = 0,
             table: Optional[np.ndarray] = None) -> DropOutcome:
    """Resolve one drop: per (rb, beam), the reporter with the largest
    CDF-transformed value wins; ties go to the lowest user id; no reporter
    means scheduling outage.  Greedy compares raw values; round-robin ignores
    reports entirely (it needs the full SINR table)."""
    N, M, K = config.N, config.M, config.K
    selected = np.full((N, M), -1, dtype=int)
    sel_sinr = np.zeros((N, M))
    counts = np.zeros((N, M), dtype=int)
    for r in reports:
        counts[r.rb, r.beam] += 1

    if config.scheduler is SchedulerKind.ROUND_ROBIN:
        if table is None:
            raise ConfigurationError("round-robin scheduling needs the SINR table")
        for n in range(N):
            for m in range(M):
                k = (drop_index * M * N + n * M + m) % K
                selected[n, m] = k
                sel_sinr[n, m] = table[k, n, m]
    else:
        if config.scheduler is SchedulerKind.CDF_BASED:
            if laws is None:
                laws = _analytic_laws(config)
            if len(laws) != K:
                raise ConfigurationError("one CDF per user required")
            key = lambda r: float(laws[r.user].cdf(r.value))
        else:
            key = lambda r: r.value
        best = {}
        for r in reports:
            slot = (r.rb, r.beam)
            cand = (key(r), -r.user)
            if slot not in best or cand > best[slot][0]:
                best[slot] = (cand, r)
        for (n, m), (_, r) in best.items():
            selected[n, m] = r.user
            sel_sinr[n, m] = r.value

    rate = np.where(selected >= 0, np.log2(1.0 + sel_sinr), 0.0)
    return DropOutcome(selected_user=selected, sinr=sel_sinr,
                       rate_contribution=rate, feedback_counts=counts)


def _draw_projections(rng: np.random.Generator, B: int, K: int, N: int,
                      M: int) -> np.ndarray:
    """Squared projections of isotropic CN(0, I_M) channels on an orthonormal
    beam basis: jointly i.i.d. Exp(1), which is all the SINRs depend on."""
    return rng.standard_exponential((B, K, N, M))


def _sinr_from_projections(g: np.ndarray, rho: np.ndarray) -> np.ndarray:
    M = g.shape[-1]
    noise = (M / rho)[None, :, None, None]
    total = g.sum(axis=-1, keepdims=True)
    return g / (noise + total - g)


def _transform(values: np.ndarray, laws: Sequence, axis_user: int = 1
               ) -> np.ndarray:
    """Apply each user's CDF along the user axis."""
    out = np.empty_like(values, dtype=float)
    for k, law in enumerate(laws):
        sl = [slice(None)] * values.ndim
        sl[axis_user] = k
        out[tuple(sl)] = law.cdf(values[tuple(sl)])
    return out


def _batch_outcomes(sinr: np.ndarray, config: SystemConfig, laws: Sequence,
                    drop_offset: int):
    """Vectorized scheduling of a (B, K, N, M) SINR batch.

    Returns (selected (B,N,M) int, winner_sinr (B,N,M), counts (B,N,M))."""
    B, K, N, M = sinr.shape
    greedy = config.scheduler is SchedulerKind.GREEDY

    if config.scheduler is SchedulerKind.ROUND_ROBIN:
        t = drop_offset + np.arange(B)
        slot = (t[:, None, None] * M * N
                + np.arange(N)[None, :, None] * M
                + np.arange(M)[None, None, :])
        selected = slot % K
        winner = np.take_along_axis(
            sinr, selected[:, None, :, :], axis=1)[:, 0]
        counts = np.full((B, N, M), K, dtype=int)
        return selected, winner, counts

    if config.scheme is Scheme.FULL:
        score = sinr if greedy else _transform(sinr, laws)
        selected = score.argmax(axis=1)
        winner = np.take_along_axis(sinr, selected[:, None, :, :], axis=1)[:, 0]
        counts = np.full((B, N, M), K, dtype=int)
        return selected, winner, counts

    best_beam = sinr.argmax(axis=3)                      # (B, K, N)
    best_val = sinr.max(axis=3)
    if config.scheme is Scheme.BEST_L:
        # top-L resource blocks per user by best-beam SINR
        order = np.argsort(-best_val, axis=2, kind="stable")
        keep = np.zeros_like(best_val, dtype=bool)
        np.put_along_axis(keep, order[:, :, :config.L], True, axis=2)
    else:
        keep = np.ones_like(best_val, dtype=bool)

    score = best_val if greedy else _transform(best_val, laws)
    # candidate matrix per slot: user k competes for (n, best_beam[k,n]) if kept
    cand = np.full((B, K, N, M), -np.inf)
    raw = np.zeros((B, K, N, M))
    bidx = np.arange(B)[:, None, None]
    kidx = np.arange(K)[None, :, None]
    nidx = np.arange(N)[None, None, :]
    cand[bidx, kidx, nidx, best_beam] = np.where(keep, score, -np.inf)
    raw[bidx, kidx, nidx, best_beam] = np.where(keep, best_val, 0.0)
    counts = (cand > -np.inf).sum(axis=1)
    selected = cand.argmax(axis=1)
    winner = np.take_along_axis(raw, selected[:, None, :, :], axis=1)[:, 0]
    selected = np.where(counts > 0, selected, -1)
    winner = np.where(counts > 0, winner, 0.0)
    return selected, winner, counts


def calibrate_empirical_cdf(config: SystemConfig,
                            calibration_drops: Optional[int] = None
                            ) -> list[EmpiricalCdf]:
    """Per-user step CDFs of the scheme's reported value, from an independent
    calibration stream (seed derived from config.seed)."""
    n = calibration_drops if calibration_drops is not None else config.calibration_drops
    if n < MIN_CALIBRATION_DROPS:
        raise ConfigurationError(
            f"calibration needs >= {MIN_CALIBRATION_DROPS} drops")
    rng = np.random.default_rng(np.random.SeedSequence(config.seed).spawn(1)[0])
    rho = np.asarray(config.rho)
    tables = []
    for start in range(0, n, 4096):
        B = min(4096, n - start)
        g = _draw_projections(rng, B, config.K, config.N, config.M)
        sinr = _sinr_from_projections(g, rho)
        if config.scheme is Scheme.FULL:
            samples = sinr.transpose(1, 0, 2, 3).reshape(config.K, -1)
        else:
            best = sinr.max(axis=3)                      # (B, K, N)
            if config.scheme is Scheme.BEST_L:
                part = -np.sort(-best, axis=2)[:, :, :config.L]
                samples = part.transpose(1, 0, 2).reshape(config.K, -1)
            else:
                samples = best.transpose(1, 0, 2).reshape(config.K, -1)
        tables.append(samples)
    merged = np.concatenate(tables, axis=1)
    return [EmpiricalCdf(merged[k]) for k in range(config.K)]


def _resolve_laws(config: SystemConfig):
    if config.scheduler is not SchedulerKind.CDF_BASED:
        return None
    if config.cdf_source is CdfSource.EMPIRICAL:
        return calibrate_empirical_cdf(config)
    return _analytic_laws(config)


def run_drops(config: SystemConfig, return_maxima: bool = False):
    """Simulate config.drops independent drops and aggregate.

    Deterministic in config.seed: drops are split into >= MIN_BATCHES batches,
    each driven by its own spawned substream, and merged in batch order.
    With return_maxima=True, also returns the winning raw SINR per
    (drop, rb, beam) (NaN on outage) for extreme-value diagnostics.
    """
    laws = _resolve_laws(config)
    rho = np.asarray(config.rho)
    K, N, M = config.K, config.N, config.M
    # cap per-batch array sizes: each batch materializes O(B*K*N*M) floats
    # a few times over, so keep that product near 2.5e7 elements (~1 GB peak)
    cells = K * N * M
    n_batches = min(config.drops, max(MIN_BATCHES,
                                      config.drops // 4096 + 1,
                                      -(-config.drops * cells // 25_000_000)))
    sizes = [config.drops // n_batches + (1 if i < config.drops % n_batches else 0)
             for i in range(n_batches)]
    streams = np.random.SeedSequence(config.seed).spawn(1 + n_batches)[1:]

    batch_rate = np.zeros((n_batches, K))
    batch_sel = np.zeros((n_batches, K))
    batch_out = np.zeros((n_batches, N, M))
    fb_sum = 0.0
    fb_sqsum = 0.0
    multi = 0
    maxima = [] if return_maxima else None
    offset = 0
    for i, (B, ss) in enumerate(zip(sizes, streams)):
        rng = np.random.default_rng(ss)
        g = _draw_projections(rng, B, K, N, M)
        sinr = _sinr_from_projections(g, rho)
        selected, winner, counts = _batch_outcomes(sinr, config, laws, offset)
        rate = np.where(selected >= 0, np.log2(1.0 + winner), 0.0)
        onehot = selected[:, None, :, :] == np.arange(K)[None, :, None, None]
        batch_rate[i] = (rate[:, None] * onehot).sum(axis=(2, 3)).mean(axis=0) / N
        batch_sel[i] = onehot.sum(axis=(2, 3)).mean(axis=0) / (N * M)
        batch_out[i] = (selected < 0).mean(axis=0)
        fb_sum += counts.sum()
        fb_sqsum += (counts.astype(float) ** 2).sum()
        wins_per_rb = onehot.sum(axis=3)                 # (B, K, N)
        multi += int(np.any(wins_per_rb >= 2, axis=(1, 2)).sum())
        if return_maxima:
            maxima.append(np.where(selected >= 0, winner, np.nan))
        offset += B

    w = np.asarray(sizes, dtype=float)
    w /= w.sum()

    def combine(batch_means):
        mean = np.tensordot(w, batch_means, axes=(0, 0))
        if n_batches > 1:
            var = np.tensordot(w, (batch_means - mean) ** 2, axes=(0, 0))
            se = np.sqrt(var / (n_batches - 1))
        else:
            se = np.zeros_like(mean)
        return mean, se

    mean_rate, se_rate = combine(batch_rate)
    sel, se_sel = combine(batch_sel)
    out, se_out = combine(batch_out)
    batch_sum = batch_rate.sum(axis=1)
    sum_rate, se_sum = combine(batch_sum)
    n_slots = config.drops * N * M
    fb_mean = fb_sum / n_slots
    fb_var = fb_sqsum / n_slots - fb_mean ** 2

    est = SimulationEstimate(
        mean_rate=mean_rate, mean_rate_stderr=se_rate,
        individual_sum_rate=K * mean_rate,
        individual_sum_rate_stderr=K * se_rate,
        sum_rate=float(sum_rate), sum_rate_stderr=float(se_sum),
        selection_frequency=sel, selection_frequency_stderr=se_sel,
        outage_fraction=out, outage_fraction_stderr=se_out,
        feedback_count_mean=float(fb_mean),
        feedback_count_var=float(fb_var),
        multi_beam_win_fraction=multi / config.drops,
        drops=config.drops, batches=n_batches)
    if return_maxima:
        return est, np.concatenate(maxima, axis=0)
    return est


def run_drops_reference(config: SystemConfig) -> list[DropOutcome]:
    """Explicit per-drop engine: Gaussian channels, QR beams, report objects.

    Slow; used as the oracle for the vectorized engine and for inspecting
    individual drops."""
    laws = _resolve_laws(config)
    rng = np.random.default_rng(np.random.SeedSequence(config.seed))
    outcomes = []
    for t in range(config.drops):
        beams = np.stack([generate_beams(config.M, rng)
                          for _ in range(config.N)])
        channels = (rng.standard_normal((config.K, config.N, config.M))
                    + 1j * rng.standard_normal((config.K, config.N, config.M))
                    ) / math.sqrt(2.0)
        table = sinr_table(channels, beams, config.rho)
        reports = apply_feedback(table, config.scheme, config.L)
        outcomes.append(schedule(reports, config, laws, drop_index=t,
                                 table=table))
    return outcomes
