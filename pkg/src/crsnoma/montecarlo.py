"""Monte-Carlo oracle for the two-slot relaying protocol.

Draws per-link channel gains, evaluates the instantaneous achievable rates
and the outage events, and reports means with standard errors.  Sample i
always comes from substream i mod 256 of a seed-split generator family, so
results are bit-identical for a fixed (n, seed) no matter how many worker
threads process the streams.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .analytic import SystemConfig
from .fading import LinkTriple, sample_gain, split_streams
from .specfun import DomainError

__all__ = ["MCSettings", "MCEstimate", "STREAM_COUNT",
           "simulate_rates", "simulate_outage", "outage_event_counts",
           "audit_outage_rate_form"]

STREAM_COUNT = 256
_LN2 = math.log(2.0)


@dataclass(frozen=True)
class MCSettings:
    """Sample count, root seed and worker threads of one simulation run."""

    n: int
    seed: int
    workers: int = 1

    def __post_init__(self):
        if self.n < 10_000:
            raise DomainError(f"need at least 10^4 samples, got {self.n}")
        if not (0 <= self.seed < 2**64):
            raise DomainError("seed must fit in 64 bits")
        if self.workers < 1:
            raise DomainError("workers must be >= 1")


class MCEstimate(NamedTuple):
    """Sample mean with standard error (sample std / sqrt(n))."""
    mean: float
    stderr: float
    n: int


def _stream_sizes(n: int) -> np.ndarray:
    sizes = np.full(STREAM_COUNT, n // STREAM_COUNT, dtype=np.int64)
    sizes[: n % STREAM_COUNT] += 1
    return sizes


def _run_streams(settings: MCSettings, per_stream, width: int) -> np.ndarray:
    """Apply `per_stream(generator, count) -> row of width stats` to every
    substream, merging rows in stream order regardless of worker count."""
    sizes = _stream_sizes(settings.n)
    gens = split_streams(settings.seed, STREAM_COUNT)
    table = np.zeros((STREAM_COUNT, width))

    def work(k: int) -> None:
        if sizes[k] > 0:
            table[k] = per_stream(gens[k], int(sizes[k]))

    if settings.workers == 1:
        for k in range(STREAM_COUNT):
            work(k)
    else:
        with ThreadPoolExecutor(max_workers=settings.workers) as pool:
            list(pool.map(work, range(STREAM_COUNT)))
    return table.sum(axis=0)


def _estimate(total: float, total_sq: float, n: int) -> MCEstimate:
    mean = total / n
    var = max(total_sq - total * total / n, 0.0) / (n - 1)
    return MCEstimate(mean=mean, stderr=math.sqrt(var / n), n=n)


def simulate_rates(cfg: SystemConfig, links: LinkTriple, settings: MCSettings
                   ) -> tuple[MCEstimate, MCEstimate, MCEstimate]:
    """Average-rate estimates for the strong symbol, the relayed symbol and
    the single-symbol reference scheme.

    Per draw: X = min(sr, sd) gains, Y = min(a2*sr, rd), Z = min(sr, sd+rd);
    the strong-symbol rate is the interference-limited difference
    0.5 log2(1 + rho X) - 0.5 log2(1 + a2 rho X).
    """
    rho, a2 = cfg.rho, cfg.a2

    def per_stream(gen: np.random.Generator, count: int) -> np.ndarray:
        lam_sr = sample_gain(links.sr, gen, count)
        lam_sd = sample_gain(links.sd, gen, count)
        lam_rd = sample_gain(links.rd, gen, count)
        x = np.minimum(lam_sr, lam_sd)
        y = np.minimum(a2 * lam_sr, lam_rd)
        z = np.minimum(lam_sr, lam_sd + lam_rd)
        v1 = 0.5 * (np.log1p(rho * x) - np.log1p(a2 * rho * x)) / _LN2
        v2 = 0.5 * np.log1p(rho * y) / _LN2
        vz = 0.5 * np.log1p(rho * z) / _LN2
        return np.array([v1.sum(), (v1 * v1).sum(),
                         v2.sum(), (v2 * v2).sum(),
                         vz.sum(), (vz * vz).sum()])

    s = _run_streams(settings, per_stream, 6)
    n = settings.n
    return (_estimate(s[0], s[1], n), _estimate(s[2], s[3], n), _estimate(s[4], s[5], n))


def _outage_counts(cfg: SystemConfig, links: LinkTriple, settings: MCSettings) -> dict:
    phi1 = cfg.phi1
    phi2 = cfg.phi2
    phi_max = cfg.phi_max
    thr_rd = cfg.rd_threshold

    def per_stream(gen: np.random.Generator, count: int) -> np.ndarray:
        lam_sr = sample_gain(links.sr, gen, count)
        lam_sd = sample_gain(links.sd, gen, count)
        lam_rd = sample_gain(links.rd, gen, count)
        o1 = (lam_sr < phi1) | (lam_sd < phi1)
        e1 = lam_sr < phi1
        e2 = (~e1) & (lam_sr < phi2)
        e3 = (~e1) & (~e2) & (lam_rd < thr_rd)
        o2_events = e1 | e2 | e3
        o2_threshold = (lam_sr < phi_max) | (lam_rd < thr_rd)
        if not np.array_equal(o2_events, o2_threshold):
            raise RuntimeError(
                "internal invariant violated: event-form and threshold-form "
                "outage disagree on some draw")
        return np.array([o1.sum(), o2_events.sum(), o2_threshold.sum(),
                         e1.sum(), e2.sum(), e3.sum()], dtype=float)

    s = _run_streams(settings, per_stream, 6)
    counts = {"o1": int(s[0]), "o2": int(s[1]), "o2_threshold": int(s[2]),
              "e1": int(s[3]), "e2": int(s[4]), "e3": int(s[5]), "n": settings.n}
    if counts["e1"] + counts["e2"] + counts["e3"] != counts["o2"]:
        raise RuntimeError("internal invariant violated: outage events not disjoint")
    return counts


def outage_event_counts(cfg: SystemConfig, links: LinkTriple, settings: MCSettings) -> dict:
    """Raw counts of the outage events and their disjoint decomposition."""
    return _outage_counts(cfg, links, settings)


def simulate_outage(cfg: SystemConfig, links: LinkTriple, settings: MCSettings
                    ) -> tuple[MCEstimate, MCEstimate]:
    """Outage-probability estimates for both symbols by event counting.

    With an infeasible power split the strong symbol is always in outage and
    the estimate is exactly 1 with zero standard error.
    """
    counts = _outage_counts(cfg, links, settings)
    n = settings.n

    def bernoulli(k: int) -> MCEstimate:
        p = k / n
        var = n / (n - 1) * p * (1.0 - p)
        return MCEstimate(mean=p, stderr=math.sqrt(var / n), n=n)

    return bernoulli(counts["o1"]), bernoulli(counts["o2"])


def audit_outage_rate_form(cfg: SystemConfig, links: LinkTriple, settings: MCSettings) -> int:
    """Draws where the rate-form outage test (instantaneous rate < target)
    disagrees with the gain-threshold form.  Expected 0; returned for audits."""
    rho, a2, r1 = cfg.rho, cfg.a2, cfg.r1
    phi1 = cfg.phi1

    def per_stream(gen: np.random.Generator, count: int) -> np.ndarray:
        lam_sr = sample_gain(links.sr, gen, count)
        lam_sd = sample_gain(links.sd, gen, count)
        sample_gain(links.rd, gen, count)  # keep the draw order of the other paths
        x = np.minimum(lam_sr, lam_sd)
        c_s1 = 0.5 * (np.log1p(rho * x) - np.log1p(a2 * rho * x)) / _LN2
        rate_form = c_s1 < r1
        threshold_form = x < phi1
        return np.array([float(np.count_nonzero(rate_form != threshold_form))])

    return int(_run_streams(settings, per_stream, 1)[0])
