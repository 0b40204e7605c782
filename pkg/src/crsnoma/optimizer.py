"""Exhaustive grid search for the weak-symbol power fraction.

The feasibility constraint a1 > eta1 * a2 bounds the search to
(0, 2^(-2 R1)); the grid is the M equally spaced interior points
{eps, 2 eps, ..., M eps} with eps = 2^(-2 R1) / (M + 1).  Ties are broken
toward the smaller power fraction (the more conservative choice for the
strong-symbol outage constraint).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import NamedTuple

from .analytic import (
    RATE_POLICY,
    ContourError,
    SystemConfig,
    average_rates,
)
from .fading import LinkTriple
from .specfun import ContourPolicy, DomainError

__all__ = ["GridSpec", "OptimizeResult", "optimize_a2"]

logger = logging.getLogger(__name__)

_BACKENDS = ("closed-form", "quadrature", "monte-carlo")


@dataclass(frozen=True)
class GridSpec:
    """Search grid: m points with derived step 2^(-2 r1) / (m + 1)."""

    m: int
    r1: float = 1.0

    def __post_init__(self):
        if self.m < 1:
            raise DomainError(f"grid size must be >= 1, got {self.m}")
        if self.r1 <= 0:
            raise DomainError("target rate must be positive")

    @property
    def epsilon(self) -> float:
        return 2.0 ** (-2.0 * self.r1) / (self.m + 1)

    def points(self) -> list[float]:
        return [k * self.epsilon for k in range(1, self.m + 1)]


class OptimizeResult(NamedTuple):
    a2_opt: float
    rate_opt: float
    table: list[tuple[float, float]]


def _total_rate(cfg: SystemConfig, links: LinkTriple, backend: str,
                policy: ContourPolicy, mc_settings) -> float:
    if backend == "monte-carlo":
        from .montecarlo import MCSettings, simulate_rates

        settings = mc_settings or MCSettings(n=200_000, seed=0)
        c1, c2, _ = simulate_rates(cfg, links, settings)
        return c1.mean + c2.mean
    return average_rates(cfg, links, backend=backend, policy=policy).c_total


def optimize_a2(rho: float, links: LinkTriple, grid: GridSpec,
                r1: float | None = None, r2: float = 1.0,
                backend: str = "quadrature",
                policy: ContourPolicy = RATE_POLICY,
                mc_settings=None) -> OptimizeResult:
    """Maximise the total average rate over the feasible power-fraction grid.

    The grid's own target rate fixes the feasible range; `r1` defaults to it.
    A grid point whose closed-form evaluation fails is retried on the
    quadrature backend before the sweep aborts.
    """
    if backend not in _BACKENDS:
        raise DomainError(f"backend must be one of {_BACKENDS}, got {backend!r}")
    r1 = grid.r1 if r1 is None else r1
    table: list[tuple[float, float]] = []
    best_a2, best_rate = None, -math.inf
    for a2 in grid.points():
        cfg = SystemConfig.with_a2(rho, a2, r1=r1, r2=r2)
        try:
            rate = _total_rate(cfg, links, backend, policy, mc_settings)
        except ContourError as exc:
            if backend != "closed-form":
                raise
            logger.warning("closed-form backend failed at a2=%.4f (%s); "
                           "retrying with quadrature", a2, exc)
            rate = _total_rate(cfg, links, "quadrature", policy, mc_settings)
        table.append((a2, rate))
        if rate > best_rate:
            best_a2, best_rate = a2, rate
    return OptimizeResult(a2_opt=best_a2, rate_opt=best_rate, table=table)
