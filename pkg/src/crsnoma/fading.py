"""Generalized small-scale fading model with nonlinearity/clustering parameters.

A link is described by (alpha, mu, omega): `alpha` shapes the nonlinearity of
the envelope, `mu` the multipath clustering, `omega` is the alpha-root-mean
envelope value.  The channel gain is the squared envelope; its distribution
reduces to exponential gains for (alpha=2, mu=1), Nakagami-m gains for
(alpha=2, mu=m), and Weibull for mu=1.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .specfun import DomainError, regularized_lower_incomplete_gamma

__all__ = ["LinkParams", "LinkTriple", "envelope_pdf", "gain_cdf", "gain_pdf",
           "scaled_gain_cdf", "scaled_gain_pdf", "sample_gain", "split_streams"]


@dataclass(frozen=True)
class LinkParams:
    """One fading link: nonlinearity alpha, clustering mu, alpha-root-mean omega."""

    alpha: float
    mu: float
    omega: float

    def __post_init__(self):
        for name in ("alpha", "mu", "omega"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise DomainError(f"{name} must be positive and finite, got {v}")

    def scaled(self, gain_scale: float) -> "LinkParams":
        """Link whose gain is `gain_scale` times this link's gain."""
        return LinkParams(self.alpha, self.mu, math.sqrt(gain_scale) * self.omega)


@dataclass(frozen=True)
class LinkTriple:
    """Source-relay, source-destination and relay-destination links."""

    sr: LinkParams
    sd: LinkParams
    rd: LinkParams

    def __post_init__(self):
        if self.sd.omega ** self.sd.alpha >= self.sr.omega ** self.sr.alpha:
            warnings.warn(
                "direct link is not weaker on average than the first hop "
                "(omega_sd^alpha_sd >= omega_sr^alpha_sr); the model assumes "
                "the opposite ordering", stacklevel=2)

    @classmethod
    def uniform(cls, alpha: float, mu: float, omega_sr: float, omega_sd: float,
                omega_rd: float) -> "LinkTriple":
        """All links share (alpha, mu) but have individual omegas."""
        return cls(LinkParams(alpha, mu, omega_sr), LinkParams(alpha, mu, omega_sd),
                   LinkParams(alpha, mu, omega_rd))


def envelope_pdf(p: LinkParams, x):
    """Density of the fading envelope at x >= 0."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise DomainError("envelope argument must be >= 0")
    am = p.alpha * p.mu
    norm = p.alpha * p.mu**p.mu / (p.omega**am * math.gamma(p.mu))
    with np.errstate(divide="ignore"):
        val = norm * x**(am - 1.0) * np.exp(-p.mu * x**p.alpha / p.omega**p.alpha)
    val = np.where((x == 0) & (am < 1.0), np.inf, val)
    return float(val) if val.ndim == 0 else val


def _vec(fn, x):
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        return fn(float(x))
    return np.array([fn(float(v)) for v in x.flat]).reshape(x.shape)


def gain_cdf(p: LinkParams, x):
    """CDF of the channel gain (squared envelope) at x >= 0."""
    def one(v: float) -> float:
        if v < 0:
            raise DomainError("gain argument must be >= 0")
        if math.isinf(v):
            return 1.0
        return regularized_lower_incomplete_gamma(
            p.mu, p.mu * v**(0.5 * p.alpha) / p.omega**p.alpha)
    return _vec(one, x)


def gain_pdf(p: LinkParams, x):
    """Density of the channel gain.

    For x = 0 the value is the limit: 0 when alpha*mu > 2, finite at
    alpha*mu = 2, and a pole (domain error) when alpha*mu < 2.
    """
    shape = 0.5 * p.alpha * p.mu

    def one(v: float) -> float:
        if v < 0:
            raise DomainError("gain argument must be >= 0")
        if v == 0.0:
            if shape > 1.0:
                return 0.0
            if shape == 1.0:
                return p.alpha * p.mu**p.mu / (2.0 * p.omega**(p.alpha * p.mu) * math.gamma(p.mu))
            raise DomainError("gain density has a pole at 0 for alpha*mu < 2")
        am = p.alpha * p.mu
        return (p.alpha * p.mu**p.mu * v**(shape - 1.0)
                / (2.0 * p.omega**am * math.gamma(p.mu))
                * math.exp(-p.mu * v**(0.5 * p.alpha) / p.omega**p.alpha))
    return _vec(one, x)


def _check_power_fraction(a2: float) -> None:
    if not (0.0 < a2 < 1.0):
        raise DomainError(f"power fraction must lie in (0, 1), got {a2}")


def scaled_gain_cdf(p: LinkParams, a2: float, y):
    """CDF of a2 times the channel gain."""
    _check_power_fraction(a2)
    return gain_cdf(p, np.asarray(y, dtype=float) / a2)


def scaled_gain_pdf(p: LinkParams, a2: float, y):
    """Density of a2 times the channel gain."""
    _check_power_fraction(a2)
    return gain_pdf(p, np.asarray(y, dtype=float) / a2) / a2


def sample_gain(p: LinkParams, stream: np.random.Generator, size=None):
    """Draw channel gains: omega^2 (G/mu)^(2/alpha) with G ~ Gamma(mu, 1).

    The transform maps the unit-scale gamma variate onto the gain law of this
    link, so the empirical CDF matches gain_cdf.  Deterministic per stream
    state.
    """
    g = stream.standard_gamma(p.mu, size)
    return p.omega**2 * (g / p.mu) ** (2.0 / p.alpha)


def split_streams(seed: int, count: int) -> list[np.random.Generator]:
    """Independent, reproducible child streams of one root seed."""
    root = np.random.SeedSequence(seed)
    return [np.random.Generator(np.random.PCG64(s)) for s in root.spawn(count)]
