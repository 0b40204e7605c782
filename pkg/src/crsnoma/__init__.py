"""Rate, outage and diversity analysis of a two-slot NOMA relaying system
over generalized (alpha-mu) fading links.

Closed-form special-function expressions (Meijer G, bivariate Fox H) are
cross-validated against direct numerical quadrature and an independent
Monte-Carlo simulator.
"""

__version__ = "0.1.0"

from ._backend import backend_name, warmup
from .analytic import (
    OutageReport,
    RateReport,
    SystemConfig,
    asymptotic_outage_s1,
    asymptotic_outage_s2,
    average_rates,
    avg_rate_oma,
    avg_rate_s1,
    avg_rate_s2,
    diversity_orders,
    outage_report,
    outage_s1,
    outage_s2,
    rate_integrand_quadrature,
)
from .fading import (
    LinkParams,
    LinkTriple,
    envelope_pdf,
    gain_cdf,
    gain_pdf,
    sample_gain,
    scaled_gain_cdf,
    scaled_gain_pdf,
)
from .montecarlo import MCEstimate, MCSettings, simulate_outage, simulate_rates
from .optimizer import GridSpec, OptimizeResult, optimize_a2
from .specfun import (
    ContourEval,
    ContourPolicy,
    EGBFHFSpec,
    MeijerGSpec,
    build_delta,
    egbfhf,
    log_gamma_complex,
    lower_incomplete_gamma,
    meijer_g,
    pochhammer,
)

__all__ = [
    "__version__", "backend_name", "warmup",
    "SystemConfig", "RateReport", "OutageReport",
    "avg_rate_s1", "avg_rate_s2", "average_rates", "avg_rate_oma",
    "rate_integrand_quadrature", "outage_s1", "outage_s2",
    "asymptotic_outage_s1", "asymptotic_outage_s2", "diversity_orders",
    "outage_report",
    "LinkParams", "LinkTriple", "envelope_pdf", "gain_cdf", "gain_pdf",
    "scaled_gain_cdf", "scaled_gain_pdf", "sample_gain",
    "MCSettings", "MCEstimate", "simulate_rates", "simulate_outage",
    "GridSpec", "OptimizeResult", "optimize_a2",
    "ContourPolicy", "ContourEval", "MeijerGSpec", "EGBFHFSpec",
    "log_gamma_complex", "lower_incomplete_gamma", "pochhammer",
    "build_delta", "meijer_g", "egbfhf",
]
