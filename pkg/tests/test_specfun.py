import cmath
import math
import threading
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest
from scipy.special import loggamma as sp_loggamma, gammainc as sp_gammainc, gamma as sp_gamma

from crsnoma.analytic import build_rate_g_spec, build_rate_h_spec
from crsnoma.specfun import (
    BudgetError,
    ContourPolicy,
    DomainError,
    MeijerGSpec,
    NonConvergenceError,
    PoleError,
    SeparationError,
    build_delta,
    egbfhf,
    egbfhf_batch,
    log_gamma_complex,
    lower_incomplete_gamma,
    meijer_g,
    pochhammer,
    regularized_lower_incomplete_gamma,
)

EXP_SPEC = MeijerGSpec(m=1, n=0, a=(), b=(0.0,))
LOG_SPEC = MeijerGSpec(m=1, n=2, a=(1.0, 1.0), b=(1.0, 0.0))


# ---------------------------------------------------------------------------
# log_gamma_complex
# ---------------------------------------------------------------------------

# references frozen from a 40-digit arbitrary-precision evaluation
LGAMMA_REFS = [
    (3 + 4j, -1.756626784603784110531 + 4.742664438034657928195j),
    (0.5 + 0j, 0.5723649429247000870717 + 0.0j),
    (-2.5 + 1.5j, -3.717513451191791846159 - 7.713065525834192525969j),
    (0.1 - 0.2j, 1.419622556608801480821 + 1.189458456191653507368j),
    (1 + 60j, -91.28166879337807406968 + 186.4446829949734973519j),
    (0.25 - 200j, -314.5649059720983973247 - 859.270826311260933422j),
    (800 + 300j, 4490.232554072780208875 + 2011.957088603437147651j),
    (-7.3 + 0.1j, -7.850866869750174621581 - 24.7097291070023592368j),
]


def test_log_gamma_trivial_points():
    assert log_gamma_complex(1.0) == pytest.approx(0.0, abs=1e-14)
    assert log_gamma_complex(0.5).real == pytest.approx(math.log(math.sqrt(math.pi)), rel=1e-13)
    assert abs(log_gamma_complex(0.5).imag) < 1e-14


@pytest.mark.parametrize("z, ref", LGAMMA_REFS)
def test_log_gamma_frozen_references(z, ref):
    got = log_gamma_complex(z)
    assert abs(got - ref) / max(1.0, abs(ref)) < 1e-12


def test_log_gamma_accuracy_grid():
    rng = np.random.default_rng(11)
    zs = rng.uniform(-40, 40, 400) + 1j * rng.uniform(-900, 900, 400)
    for z in zs:
        if abs(z.imag) < 1e-6 and abs(z.real - round(z.real)) < 1e-6 and z.real <= 0:
            continue
        got = log_gamma_complex(complex(z))
        ref = sp_loggamma(complex(z))
        assert abs(got - ref) / max(1.0, abs(ref)) < 1e-12


def test_log_gamma_branch_continuity_along_contour():
    # imaginary part must be continuous on a vertical line crossing Re-axis
    t = np.linspace(-5, 5, 401)
    vals = np.array([log_gamma_complex(complex(0.3, ti)) for ti in t])
    jumps = np.abs(np.diff(vals.imag))
    assert jumps.max() < 0.5


@pytest.mark.parametrize("z", [0.0, -1.0, -5.0, -3.0 + 1e-13j])
def test_log_gamma_pole_error(z):
    with pytest.raises(PoleError):
        log_gamma_complex(z)


# ---------------------------------------------------------------------------
# lower incomplete gamma
# ---------------------------------------------------------------------------

def test_incomplete_gamma_trivial():
    assert lower_incomplete_gamma(1.0, 2.0) == pytest.approx(1 - math.exp(-2), rel=1e-13)
    assert lower_incomplete_gamma(2.0, 1.0) == pytest.approx(1 - 2 * math.exp(-1), rel=1e-13)
    assert lower_incomplete_gamma(3.0, 0.0) == 0.0


def test_incomplete_gamma_frozen_quadrature_values():
    # pinned by adaptive quadrature of t^(s-1) e^-t at 40-digit precision
    refs = [
        (1.7, 0.9, 0.2864659778973548995666),
        (0.5, 3.2, 1.752226543066473526255),
        (4.0, 0.03, 1.977002326847584797801e-7),
        (2.5, 2.5, 0.7764940589625164298943),
        (0.05, 17.0, 19.47008530859101102438),
    ]
    for s, x, ref in refs:
        assert lower_incomplete_gamma(s, x) == pytest.approx(ref, rel=1e-13)


def test_incomplete_gamma_domain_errors():
    with pytest.raises(DomainError):
        lower_incomplete_gamma(0.0, 1.0)
    with pytest.raises(DomainError):
        lower_incomplete_gamma(-1.5, 1.0)
    with pytest.raises(DomainError):
        lower_incomplete_gamma(1.0, -0.1)


@pytest.mark.parametrize("s", [0.3, 1.0, 2.5, 6.0])
def test_incomplete_gamma_regularized_properties(s):
    xs = np.linspace(0.0, s + 40, 200)
    prev = -1.0
    for x in xs:
        p = regularized_lower_incomplete_gamma(s, float(x))
        assert 0.0 <= p <= 1.0
        assert p >= prev - 1e-15
        prev = p
    assert prev > 1 - 1e-10  # approaches the complete integral


def test_incomplete_gamma_matches_library():
    rng = np.random.default_rng(5)
    for _ in range(300):
        s = rng.uniform(0.05, 20.0)
        x = rng.uniform(0.0, 50.0)
        ref = sp_gammainc(s, x)
        assert regularized_lower_incomplete_gamma(s, x) == pytest.approx(ref, rel=2e-13, abs=1e-300)


# ---------------------------------------------------------------------------
# pochhammer / build_delta
# ---------------------------------------------------------------------------

def test_pochhammer_trivial():
    assert pochhammer(3.0, 0.0) == 1.0
    assert pochhammer(2.0, 3.0) == pytest.approx(24.0, rel=1e-13)
    assert pochhammer(0.5, 2.5) == pytest.approx(2 / math.sqrt(math.pi), rel=1e-13)


@pytest.mark.parametrize("x", [0.3, 1.7, 5.5, -0.4])
def test_pochhammer_integer_rise_is_plain_product(x):
    for k in range(9):
        prod = 1.0
        for i in range(k):
            prod *= x + i
        assert pochhammer(x, float(k)) == pytest.approx(prod, rel=1e-12)


def test_pochhammer_pole_errors():
    with pytest.raises(PoleError):
        pochhammer(0.0, 1.5)
    with pytest.raises(PoleError):
        pochhammer(1.5, -3.5)  # x + y = -2


def test_build_delta():
    assert build_delta(2, 0.0) == [0.0, 0.5]
    assert build_delta(1, 0.3) == [0.3]
    assert build_delta(3, -1.5) == pytest.approx([-0.5, -1 / 6, 1 / 6])
    with pytest.raises(DomainError):
        build_delta(0, 1.0)


# ---------------------------------------------------------------------------
# contour policy
# ---------------------------------------------------------------------------

def test_contour_policy_validation():
    ContourPolicy(truncation=24.0, step=0.05)
    with pytest.raises(DomainError):
        ContourPolicy(truncation=1.0, step=0.05)  # ratio 20 < 100
    with pytest.raises(DomainError):
        ContourPolicy(truncation=60.0, step=0.07)  # ratio not an integer
    with pytest.raises(DomainError):
        ContourPolicy(perturb=1e-3)
    with pytest.raises(DomainError):
        ContourPolicy(max_rounds=0)


# ---------------------------------------------------------------------------
# meijer_g
# ---------------------------------------------------------------------------

def test_meijer_g_exponential_point():
    res = meijer_g(EXP_SPEC, 0.7)
    assert res.value == pytest.approx(math.exp(-0.7), rel=1e-10)


def test_meijer_g_log_point():
    res = meijer_g(LOG_SPEC, 1.0)
    assert res.value == pytest.approx(math.log(2.0), rel=1e-9)


def test_meijer_g_reduction_identity_grids():
    for x in np.logspace(-2, 2, 50):
        ge = meijer_g(EXP_SPEC, float(x)).value
        gl = meijer_g(LOG_SPEC, float(x)).value
        assert abs(ge - math.exp(-x)) <= 1e-8 * max(1.0, math.exp(-x))
        assert abs(gl - math.log1p(x)) <= 1e-6 * math.log1p(x)


def test_meijer_g_rate_spec_pinned_value():
    # value pinned by quadrature of the defining log-moment integral and
    # division by the closed-form prefactor (exponential-gain link, strong
    # first hop, 20 dB)
    spec = build_rate_g_spec(2, 1.0)
    z = 1.0 / (4.0 * 10.0**4 * 100.0**2)
    res = meijer_g(spec, z)
    assert res.value == pytest.approx(1923097.373139046836649, rel=1e-7)


def test_meijer_g_halving_step_within_error_estimate():
    for spec, z in ((LOG_SPEC, 37.0), (build_rate_g_spec(2, 1.0), 2.5e-9)):
        base = ContourPolicy(truncation=24.0, step=0.05)
        halved = ContourPolicy(truncation=24.0, step=0.025)
        r1 = meijer_g(spec, z, base)
        r2 = meijer_g(spec, z, halved)
        assert abs(r1.value - r2.value) <= r1.err + 1e-12 * max(1.0, abs(r1.value))


def test_meijer_g_separation_error():
    bad = MeijerGSpec(m=1, n=1, a=(3.2,), b=(0.3,))
    with pytest.raises(SeparationError):
        meijer_g(bad, 1.0)


def test_meijer_g_rejects_non_decaying_integrand():
    flat = MeijerGSpec(m=1, n=0, a=(0.0,), b=(0.0,))  # decay exponent 0
    with pytest.raises(SeparationError):
        meijer_g(flat, 1.0)


def test_meijer_g_domain_error():
    with pytest.raises(DomainError):
        meijer_g(EXP_SPEC, 0.0)
    with pytest.raises(DomainError):
        meijer_g(EXP_SPEC, -2.0)


def test_meijer_g_nonconvergence_error():
    # a step too coarse for the oscillation at large argument, with too few
    # refinement rounds to recover
    policy = ContourPolicy(truncation=60.0, step=0.5, max_rounds=2)
    with pytest.raises(NonConvergenceError):
        meijer_g(LOG_SPEC, 100.0, policy)


def test_meijer_g_thread_safety():
    def run(_):
        return meijer_g(LOG_SPEC, 42.0).value

    with ThreadPoolExecutor(max_workers=8) as pool:
        vals = list(pool.map(run, range(16)))
    assert len(set(vals)) == 1


# ---------------------------------------------------------------------------
# bivariate H
# ---------------------------------------------------------------------------

def _cross_spec(mu_a=1.0, lam=1.0, nu=1.0, mu_b=1.0):
    return build_rate_h_spec(mu_a, lam, nu, mu_b)


# the cross-term integrands decay like exp(-pi |Im s|): a truncation of 20 is
# already far below every tolerance here and keeps the nested grids small
H_POLICY = ContourPolicy(truncation=20.0, step=0.05)


def test_egbfhf_pinned_cross_value():
    # pinned by quadrature of ln(1 + 100 x) pdf(x) cdf(x) for exponential-gain
    # links with omegas 10 (pdf side) and 1 (cdf side)
    res = egbfhf(_cross_spec(), 1.0e4, 100.0, H_POLICY)
    assert res.value == pytest.approx(8.593801253521808520121, rel=1e-7)


def test_egbfhf_pinned_scaled_cross_value():
    # the relayed-symbol cross term with power fraction 0.2 on the first hop
    res = egbfhf(_cross_spec(), 2000.0, 0.2, H_POLICY)
    assert res.value == pytest.approx(1.322640071393778250461, rel=1e-7)


def test_egbfhf_vanishing_cdf_argument():
    res = egbfhf(_cross_spec(), 1000.0, 1e-20, H_POLICY)
    assert abs(res.value) <= 1e-6


def test_egbfhf_batch_matches_singles():
    pairs = [(1.0e4, 100.0), (2000.0, 0.2), (5.0, 1.0)]
    batched = egbfhf_batch(_cross_spec(), pairs, H_POLICY)
    for pair, got in zip(pairs, batched):
        single = egbfhf(_cross_spec(), *pair, H_POLICY)
        assert got.value == pytest.approx(single.value, rel=1e-12, abs=1e-15)


def test_egbfhf_halving_step_within_error_estimate():
    base = ContourPolicy(truncation=16.0, step=0.08)
    halved = ContourPolicy(truncation=16.0, step=0.04)
    r1 = egbfhf(_cross_spec(2.0, 1.0, 1.5, 2.0), 50.0, 3.0, base)
    r2 = egbfhf(_cross_spec(2.0, 1.0, 1.5, 2.0), 50.0, 3.0, halved)
    assert abs(r1.value - r2.value) <= r1.err + 1e-12 * max(1.0, abs(r1.value))


def test_egbfhf_budget_error():
    tight = ContourPolicy(truncation=60.0, step=0.05, max_nested_points=1000)
    with pytest.raises(BudgetError):
        egbfhf(_cross_spec(), 10.0, 10.0, tight)


def test_egbfhf_domain_errors():
    with pytest.raises(DomainError):
        egbfhf(_cross_spec(), -1.0, 2.0)
    with pytest.raises(DomainError):
        egbfhf(_cross_spec(), 1.0, 0.0)
