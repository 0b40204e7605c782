import math

import numpy as np
import pytest

from crsnoma.analytic import (
    RATE_POLICY,
    OutageReport,
    RateReport,
    RateTermError,
    SystemConfig,
    _asym_cdf_term,
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
from crsnoma.fading import LinkParams, LinkTriple, gain_cdf
from crsnoma.specfun import ContourPolicy, DomainError


# ---------------------------------------------------------------------------
# configuration object
# ---------------------------------------------------------------------------

def test_system_config_validation():
    with pytest.raises(DomainError):
        SystemConfig(rho=100, a1=0.7, a2=0.2)  # does not sum to 1
    with pytest.raises(DomainError):
        SystemConfig(rho=100, a1=0.4, a2=0.6)  # a1 <= a2
    with pytest.raises(DomainError):
        SystemConfig(rho=-1, a1=0.8, a2=0.2)
    with pytest.raises(DomainError):
        SystemConfig(rho=100, a1=0.8, a2=0.2, r1=0)


def test_system_config_thresholds():
    cfg = SystemConfig.with_a2(100.0, 0.1, r1=1.0, r2=1.0)
    assert cfg.eta1 == pytest.approx(3.0)
    assert cfg.eta2 == pytest.approx(3.0)
    assert cfg.feasible_s1
    assert cfg.phi1 == pytest.approx(3.0 / (100.0 * 0.6), rel=1e-14)
    assert cfg.phi2 == pytest.approx(0.3, rel=1e-14)
    assert cfg.phi_max == pytest.approx(0.3)


def test_system_config_feasibility_boundary():
    # a1 = eta1 * a2 exactly: the strong symbol can never be decoded
    cfg = SystemConfig.with_a2(100.0, 0.25, r1=1.0)
    assert not cfg.feasible_s1
    assert math.isinf(cfg.phi1)


def test_system_config_zero_snr_limit():
    cfg = SystemConfig.with_a2(0.0, 0.2)
    assert math.isinf(cfg.phi1) and math.isinf(cfg.phi2) and math.isinf(cfg.rd_threshold)


# ---------------------------------------------------------------------------
# outage
# ---------------------------------------------------------------------------

def test_outage_s1_infeasible_split_is_one(fig_rate_links):
    cfg = SystemConfig.with_a2(100.0, 0.25, r1=1.0)
    assert outage_s1(cfg, fig_rate_links) == 1.0


def test_outage_s1_exponential_value(fig_rate_links):
    # phi1 = 3/(100 * 0.6) = 0.05; both links exponential-gain
    cfg = SystemConfig.with_a2(100.0, 0.1, r1=1.0)
    expected = 1 - math.exp(-0.05 * (0.01 + 1.0))
    assert outage_s1(cfg, fig_rate_links) == pytest.approx(expected, rel=1e-12)
    assert expected == pytest.approx(0.04924607, abs=1e-8)


def test_outage_monotone_in_snr(fig_rate_links):
    prev1, prev2 = 1.0, 1.0
    for rho_db in np.linspace(0, 60, 13):
        cfg = SystemConfig.with_a2(10 ** (rho_db / 10), 0.1)
        p1 = outage_s1(cfg, fig_rate_links)
        p2 = outage_s2(cfg, fig_rate_links)
        assert 0.0 <= p1 <= prev1 + 1e-15
        assert 0.0 <= p2 <= prev2 + 1e-15
        prev1, prev2 = p1, p2
    assert prev1 < 1e-6  # vanishes at high SNR


def test_outage_s2_collapses_to_relay_event_for_tiny_r2(fig_rate_links):
    cfg = SystemConfig.with_a2(100.0, 0.1, r1=1.0, r2=1e-9)
    expected = gain_cdf(fig_rate_links.sr, cfg.phi1)
    assert outage_s2(cfg, fig_rate_links) == pytest.approx(expected, rel=1e-6)


def _two_branch_outage(cfg, links):
    # literal disjoint-event sum, both threshold orderings
    f_sr = lambda x: gain_cdf(links.sr, x)
    f_rd = lambda x: gain_cdf(links.rd, x)
    if cfg.phi1 < cfg.phi2:
        return (f_sr(cfg.phi1) + (f_sr(cfg.phi2) - f_sr(cfg.phi1))
                + (1 - f_sr(cfg.phi2)) * f_rd(cfg.rd_threshold))
    return f_sr(cfg.phi1) + (1 - f_sr(cfg.phi1)) * f_rd(cfg.rd_threshold)


@pytest.mark.parametrize("a2, r1", [(0.1, 1.0), (0.23, 1.0), (0.05, 0.4)])
def test_outage_s2_matches_branch_decomposition(fig_rate_links, a2, r1):
    # covers both phi1 < phi2 and phi1 > phi2 regimes
    cfg = SystemConfig.with_a2(50.0, a2, r1=r1, r2=1.0)
    assert outage_s2(cfg, fig_rate_links) == pytest.approx(
        _two_branch_outage(cfg, fig_rate_links), rel=1e-12)


def test_asymptotic_outage_ratio_high_snr(fig_rate_links):
    cfg = SystemConfig.with_a2(10.0**6, 0.1)
    exact = outage_s1(cfg, fig_rate_links)
    asym = asymptotic_outage_s1(cfg, fig_rate_links)
    assert asym / exact == pytest.approx(1.0, abs=0.01)


def test_asymptotic_outage_power_law(fig_rate_links):
    # doubling the SNR divides each term by 2^(alpha mu / 2); with equal
    # (alpha, mu) on all links the whole sum scales exactly
    c1 = SystemConfig.with_a2(10.0**4, 0.1)
    c2 = SystemConfig.with_a2(2 * 10.0**4, 0.1)
    ratio = asymptotic_outage_s1(c1, fig_rate_links) / asymptotic_outage_s1(c2, fig_rate_links)
    assert ratio == pytest.approx(2.0 ** (0.5 * 2 * 1), rel=1e-12)


def test_asymptotic_term_exponential_form():
    # for (alpha, mu) = (2, 1) the per-link leading term is threshold / omega^2
    link = LinkParams(2, 1, 7.0)
    assert _asym_cdf_term(link, 0.003) == pytest.approx(0.003 / 49.0, rel=1e-12)


def test_diversity_orders():
    assert diversity_orders(LinkTriple.uniform(2, 1, 10, 1, 10)) == (1.0, 1.0)
    assert diversity_orders(LinkTriple.uniform(3, 1, 10, 1, 10)) == (1.5, 1.5)
    links = LinkTriple(LinkParams(4, 1, 10), LinkParams(2, 1, 1), LinkParams(2, 2, 10))
    assert diversity_orders(links) == (1.0, 2.0)


def test_outage_report_fields(fig_rate_links):
    rep = outage_report(SystemConfig.with_a2(100.0, 0.1), fig_rate_links)
    assert isinstance(rep, OutageReport)
    assert 0 <= rep.p_out1 <= 1 and 0 <= rep.p_out2 <= 1
    assert rep.d1 == 1.0 and rep.d2 == 1.0
    assert rep.p_out1_asym > 0 and rep.p_out2_asym > 0


# ---------------------------------------------------------------------------
# quadrature rate terms
# ---------------------------------------------------------------------------

def test_rate_term_zero_snr():
    assert rate_integrand_quadrature("I1", LinkParams(2, 1, 1), scale_rho=0.0) == 0.0


def test_rate_term_exponential_closed_form():
    # exponential-gain log moment: e * E1(1), frozen at 40-digit precision
    got = rate_integrand_quadrature("I1", LinkParams(2, 1, 1), scale_rho=1.0)
    assert got == pytest.approx(0.5963473623231940743411, rel=1e-9)


def test_rate_term_cross_consistent_with_contour_backend(fig_rate_links):
    from crsnoma.analytic import _cross_term

    sr, sd = fig_rate_links.sr, fig_rate_links.sd
    quad_val = rate_integrand_quadrature("I2", sr, sd, scale_rho=100.0)
    contour_val, _ = _cross_term(sr.alpha, sr.mu, sr.omega, sd.alpha, sd.mu,
                                 sd.omega, 100.0, RATE_POLICY, 1e-8)
    assert quad_val == pytest.approx(contour_val, rel=1e-6)


def test_rate_term_kind_validation(fig_rate_links):
    sr, sd = fig_rate_links.sr, fig_rate_links.sd
    with pytest.raises(DomainError):
        rate_integrand_quadrature("I13", sr)
    with pytest.raises(DomainError):
        rate_integrand_quadrature("I2", sr)  # cross kind needs link_b
    with pytest.raises(DomainError):
        rate_integrand_quadrature("I1", sr, sd)  # single-link kind with link_b


def test_rate_term_scaled_kinds(fig_rate_links):
    sr, rd = fig_rate_links.sr, fig_rate_links.rd
    a2 = 0.2
    # pdf-side scaling (I10) must equal scaling the link by hand
    direct = rate_integrand_quadrature("I10", sr, rd, scale_rho=100.0, scale_gain=a2)
    manual = rate_integrand_quadrature("I2", sr.scaled(a2), rd, scale_rho=100.0)
    assert direct == pytest.approx(manual, rel=1e-12)
    # cdf-side scaling (I12)
    direct = rate_integrand_quadrature("I12", rd, sr, scale_rho=100.0, scale_gain=a2)
    manual = rate_integrand_quadrature("I2", rd, sr.scaled(a2), scale_rho=100.0)
    assert direct == pytest.approx(manual, rel=1e-12)


# ---------------------------------------------------------------------------
# average rates
# ---------------------------------------------------------------------------

def test_rates_match_pinned_quadrature_reference(fig_rate_links, cfg_20db):
    # frozen from 25-digit quadrature of the defining integrals
    for backend, rel in (("closed-form", 1e-6), ("quadrature", 1e-6)):
        rep = average_rates(cfg_20db, fig_rate_links, backend)
        assert rep.c_s1 == pytest.approx(1.1709717687019239, rel=rel)
        assert rep.c_s2 == pytest.approx(4.839858348740411, rel=rel)
        assert rep.c_total == rep.c_s1 + rep.c_s2
        assert rep.backend == backend


def test_backend_agreement_spot(cfg_20db):
    links = LinkTriple.uniform(3, 2, 10, 1, 10)
    closed = average_rates(cfg_20db, links, "closed-form")
    quadr = average_rates(cfg_20db, links, "quadrature")
    for c, q in ((closed.c_s1, quadr.c_s1), (closed.c_s2, quadr.c_s2)):
        assert abs(c - q) <= max(1e-5, 1e-4 * q)


def test_avg_rate_s1_symmetric_under_hop_swap(cfg_20db):
    links = LinkTriple(LinkParams(2, 1, 10), LinkParams(2, 2, 1), LinkParams(2, 1, 10))
    with pytest.warns(UserWarning):
        swapped = LinkTriple(links.sd, links.sr, links.rd)
    for backend in ("closed-form", "quadrature"):
        a = average_rates(cfg_20db, links, backend).c_s1
        b = average_rates(cfg_20db, swapped, backend).c_s1
        assert a == pytest.approx(b, rel=1e-9)


def test_avg_rate_s1_near_equal_split_bounds(fig_rate_links):
    # a2 -> 1/2: the interference-limited rate collapses; it must stay
    # between 0 and the unsplit bound
    cfg = SystemConfig.with_a2(100.0, (1 - 1e-9) / 2)
    v = average_rates(cfg, fig_rate_links, "quadrature").c_s1
    bound = 0.5 / math.log(2) * (
        rate_integrand_quadrature("I1", fig_rate_links.sr, scale_rho=100.0)
        - rate_integrand_quadrature("I2", fig_rate_links.sr, fig_rate_links.sd, scale_rho=100.0)
        + rate_integrand_quadrature("I3", fig_rate_links.sd, scale_rho=100.0)
        - rate_integrand_quadrature("I4", fig_rate_links.sd, fig_rate_links.sr, scale_rho=100.0))
    assert 0.0 <= v <= bound


def test_avg_rate_s2_vanishes_with_power_fraction(fig_rate_links):
    cfg = SystemConfig.with_a2(100.0, 1e-6)
    assert average_rates(cfg, fig_rate_links, "quadrature").c_s2 <= 1e-3
    assert avg_rate_s2(cfg, fig_rate_links) <= 1e-3


def test_rates_monotone_in_snr(fig_rate_links):
    prev = RateReport(0, 0, 0, "quadrature", (0, 0, 0))
    for rho_db in (0, 7, 14, 21, 28, 35):
        cfg = SystemConfig.with_a2(10 ** (rho_db / 10), 0.17)
        rep = average_rates(cfg, fig_rate_links, "quadrature")
        assert rep.c_s1 >= prev.c_s1 - 1e-9
        assert rep.c_s2 >= prev.c_s2 - 1e-9
        assert rep.c_total >= prev.c_total - 1e-9
        prev = rep


def test_zero_snr_rates_are_zero(fig_rate_links):
    cfg = SystemConfig.with_a2(0.0, 0.2)
    rep = average_rates(cfg, fig_rate_links, "quadrature")
    assert rep.c_s1 == 0.0 and rep.c_s2 == 0.0
    repc = average_rates(cfg, fig_rate_links, "closed-form")
    assert repc.c_s1 == 0.0 and repc.c_s2 == 0.0


def test_closed_form_needs_integer_alpha(cfg_20db):
    links = LinkTriple.uniform(2.5, 1, 10, 1, 10)
    with pytest.raises(DomainError, match="quadrature"):
        avg_rate_s1(cfg_20db, links)
    # the quadrature backend handles it fine
    assert average_rates(cfg_20db, links, "quadrature").c_total > 0


def test_rate_term_error_attribution(fig_rate_links, cfg_20db):
    # a hopeless policy: huge step, single refinement round
    policy = ContourPolicy(truncation=60.0, step=0.5, max_rounds=1)
    with pytest.raises(RateTermError) as err:
        avg_rate_s1(cfg_20db, fig_rate_links, policy)
    assert err.value.term.startswith("I")


def test_rate_report_validation():
    with pytest.raises(DomainError):
        RateReport(c_s1=1.0, c_s2=1.0, c_total=3.0, backend="quadrature", err=(0, 0, 0))
    with pytest.raises(DomainError):
        RateReport(c_s1=-0.5, c_s2=1.0, c_total=0.5, backend="quadrature", err=(0, 0, 0))


def test_avg_rate_oma_dominating_sum(fig_rate_links):
    # when the direct + second-hop sum dominates the first hop, the reference
    # rate reduces to the first hop's log moment
    with pytest.warns(UserWarning):
        links = LinkTriple.uniform(2, 1, 1.0, 1000.0, 1000.0)
    cfg = SystemConfig.with_a2(10.0, 0.2)
    est = avg_rate_oma(cfg, links, n=200_000, seed=3)
    ref = 0.5 / math.log(2) * rate_integrand_quadrature("I1", links.sr, scale_rho=10.0)
    assert abs(est.mean - ref) <= 3 * est.stderr


def test_avg_rate_oma_zero_snr(fig_rate_links):
    est = avg_rate_oma(SystemConfig.with_a2(0.0, 0.2), fig_rate_links, n=10_000, seed=1)
    assert est.mean == 0.0
