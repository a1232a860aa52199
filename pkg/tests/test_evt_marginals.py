import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate, optimize, stats

from tailrisk.errors import DataError, DomainError
from tailrisk.evt_marginals import (
    BITCOIN_BATS,
    BatsParams,
    CauchyParams,
    GngParams,
    MarginalFit,
    compare_marginals,
    fit_marginal,
    gof_statistics,
    loglik_at,
    marginal_cdf,
    marginal_pdf,
    marginal_quantile,
    pit_transform,
    softplus,
    softplus_inv,
)

GNG = GngParams.continuous(0.05, 0.9, -1.2, 0.25, 1.1, 0.15, 0.1, 0.09)
CAUCHY = CauchyParams(0.3, 1.7)
FAMILY_PARAMS = [("BATs", BITCOIN_BATS), ("GNG", GNG), ("Cauchy", CAUCHY)]


# -- softplus -----------------------------------------------------------------


@given(st.floats(-700, 700))
def test_softplus_inverse_round_trip(x):
    y = softplus(np.array(x))
    if y > 0:
        back = softplus_inv(y)
        assert back == pytest.approx(x, rel=1e-9, abs=1e-9 if x > -30 else abs(x))


def test_softplus_is_overflow_safe():
    assert softplus(np.array(1000.0)) == pytest.approx(1000.0)
    assert softplus(np.array(-1000.0)) >= 0.0


# -- Cauchy -------------------------------------------------------------------


def test_cauchy_closed_forms():
    c = CauchyParams(2.0, 3.0)
    assert marginal_cdf("Cauchy", c, 2.0) == pytest.approx(0.5)
    assert marginal_cdf("Cauchy", c, 5.0) == pytest.approx(0.75)
    assert marginal_pdf("Cauchy", c, 2.0) == pytest.approx(1.0 / (math.pi * 3.0))
    assert marginal_quantile("Cauchy", c, 0.5) == pytest.approx(2.0)
    x = np.linspace(-20, 20, 41)
    np.testing.assert_allclose(c.cdf(x), stats.cauchy.cdf(x, 2.0, 3.0), rtol=1e-12)


# -- BATs -----------------------------------------------------------------------


def test_bats_cdf_half_where_h_vanishes():
    x0 = optimize.brentq(lambda x: float(BITCOIN_BATS.h(x)), -5, 5, xtol=1e-14)
    assert float(BITCOIN_BATS.cdf(x0)) == pytest.approx(0.5, abs=1e-12)
    assert float(BITCOIN_BATS.quantile(0.5)) == pytest.approx(x0, abs=1e-9)


def test_bats_bitcoin_tail_probabilities():
    assert float(BITCOIN_BATS.cdf(-10.0)) < 1e-3
    assert float(BITCOIN_BATS.cdf(10.0)) > 0.999


def test_bats_pdf_integrates_to_one():
    total = integrate.quad(lambda x: float(BITCOIN_BATS.pdf(x)), -np.inf, np.inf, limit=400)[0]
    assert total == pytest.approx(1.0, abs=1e-4)


def test_bats_kappa_zero_limit():
    p = BatsParams(1e-8, 0.6, -0.3, 1e-8, 0.8, 0.2, 4.0)
    x = np.linspace(-4, 4, 401)
    np.testing.assert_allclose(p.cdf(x), stats.t.cdf(p.h_limit(x), 4.0), atol=1e-6)
    np.testing.assert_allclose(p.h(x), p.h_limit(x), rtol=1e-6, atol=1e-9)


def test_bats_bounded_upper_support():
    p = BatsParams(0.2, 0.5, -0.2, -0.3, 0.5, 0.2, 3.0)
    lo, hi = p.support()
    assert lo == -math.inf
    assert hi == pytest.approx(0.2 + 0.5 * float(softplus_inv(1 / 0.3)))
    assert float(p.cdf(hi - 0.05)) < 1.0
    assert float(p.cdf(hi + 0.5)) == 1.0
    assert float(p.pdf(hi + 0.5)) == 0.0


def test_bats_rejects_bad_params():
    with pytest.raises(DomainError):
        BatsParams(0.1, -1.0, 0.0, 0.1, 1.0, 0.0, 3.0)
    with pytest.raises(DomainError):
        BatsParams(0.1, 1.0, 0.0, 0.1, 1.0, 0.0, 0.0)


def test_bats_flags_monotone_transform():
    assert BITCOIN_BATS.h_is_monotone()


# -- GNG ------------------------------------------------------------------------


def test_gng_is_continuous_at_thresholds():
    for u in (GNG.u_lo, GNG.u_hi):
        left, right = GNG.cdf(u - 1e-10), GNG.cdf(u + 1e-10)
        assert float(right - left) == pytest.approx(0.0, abs=1e-9)
        assert float(GNG.pdf(u - 1e-9)) == pytest.approx(float(GNG.pdf(u + 1e-9)), rel=1e-6)


def test_gng_tail_masses():
    assert float(GNG.cdf(GNG.u_lo)) == pytest.approx(GNG.phi_lo, abs=1e-12)
    assert 1 - float(GNG.cdf(GNG.u_hi)) == pytest.approx(GNG.phi_hi, abs=1e-12)


def test_gng_matches_gpd_oracle_in_upper_tail():
    x = np.linspace(GNG.u_hi, GNG.u_hi + 6, 20)
    ref = 1 - GNG.phi_hi * stats.genpareto.sf(x - GNG.u_hi, GNG.xi_hi, scale=GNG.alpha_hi)
    np.testing.assert_allclose(GNG.cdf(x), ref, rtol=1e-12)


# -- all families -----------------------------------------------------------------


@pytest.mark.parametrize("family,params", FAMILY_PARAMS)
def test_pdf_matches_cdf_derivative(family, params):
    rng = np.random.default_rng(1)
    x = params.quantile(rng.uniform(0.02, 0.98, 100))
    h = 1e-5
    fd = (params.cdf(x + h) - params.cdf(x - h)) / (2 * h)
    np.testing.assert_allclose(params.pdf(x), fd, rtol=1e-6)


@pytest.mark.parametrize("family,params", FAMILY_PARAMS)
def test_quantile_round_trip(family, params):
    p = np.linspace(1e-6, 1 - 1e-6, 501)
    q = marginal_quantile(family, params, p)
    np.testing.assert_allclose(marginal_cdf(family, params, q), p, atol=1e-10)
    assert np.all(np.diff(q) > 0)
    x = np.random.default_rng(2).uniform(-4, 4, 200)
    np.testing.assert_allclose(params.quantile(params.cdf(x)), x, atol=1e-8)


@pytest.mark.parametrize("family,params", FAMILY_PARAMS)
def test_cdf_nondecreasing_and_bounded(family, params):
    x = np.linspace(-60, 60, 10_001)
    c = marginal_cdf(family, params, x)
    assert np.all(np.diff(c) >= 0)
    assert c.min() >= 0 and c.max() <= 1
    assert np.all(marginal_pdf(family, params, x) >= 0)


def test_quantile_rejects_out_of_range():
    with pytest.raises(DomainError):
        marginal_quantile("Cauchy", CAUCHY, [0.0, 0.5])
    with pytest.raises(DomainError):
        marginal_cdf("BATs", CAUCHY, 0.0)


@given(
    st.floats(-0.5, 1.0),
    st.floats(0.2, 2.0),
    st.floats(-1, 1),
    st.floats(-0.5, 1.0),
    st.floats(0.2, 2.0),
    st.floats(-1, 1),
    st.floats(0.5, 30),
)
def test_bats_cdf_monotone_property(k0, t0, f0, k1, t1, f1, nu):
    try:
        p = BatsParams(k0, t0, f0, k1, t1, f1, nu)
    except DomainError:
        return
    lo, hi = p.support()
    a = max(lo, -30.0) if np.isfinite(lo) else -30.0
    b = min(hi, 30.0) if np.isfinite(hi) else 30.0
    x = np.linspace(a, b, 400)[1:-1]
    c = p.cdf(x)
    assert np.all(np.diff(c) >= 0)
    assert np.all((c >= 0) & (c <= 1))


# -- goodness of fit --------------------------------------------------------------


def test_gof_statistics_oracle():
    u = np.sort(np.random.default_rng(3).uniform(size=300))
    w2, a2 = gof_statistics(u)
    ref_w2 = stats.cramervonmises(u, "uniform").statistic
    assert w2 == pytest.approx(ref_w2, rel=1e-10)
    n = u.size
    i = np.arange(1, n + 1)
    direct = -n - np.mean((2 * i - 1) * (np.log(u) + np.log(1 - u[::-1])))
    assert a2 == pytest.approx(direct, rel=1e-12)


# -- fitting ----------------------------------------------------------------------


def test_fit_cauchy_recovery():
    x = stats.cauchy.rvs(size=5000, random_state=4)
    fit = fit_marginal(x, "Cauchy", n_bootstrap=0)
    assert -0.1 <= fit.params.x0 <= 0.1
    assert 0.9 <= fit.params.delta <= 1.1
    assert fit.bic == pytest.approx(-2 * fit.loglik + 2 * math.log(5000))


def test_fit_bats_reaches_true_likelihood():
    u = np.random.default_rng(5).uniform(size=5000)
    x = BITCOIN_BATS.quantile(u)
    fit = fit_marginal(x, "BATs", n_bootstrap=0)
    assert fit.loglik >= loglik_at("BATs", BITCOIN_BATS, x) - 5.0
    assert fit.bic == pytest.approx(-2 * fit.loglik + 7 * math.log(5000))


def test_bats_beats_cauchy_on_finite_variance_tails():
    wins = 0
    seeds = range(10)
    for s in seeds:
        x = stats.t.rvs(5, size=1500, random_state=s)
        bats = fit_marginal(x, "BATs", n_bootstrap=0, n_starts=3)
        cau = fit_marginal(x, "Cauchy", n_bootstrap=0)
        wins += bats.bic < cau.bic
    assert wins >= 0.9 * len(seeds)


def test_compare_marginals_ranks_by_bic_and_is_deterministic():
    x = stats.t.rvs(4, size=800, random_state=6)
    ranked = compare_marginals(x, ["Cauchy", "GNG", "BATs"], n_bootstrap=9, n_starts=2, seed=1)
    bics = [f.bic for f in ranked]
    assert bics == sorted(bics)
    assert ranked[-1].family == "Cauchy"
    again = compare_marginals(x, ["Cauchy", "GNG", "BATs"], n_bootstrap=9, n_starts=2, seed=1)
    assert [f.to_dict() for f in ranked] == [f.to_dict() for f in again]
    single = compare_marginals(x, ["Cauchy"], n_bootstrap=0)
    assert len(single) == 1


def test_bootstrap_p_values_in_unit_interval():
    x = stats.t.rvs(4, size=400, random_state=7)
    fit = fit_marginal(x, "GNG", n_bootstrap=19, n_starts=2, seed=2)
    for _, p in (fit.cvm, fit.ad):
        assert 0 < p <= 1
    back = MarginalFit.from_dict(fit.to_dict())
    assert back.params == fit.params


def test_fit_rejects_degenerate_data():
    with pytest.raises(DataError):
        fit_marginal(np.ones(200), "Cauchy")
    with pytest.raises(DataError):
        fit_marginal(np.arange(50.0), "Cauchy")


def test_pit_uniform_for_draws_from_fit():
    x = stats.t.rvs(5, size=1000, random_state=8)
    fit = fit_marginal(x, "BATs", n_bootstrap=0, n_starts=2)
    rng = np.random.default_rng(9)
    ok = 0
    for _ in range(20):
        z = fit.quantile(rng.uniform(size=500))
        u = pit_transform(z, fit)
        ok += stats.kstest(u, "uniform").pvalue > 0.05
    assert ok >= 18
    z = np.sort(x)
    u = pit_transform(z, fit)
    assert np.all(np.diff(u) >= 0)
    assert u.min() >= 1e-10 and u.max() <= 1 - 1e-10


def test_pit_median_for_symmetric_fit():
    fit = MarginalFit("Cauchy", CauchyParams(0.0, 1.0), 0.0, 0.0)
    assert float(pit_transform(np.array([0.0]), fit)[0]) == pytest.approx(0.5)
