import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy import integrate, stats

from tailrisk.copula import CopulaFit, CopulaSpec
from tailrisk.data_ingest import ReturnSeries
from tailrisk.errors import AlignmentError, DataError, DomainError
from tailrisk.evt_marginals import GngParams, MarginalFit
from tailrisk.risk import (
    ES_LINK_CLAMP,
    ForecastStream,
    PortfolioSpec,
    RiskLevels,
    es_link_clamped,
    estimate_from_sample,
    evaluate_methods,
    legal_robustness,
    log_cosh,
    mcs_copula_risk,
    min_variance_weights,
    parametric_t_estimate,
    parametric_t_risk,
    portfolio_returns,
    risk_from_sample,
    score_es,
    score_rvar,
    score_var,
)

A, B = 0.01, 0.05
LEVELS = [RiskLevels(0.01, 0.025), RiskLevels(0.01, 0.05), RiskLevels(0.025, 0.05)]


def _normal_truth(a):
    q = stats.norm.ppf(a)
    return -q, stats.norm.pdf(q) / a


# -- empirical estimator ------------------------------------------------------------


def test_normal_oracle():
    x = np.random.default_rng(0).standard_normal(1_000_000)
    var, es, rvar = risk_from_sample(x, RiskLevels(A, B))
    var5, es5, _ = risk_from_sample(x, RiskLevels(B))
    v_true, e_true = _normal_truth(B)
    assert var5 == pytest.approx(v_true, abs=0.01)
    assert es5 == pytest.approx(e_true, abs=0.02)
    r_true = (B * _normal_truth(B)[1] - A * _normal_truth(A)[1]) / (B - A)
    assert r_true == pytest.approx(1.912, abs=5e-4)
    assert rvar == pytest.approx(r_true, abs=0.03)
    assert var == pytest.approx(_normal_truth(A)[0], abs=0.02)


def _trimmed_mean_loop(xs, a, b):
    n = len(xs)
    lo, hi = math.ceil(a * n), math.ceil(b * n)
    total = 0.0
    for i in range(lo, hi):
        total += xs[i]
    return -total / (hi - lo)


def test_rvar_es_combination_equals_trimmed_mean():
    rng = np.random.default_rng(1)
    for _ in range(100):
        x = rng.standard_t(4, 10_000) * rng.uniform(0.5, 2)
        est = estimate_from_sample(x, [RiskLevels(A, B)])
        combo = (B * est.es[B] - A * est.es[A]) / (B - A)
        xs = np.sort(x)
        tol = 2 * (xs[-1] - xs[0]) / x.size
        assert abs(combo - _trimmed_mean_loop(xs, A, B)) <= tol
        assert abs(est.rvar[(A, B)] - combo) <= tol


def test_small_sample_values_by_hand():
    x = np.arange(1.0, 101.0) - 50.0  # -49..50
    var, es, rvar = risk_from_sample(x, RiskLevels(0.02, 0.05))
    assert var == 48.0  # second smallest
    assert es == pytest.approx(48.5)
    assert rvar == pytest.approx(-np.mean([-47, -46, -45]))


def test_level_validation_and_sample_size():
    with pytest.raises(DomainError):
        RiskLevels(0.05, 0.01)
    with pytest.raises(DomainError):
        RiskLevels(0.0)
    with pytest.raises(DataError):
        risk_from_sample(np.zeros(50), RiskLevels(0.01))
    with pytest.raises(DataError):
        risk_from_sample(np.array([np.nan] * 200), RiskLevels(0.01))


@given(
    arrays(np.float64, st.integers(40, 400), elements=st.floats(-1e3, 1e3, allow_nan=False)),
    st.floats(0.025, 0.2),
    st.floats(0.0, 0.3),
)
def test_sandwich_property(x, a, gap):
    b = min(a + gap, 0.5)
    if x.size < 1 / a:
        return
    var_a, es_a, rvar = risk_from_sample(x, RiskLevels(a, b))
    var_b = risk_from_sample(x, RiskLevels(b))[0]
    assert var_b <= rvar <= var_a
    assert var_a <= es_a


@given(
    arrays(np.float64, 100, elements=st.floats(-10, 10, allow_nan=False)),
    st.floats(0.1, 10.0),
    st.floats(-5, 5),
)
def test_positive_homogeneity_and_translation(x, c, m):
    lv = RiskLevels(0.05, 0.2)
    base = np.array(risk_from_sample(x, lv))
    np.testing.assert_allclose(risk_from_sample(c * x, lv), c * base, rtol=1e-9, atol=1e-9)
    np.testing.assert_allclose(risk_from_sample(x + m, lv), base - m, rtol=1e-9, atol=1e-8)


# -- parametric t -----------------------------------------------------------------


def test_t_var_known_value():
    var, _, _ = parametric_t_risk(0.0, 1.0, 5.0, RiskLevels(0.05))
    assert var == pytest.approx(-stats.t.ppf(0.05, 5) * math.sqrt(3 / 5), rel=1e-12)
    assert var == pytest.approx(1.56085, abs=1e-5)


@pytest.mark.parametrize("nu", [2.5, 4.0, 10.0])
def test_t_es_matches_quadrature(nu):
    s = math.sqrt((nu - 2) / nu)
    q = stats.t.ppf(A, nu)
    num = integrate.quad(lambda z: z * stats.t.pdf(z, nu), -np.inf, q)[0] / A
    _, es, _ = parametric_t_risk(0.0, 1.0, nu, RiskLevels(A))
    assert es == pytest.approx(-s * num, rel=1e-7)
    _, _, rv = parametric_t_risk(0.0, 1.0, nu, RiskLevels(A, B))
    qb = stats.t.ppf(B, nu)
    band = integrate.quad(lambda z: z * stats.t.pdf(z, nu), q, qb)[0] / (B - A)
    assert rv == pytest.approx(-s * band, rel=1e-7)


def test_t_location_scale_and_normal_limit():
    lv = RiskLevels(A, B)
    base = np.array(parametric_t_risk(0.0, 1.0, 6.0, lv))
    np.testing.assert_allclose(parametric_t_risk(0.3, 2.0, 6.0, lv), 2 * base - 0.3, rtol=1e-12)
    big = parametric_t_risk(0.0, 1.0, 1e7, RiskLevels(B))
    assert big[0] == pytest.approx(_normal_truth(B)[0], rel=1e-5)
    assert big[1] == pytest.approx(_normal_truth(B)[1], rel=1e-5)


def test_t_estimate_consistent_with_single_level_call():
    est = parametric_t_estimate(0.001, 0.02, 5.0, LEVELS)
    for lv in LEVELS:
        v, e, r = parametric_t_risk(0.001, 0.02, 5.0, lv)
        assert est.var[lv.alpha] == pytest.approx(v)
        assert est.es[lv.alpha] == pytest.approx(e)
        assert est.rvar[(lv.alpha, lv.beta)] == pytest.approx(r)


def test_t_rejects_infinite_variance():
    with pytest.raises(DomainError):
        parametric_t_risk(0, 1, 2.0, RiskLevels(A))
    with pytest.raises(DomainError):
        parametric_t_risk(0, 0, 5.0, RiskLevels(A))


# -- scoring functions ---------------------------------------------------------


def test_var_score_minimized_at_empirical_quantile():
    rng = np.random.default_rng(3)
    for _ in range(20):
        x = rng.standard_normal(1000)
        xs = np.sort(x)
        grid = -xs[:60]  # candidates at the order statistics
        scores = [score_var(x, v, B).mean() for v in grid]
        k = int(np.argmin(scores))
        assert abs(k + 1 - math.ceil(B * x.size)) <= 1


def test_joint_var_es_score_minimized_near_truth():
    x = np.random.default_rng(4).standard_normal(100_000)
    v0, e0 = _normal_truth(A)
    step = 0.05
    V = v0 + step * np.arange(-6, 7)
    E = e0 + step * np.arange(-6, 7)
    s = np.array([[score_es(x, v, e, A).mean() for e in E] for v in V])
    i, j = np.unravel_index(np.argmin(s), s.shape)
    assert abs(V[i] - v0) <= step and abs(E[j] - e0) <= step


def test_triplet_score_minimized_near_truth():
    x = np.random.default_rng(5).standard_normal(100_000)
    va, _ = _normal_truth(A)
    vb, _ = _normal_truth(B)
    r0 = (B * _normal_truth(B)[1] - A * _normal_truth(A)[1]) / (B - A)
    step = 0.05
    off = step * np.arange(-4, 5)
    best, arg = np.inf, None
    for da in off:
        for db in off:
            for dr in off:
                val = score_rvar(x, va + da, vb + db, r0 + dr, A, B).mean()
                if val < best:
                    best, arg = val, (da, db, dr)
    assert all(abs(d) <= step for d in arg)


def test_es_score_reference_value():
    assert float(score_es(0.0, 0.0, 0.0, 0.05)) == pytest.approx(-math.log1p(-0.05))


def test_es_link_clamp():
    big = 10 * ES_LINK_CLAMP
    assert np.isfinite(score_es(-1.0, 1.0, big, A))
    assert es_link_clamped([1.0, big]).tolist() == [False, True]


def test_log_cosh_stable():
    a = np.array([-1e4, -3.0, 0.0, 2.0, 1e4])
    np.testing.assert_allclose(log_cosh(a[1:4]), np.log(np.cosh(a[1:4])), rtol=1e-12, atol=1e-15)
    assert log_cosh(1e4) == pytest.approx(1e4 - math.log(2))
    with pytest.raises(DomainError):
        score_rvar(0.0, 1.0, 1.0, 1.0, 0.05, 0.05)


def test_correct_model_wins_var_tournament():
    wins = 0
    nu = 4.0
    for seed in range(20):
        rng = np.random.default_rng(100 + seed)
        x = rng.standard_t(nu, 5000) * math.sqrt((nu - 2) / nu)
        right = parametric_t_risk(0.0, 1.0, nu, RiskLevels(A))[0]
        normal = _normal_truth(A)[0]
        wins += score_var(x, right, A).mean() < score_var(x, normal, A).mean()
    assert wins >= 16


# -- legal robustness ------------------------------------------------------------


def test_legal_robustness_values():
    assert legal_robustness([2.0, 2.0, 2.0]) == 0.0
    assert legal_robustness([1.0, 3.0]) == 0.5
    with pytest.raises(DomainError):
        legal_robustness([-1.0, 0.5])
    with pytest.raises(DataError):
        legal_robustness([1.0])


def test_legal_robustness_scale_invariant():
    rng = np.random.default_rng(6)
    for _ in range(100):
        x = rng.uniform(0.1, 5.0, rng.integers(2, 8))
        c = rng.uniform(0.01, 100)
        assert legal_robustness(c * x) == pytest.approx(legal_robustness(x), rel=1e-12)


# -- portfolios and Monte Carlo -----------------------------------------------------


def _series(name, x, start="2020-01-01"):
    return ReturnSeries(name, np.datetime64(start) + np.arange(len(x)), x)


def test_portfolio_returns_and_alignment():
    a = _series("A", np.array([0.01, -0.02, 0.03]))
    b = _series("B", np.array([0.0, 0.02, -0.01]))
    spec = PortfolioSpec(("A", "B"), (0.25, 0.75))
    np.testing.assert_allclose(portfolio_returns(a, b, spec).values, 0.25 * a.values + 0.75 * b.values)
    with pytest.raises(AlignmentError):
        portfolio_returns(a, _series("B", b.values, "2020-01-02"), spec)
    with pytest.raises(DomainError):
        PortfolioSpec(("A", "B"), (0.6, 0.6))


def test_min_variance_weights():
    rng = np.random.default_rng(7)
    cov = np.array([[4.0, 1.0], [1.0, 1.0]])
    z = rng.multivariate_normal([0, 0], cov, 200_000)
    w, w2 = min_variance_weights(z[:, 0], z[:, 1])
    exact = (1.0 - 1.0) / (4.0 + 1.0 - 2.0)
    assert w == pytest.approx(exact, abs=0.01) and w + w2 == 1.0
    best = min(np.linspace(0, 1, 101), key=lambda v: np.var(v * z[:, 0] + (1 - v) * z[:, 1]))
    assert abs(best - w) <= 0.011
    assert min_variance_weights(np.ones(10), np.ones(10)) == (0.5, 0.5)


def _mcs_inputs(theta):
    g = GngParams.continuous(0.05, 0.9, -1.3, 0.3, 1.3, 0.3, 0.1, 0.1)
    fits = [MarginalFit("GNG", g, 0.0, 0.0), MarginalFit("GNG", g, 0.0, 0.0)]
    cop = CopulaFit(CopulaSpec("Gumbel", theta), 0.0, {}, 0)
    return fits, cop


def test_mcs_is_seeded_and_satisfies_sandwich():
    fits, cop = _mcs_inputs(2.0)
    spec = PortfolioSpec(("A", "B"), (0.5, 0.5))
    fc = [(0.0, 0.02), (0.0, 0.01)]
    e1 = mcs_copula_risk(fits, fc, cop, spec, LEVELS, n_sim=20_000, seed=3)
    e2 = mcs_copula_risk(fits, fc, cop, spec, LEVELS, n_sim=20_000, seed=3)
    assert e1 == e2
    assert e1.method == "MCS-Gumbel"
    for lv in LEVELS:
        a, b = lv.alpha, lv.beta
        assert e1.var[b] <= e1.rvar[(a, b)] <= e1.var[a] <= e1.es[a]
    with pytest.raises(DataError):
        mcs_copula_risk(fits, fc, cop, spec, LEVELS, n_sim=5000)


def test_mcs_dependence_raises_risk():
    spec = PortfolioSpec(("A", "B"), (0.5, 0.5))
    fc = [(0.0, 0.02), (0.0, 0.02)]
    f1, c1 = _mcs_inputs(1.0)
    f4, c4 = _mcs_inputs(4.0)
    indep = mcs_copula_risk(f1, fc, c1, spec, LEVELS, n_sim=50_000, seed=1)
    strong = mcs_copula_risk(f4, fc, c4, spec, LEVELS, n_sim=50_000, seed=1)
    # diversification: the independent portfolio is less risky than the nearly comonotone one
    assert indep.var[0.01] < strong.var[0.01]
    # and both are bounded by the undiversified single-asset VaR
    single = -0.02 * float(f1[0].quantile(0.01))
    assert strong.var[0.01] <= single * 1.02


# -- evaluation -------------------------------------------------------------------


def _stream(method, dates, est):
    return ForecastStream(method, dates, [est] * len(dates))


def test_evaluate_identical_forecasts():
    rng = np.random.default_rng(8)
    x = rng.standard_normal(400) * 0.01
    realized = _series("P", x)
    est = estimate_from_sample(rng.standard_normal(5000) * 0.01, LEVELS)
    streams = [_stream("HS", realized.dates, est), _stream("MCS-Frank", realized.dates, est)]
    reports, lr = evaluate_methods(realized, streams, LEVELS)
    assert reports["HS"].s_var == reports["MCS-Frank"].s_var
    assert reports["HS"].s_rvar == reports["MCS-Frank"].s_rvar
    assert all(v == 0.0 for v in lr.values())
    assert reports["HS"].s_var[0.05] == pytest.approx(score_var(x, est.var[0.05], 0.05).mean())
    assert set(reports["HS"].s_rvar) == {(lv.alpha, lv.beta) for lv in LEVELS}


def test_evaluate_requires_alignment():
    x = np.zeros(10)
    realized = _series("P", x)
    est = estimate_from_sample(np.random.default_rng(0).standard_normal(500), LEVELS)
    with pytest.raises(AlignmentError):
        evaluate_methods(realized, [_stream("HS", realized.dates[:-1], est)], LEVELS)
