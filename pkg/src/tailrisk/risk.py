"""VaR, ES and RVaR estimators, their scoring functions, and legal robustness.

Sign convention: every input is a *return* (gains positive).  Reported risk
numbers are loss magnitudes, so ``VaR = -q_alpha`` where ``q_alpha`` is the
lower alpha-quantile of returns, ``ES`` is minus the average return over the
lower alpha tail and ``RVaR`` is minus the average over the (alpha, beta) band.
The scoring functions evaluate on the return scale, i.e. they are fed
``-VaR``, ``-ES`` and ``-RVaR``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import stats

from .copula import CopulaFit, conditional_sample
from .data_ingest import ReturnSeries
from .errors import AlignmentError, DataError, DomainError
from .evt_marginals import PIT_EPS, MarginalFit

METHODS = ("HS", "ParametricT", "MCS-Frank", "MCS-Gumbel", "MCS-Joe", "MCS-StudentT")
ES_LINK_CLAMP = 50.0


@dataclass(frozen=True)
class RiskLevels:
    alpha: float
    beta: float | None = None

    def __post_init__(self):
        a, b = self.alpha, self.beta
        if not 0.0 < a < 1.0:
            raise DomainError(f"alpha must lie in (0, 1), got {a}")
        if b is not None and not a <= b < 1.0:
            raise DomainError(f"need alpha <= beta < 1, got ({a}, {b})")

    @property
    def upper(self) -> float:
        return self.alpha if self.beta is None else self.beta


DEFAULT_ALPHAS = (0.01, 0.025, 0.05)
DEFAULT_PAIRS = ((0.01, 0.025), (0.01, 0.05), (0.025, 0.05))


def default_levels() -> list[RiskLevels]:
    return [RiskLevels(a, b) for a, b in DEFAULT_PAIRS]


@dataclass(frozen=True)
class PortfolioSpec:
    asset_ids: tuple
    weights: tuple

    def __post_init__(self):
        if len(self.asset_ids) != 2 or len(self.weights) != 2:
            raise DomainError("portfolios hold exactly two assets")
        w = tuple(float(x) for x in self.weights)
        if any(not 0.0 <= x <= 1.0 for x in w) or abs(sum(w) - 1.0) > 1e-12:
            raise DomainError(f"weights must lie in [0, 1] and sum to 1, got {w}")
        object.__setattr__(self, "asset_ids", tuple(self.asset_ids))
        object.__setattr__(self, "weights", w)

    @property
    def label(self) -> str:
        return "-".join(self.asset_ids)


@dataclass
class RiskEstimate:
    method: str
    var: dict  # alpha -> VaR
    es: dict  # alpha -> ES
    rvar: dict  # (alpha, beta) -> RVaR
    sample_size: int

    def value(self, measure: str, level):
        return {"VaR": self.var, "ES": self.es, "RVaR": self.rvar}[measure][level]


@dataclass
class ScoreReport:
    method: str
    s_var: dict
    s_es: dict
    s_rvar: dict
    n_obs: int
    n_clamped: int = 0


# ---------------------------------------------------------------------------
# portfolios


def portfolio_returns(a: ReturnSeries, b: ReturnSeries, spec: PortfolioSpec) -> ReturnSeries:
    if len(a) != len(b):
        raise AlignmentError(f"return series lengths differ: {len(a)} vs {len(b)}")
    if not np.array_equal(a.dates, b.dates):
        raise AlignmentError("return series are not on the same calendar")
    w1, w2 = spec.weights
    return ReturnSeries(spec.label, a.dates, w1 * a.values + w2 * b.values)


def min_variance_weights(a, b) -> tuple[float, float]:
    """Long-only minimum-variance weights, equal weights when degenerate."""
    x = np.asarray(getattr(a, "values", a), dtype=float)
    y = np.asarray(getattr(b, "values", b), dtype=float)
    c = np.cov(x, y)
    den = c[0, 0] + c[1, 1] - 2.0 * c[0, 1]
    if not np.isfinite(den) or den <= 1e-300:
        return 0.5, 0.5
    w = float(np.clip((c[1, 1] - c[0, 1]) / den, 0.0, 1.0))
    return w, 1.0 - w


# ---------------------------------------------------------------------------
# empirical estimator


def _tail_integral(xs: np.ndarray, p: float) -> float:
    """Integral of the empirical quantile function over (0, p) for sorted ``xs``."""
    n = xs.size
    k = _order_index(n, p)
    partial = float(np.sum(xs[: k - 1])) / n
    return partial + (p - (k - 1) / n) * float(xs[k - 1])


def _order_index(n: int, p: float) -> int:
    # ceil(p n) with a guard against p*n landing a hair above an integer
    k = math.ceil(p * n - 1e-9 * max(1.0, p * n))
    return min(max(k, 1), n)


def _var_es_rvar(xs: np.ndarray, a: float, b: float | None):
    n = xs.size
    var_a = -float(xs[_order_index(n, a) - 1])
    ia = _tail_integral(xs, a)
    es_a = max(-ia / a, var_a)
    if b is None or b == a:
        return var_a, es_a, var_a
    var_b = -float(xs[_order_index(n, b) - 1])
    ib = _tail_integral(xs, b)
    rvar = -(ib - ia) / (b - a)
    # rounding guard only: the band average lies between the two quantiles
    return var_a, es_a, float(min(max(rvar, var_b), var_a))


def _check_sample(x: np.ndarray, alpha: float) -> None:
    if x.ndim != 1 or not np.all(np.isfinite(x)):
        raise DataError("risk sample must be a finite 1-D vector")
    if x.size < 1.0 / alpha:
        raise DataError(f"need at least 1/alpha = {1.0 / alpha:.0f} observations, got {x.size}")


def risk_from_sample(sample, levels: RiskLevels) -> tuple[float, float, float]:
    """(VaR^alpha, ES^alpha, RVaR^{alpha,beta}) of a return sample."""
    x = np.asarray(getattr(sample, "values", sample), dtype=float)
    _check_sample(x, levels.alpha)
    return _var_es_rvar(np.sort(x), levels.alpha, levels.beta)


def _level_sets(levels: Sequence[RiskLevels]):
    alphas = sorted({lv.alpha for lv in levels} | {lv.beta for lv in levels if lv.beta is not None})
    pairs = [(lv.alpha, lv.beta) for lv in levels if lv.beta is not None]
    return alphas, pairs


def estimate_from_sorted(xs: np.ndarray, levels: Sequence[RiskLevels], method: str) -> RiskEstimate:
    alphas, pairs = _level_sets(levels)
    var, es = {}, {}
    for a in alphas:
        v, e, _ = _var_es_rvar(xs, a, None)
        var[a], es[a] = v, e
    rvar = {(a, b): _var_es_rvar(xs, a, b)[2] for a, b in pairs}
    return RiskEstimate(method, var, es, rvar, int(xs.size))


def estimate_from_sample(sample, levels: Sequence[RiskLevels], method: str = "HS") -> RiskEstimate:
    x = np.asarray(getattr(sample, "values", sample), dtype=float)
    _check_sample(x, min(lv.alpha for lv in levels))
    return estimate_from_sorted(np.sort(x), levels, method)


# ---------------------------------------------------------------------------
# parametric Student-t


def _t_var_es(mu: float, sigma: float, nu: float, a: float) -> tuple[float, float]:
    s = math.sqrt((nu - 2.0) / nu)
    q = float(stats.t.ppf(a, nu))
    tail_mean = -(nu + q * q) / (nu - 1.0) * float(stats.t.pdf(q, nu)) / a
    var = -(mu + sigma * s * q)
    es = -(mu + sigma * s * tail_mean)
    return var, max(es, var)


def _check_t(sigma: float, nu: float) -> None:
    if not nu > 2.0:
        raise DomainError(f"Student-t risk needs nu > 2, got {nu}")
    if not sigma > 0.0:
        raise DomainError(f"sigma must be positive, got {sigma}")


def parametric_t_risk(mu: float, sigma: float, nu: float, levels: RiskLevels) -> tuple[float, float, float]:
    """Closed-form risk of ``mu + sigma * Z`` with Z a unit-variance Student-t."""
    _check_t(sigma, nu)
    var_a, es_a = _t_var_es(mu, sigma, nu, levels.alpha)
    b = levels.beta
    if b is None or b == levels.alpha:
        return var_a, es_a, var_a
    var_b, es_b = _t_var_es(mu, sigma, nu, b)
    rvar = (b * es_b - levels.alpha * es_a) / (b - levels.alpha)
    return var_a, es_a, float(min(max(rvar, var_b), var_a))


def parametric_t_estimate(mu, sigma, nu, levels: Sequence[RiskLevels], method: str = "ParametricT") -> RiskEstimate:
    _check_t(sigma, nu)
    alphas, pairs = _level_sets(levels)
    var, es = {}, {}
    for a in alphas:
        var[a], es[a] = _t_var_es(mu, sigma, nu, a)
    rvar = {}
    for a, b in pairs:
        r = (b * es[b] - a * es[a]) / (b - a) if b != a else var[a]
        rvar[(a, b)] = float(min(max(r, var[b]), var[a]))
    return RiskEstimate(method, var, es, rvar, 0)


# ---------------------------------------------------------------------------
# copula Monte Carlo


def mcs_standardized_draws(marginal_fits: Sequence[MarginalFit], copula: CopulaFit, n_sim: int, seed) -> np.ndarray:
    """Copula draws mapped to standardized residuals through the marginal quantiles."""
    u = conditional_sample(copula.spec, n_sim, seed)
    u = np.clip(u, PIT_EPS, 1.0 - PIT_EPS)
    z = np.empty_like(u)
    for j in range(2):
        z[:, j] = marginal_fits[j].quantile(u[:, j])
    return z


def risk_from_draws(
    z: np.ndarray,
    garch_forecasts: Sequence[tuple],
    spec: PortfolioSpec,
    levels: Sequence[RiskLevels],
    method: str,
) -> RiskEstimate:
    (m1, s1), (m2, s2) = garch_forecasts
    w1, w2 = spec.weights
    rp = w1 * (m1 + s1 * z[:, 0]) + w2 * (m2 + s2 * z[:, 1])
    return estimate_from_sorted(np.sort(rp), levels, method)


def mcs_copula_risk(
    marginal_fits: Sequence[MarginalFit],
    garch_forecasts: Sequence[tuple],
    copula: CopulaFit,
    spec: PortfolioSpec,
    levels: Sequence[RiskLevels],
    n_sim: int = 10_000,
    seed=0,
) -> RiskEstimate:
    if isinstance(levels, RiskLevels):
        levels = [levels]
    min_alpha = min(lv.alpha for lv in levels)
    if n_sim < 100.0 / min_alpha:
        raise DataError(f"n_sim must be at least 100/alpha = {100.0 / min_alpha:.0f}")
    z = mcs_standardized_draws(marginal_fits, copula, n_sim, seed)
    return risk_from_draws(z, garch_forecasts, spec, levels, f"MCS-{copula.spec.family}")


# ---------------------------------------------------------------------------
# scoring functions


def _pinball(x, y, alpha):
    d = x - y
    return alpha * np.maximum(d, 0.0) + (1.0 - alpha) * np.maximum(-d, 0.0)


def score_var(realized, forecast_var, alpha: float):
    """Quantile score of the return-scale forecast ``y = -VaR``."""
    x = np.asarray(realized, dtype=float)
    y = -np.asarray(forecast_var, dtype=float)
    return _pinball(x, y, alpha)


def es_link_clamped(es_forecast) -> np.ndarray:
    return np.abs(np.asarray(es_forecast, dtype=float)) > ES_LINK_CLAMP


def score_es(realized, var_forecast, es_forecast, alpha: float):
    """Joint (VaR, ES) score with an exponential link on the ES argument.

    The ES argument is clamped to ``|z| <= ES_LINK_CLAMP``; use
    :func:`es_link_clamped` to count affected evaluations.
    """
    x = np.asarray(realized, dtype=float)
    y = -np.asarray(var_forecast, dtype=float)
    z = np.clip(-np.asarray(es_forecast, dtype=float), -ES_LINK_CLAMP, ES_LINK_CLAMP)
    hit = (x < y).astype(float)
    ez = np.exp(z)
    return y * (hit - alpha) - x * hit + ez * (z - y + hit / alpha * (y - x)) - ez + 1.0 - math.log1p(-alpha)


def log_cosh(a):
    """``log(cosh(a))`` without overflow for large ``|a|``."""
    a = np.abs(np.asarray(a, dtype=float))
    return a + np.log1p(np.exp(-2.0 * a)) - math.log(2.0)


def score_rvar(realized, var_alpha, var_beta, rvar, alpha: float, beta: float):
    """Joint (VaR^alpha, VaR^beta, RVaR) score in tanh / log-cosh form."""
    if not alpha < beta:
        raise DomainError("RVaR score needs alpha < beta")
    x = np.asarray(realized, dtype=float)
    y = -np.asarray(var_alpha, dtype=float)
    z = -np.asarray(var_beta, dtype=float)
    w = -np.asarray(rvar, dtype=float)
    d = beta - alpha
    hy = (x < y).astype(float)
    hz = (x < z).astype(float)
    bracket = w + (_pinball(x, z, beta) - _pinball(x, y, alpha)) / d
    return (
        y * (hy - alpha)
        - x * hy
        + z * (hz - beta)
        - x * hz
        + d * np.tanh(d * w) * bracket
        - log_cosh(-d * w)
        + 1.0
        - math.log1p(-alpha)
    )


# ---------------------------------------------------------------------------
# legal robustness and backtest evaluation


def legal_robustness(estimates) -> float:
    """Mean absolute deviation of the estimates relative to their mean."""
    x = np.asarray(estimates, dtype=float)
    if x.ndim != 1 or x.size < 2 or not np.all(np.isfinite(x)):
        raise DataError("legal robustness needs at least two finite estimates")
    m = float(np.mean(x))
    if not m > 0.0:
        raise DomainError("legal robustness is undefined for a non-positive mean estimate")
    return float(np.mean(np.abs(x - m)) / m)


@dataclass
class ForecastStream:
    method: str
    dates: np.ndarray
    estimates: list = field(default_factory=list)


def evaluate_methods(
    realized: ReturnSeries,
    streams: Sequence[ForecastStream],
    levels: Sequence[RiskLevels],
) -> tuple[dict, dict]:
    """Average scores per method and date-averaged legal robustness per measure/level."""
    if not streams:
        raise DataError("no forecast streams to evaluate")
    x = realized.values
    for s in streams:
        if len(s.estimates) != x.size or not np.array_equal(np.asarray(s.dates, dtype="datetime64[D]"), realized.dates):
            raise AlignmentError(f"forecast stream {s.method} is not aligned with the realized returns")
    alphas, pairs = _level_sets(levels)
    reports = {}
    keys = [("VaR", a) for a in alphas] + [("ES", a) for a in alphas] + [("RVaR", p) for p in pairs]
    values = {}
    for s in streams:
        cols = {k: np.array([e.value(*k) for e in s.estimates]) for k in keys}
        values[s.method] = cols
        s_var = {a: float(np.mean(score_var(x, cols[("VaR", a)], a))) for a in alphas}
        s_es = {a: float(np.mean(score_es(x, cols[("VaR", a)], cols[("ES", a)], a))) for a in alphas}
        s_rvar = {
            (a, b): float(np.mean(score_rvar(x, cols[("VaR", a)], cols[("VaR", b)], cols[("RVaR", (a, b))], a, b)))
            for a, b in pairs
            if a < b
        }
        clamped = int(sum(np.sum(es_link_clamped(cols[("ES", a)])) for a in alphas))
        reports[s.method] = ScoreReport(s.method, s_var, s_es, s_rvar, int(x.size), clamped)
    lr = {}
    if len(streams) >= 2:
        for k in keys:
            mat = np.column_stack([values[s.method][k] for s in streams])
            lr[k] = float(np.mean([legal_robustness(row) for row in mat]))
    return reports, lr
