"""Price loading, calendar alignment, log returns and the pre-modelling test battery."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats
from statsmodels.tsa.adfvalues import mackinnonp

from .errors import AlignmentError, CorrelationError, DataError, DomainError, NumericError


@dataclass(frozen=True)
class PriceSeries:
    asset_id: str
    dates: np.ndarray  # datetime64[D]
    closes: np.ndarray

    def __post_init__(self):
        dates = np.asarray(self.dates, dtype="datetime64[D]")
        closes = np.asarray(self.closes, dtype=float)
        if dates.shape != closes.shape or dates.ndim != 1:
            raise DataError(f"{self.asset_id}: dates and closes must be 1-D of equal length")
        if dates.size > 1 and not np.all(np.diff(dates) > np.timedelta64(0, "D")):
            raise DataError(f"{self.asset_id}: dates must be strictly increasing")
        if not np.all(np.isfinite(closes)) or np.any(closes <= 0):
            raise DomainError(f"{self.asset_id}: closing prices must be finite and positive")
        object.__setattr__(self, "dates", dates)
        object.__setattr__(self, "closes", closes)

    def __len__(self):
        return self.closes.size


@dataclass(frozen=True)
class ReturnSeries:
    asset_id: str
    dates: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        dates = np.asarray(self.dates, dtype="datetime64[D]")
        values = np.asarray(self.values, dtype=float)
        if dates.shape != values.shape or values.ndim != 1:
            raise DataError(f"{self.asset_id}: dates and values must be 1-D of equal length")
        if not np.all(np.isfinite(values)):
            raise DomainError(f"{self.asset_id}: returns must be finite")
        object.__setattr__(self, "dates", dates)
        object.__setattr__(self, "values", values)

    def __len__(self):
        return self.values.size

    def slice(self, start=None, stop=None) -> "ReturnSeries":
        return ReturnSeries(self.asset_id, self.dates[start:stop], self.values[start:stop])


@dataclass
class DiagnosticsReport:
    mean: float
    std: float
    skewness: float
    kurtosis: float
    jarque_bera: tuple = field(default=(math.nan, math.nan))
    adf: tuple = field(default=(math.nan, math.nan))
    pp: tuple = field(default=(math.nan, math.nan))
    arch_lm: tuple = field(default=(math.nan, math.nan))
    ljung_box: tuple = field(default=(math.nan, math.nan))

    def to_dict(self) -> dict:
        def pair(t):
            return {"stat": float(t[0]), "p": float(t[1])}

        return {
            "mean": float(self.mean),
            "std": float(self.std),
            "skew": float(self.skewness),
            "kurt": float(self.kurtosis),
            "jb": pair(self.jarque_bera),
            "adf": pair(self.adf),
            "pp": pair(self.pp),
            "arch_lm": pair(self.arch_lm),
            "ljung_box": pair(self.ljung_box),
        }


def _values(x) -> np.ndarray:
    if isinstance(x, ReturnSeries):
        return x.values
    return np.asarray(x, dtype=float)


def read_price_csv(path, asset_id: str | None = None) -> PriceSeries:
    """Read a ``date,close`` CSV (header required, ISO-8601 dates)."""
    path = Path(path)
    asset_id = asset_id or path.stem
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or [f.strip() for f in reader.fieldnames[:2]] != ["date", "close"]:
                raise DataError(f"{path}: expected header 'date,close'")
            rows = [(r["date"].strip(), r["close"].strip()) for r in reader]
    except OSError as exc:
        raise DataError(f"{path}: {exc}") from exc
    if not rows:
        raise DataError(f"{path}: no observations")
    try:
        dates = np.array([d for d, _ in rows], dtype="datetime64[D]")
        closes = np.array([float(c) for _, c in rows])
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from exc
    return PriceSeries(asset_id, dates, closes)


def write_price_csv(path, prices: PriceSeries) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["date", "close"])
        for d, c in zip(prices.dates, prices.closes):
            w.writerow([str(d), repr(float(c))])


def align_calendars(series: list[PriceSeries]) -> list[PriceSeries]:
    """Restrict every series to the dates common to all of them."""
    if len(series) < 2:
        raise AlignmentError("need at least two series to align")
    if any(len(s) == 0 for s in series):
        raise AlignmentError("cannot align an empty series")
    common = series[0].dates
    for s in series[1:]:
        common = np.intersect1d(common, s.dates, assume_unique=True)
    if common.size == 0:
        raise AlignmentError("date sets have an empty intersection")
    out = []
    for s in series:
        mask = np.isin(s.dates, common, assume_unique=True)
        out.append(PriceSeries(s.asset_id, s.dates[mask], s.closes[mask]))
    return out


def log_returns(prices: PriceSeries) -> ReturnSeries:
    if len(prices) < 2:
        raise DataError(f"{prices.asset_id}: need at least two prices")
    if np.any(prices.closes <= 0):
        raise DomainError(f"{prices.asset_id}: non-positive price")
    values = np.diff(np.log(prices.closes))
    return ReturnSeries(prices.asset_id, prices.dates[1:], values)


def _moments(x: np.ndarray):
    n = x.size
    m = x.mean()
    d = x - m
    m2 = np.mean(d**2)
    if m2 == 0:
        return m, 0.0, 0.0, 3.0
    skew = np.mean(d**3) / m2**1.5
    kurt = np.mean(d**4) / m2**2
    return m, float(np.sqrt(np.sum(d**2) / (n - 1))), float(skew), float(kurt)


def summary_stats(returns) -> DiagnosticsReport:
    """Mean, sample std (n-1), skewness and raw kurtosis (normal = 3)."""
    x = _values(returns)
    if x.size < 4:
        raise DataError("summary statistics need at least 4 observations")
    mean, std, skew, kurt = _moments(x)
    return DiagnosticsReport(mean=float(mean), std=std, skewness=skew, kurtosis=kurt)


def jarque_bera_from_moments(skew: float, kurt: float, n: int) -> float:
    return n / 6.0 * (skew**2 + (kurt - 3.0) ** 2 / 4.0)


def jarque_bera(returns) -> tuple[float, float]:
    x = _values(returns)
    if x.size < 8:
        raise DataError("Jarque-Bera needs at least 8 observations")
    _, _, skew, kurt = _moments(x)
    stat = jarque_bera_from_moments(skew, kurt, x.size)
    return float(stat), float(stats.chi2.sf(stat, 2))


def _ols(y: np.ndarray, X: np.ndarray):
    XtX = X.T @ X
    if np.linalg.matrix_rank(XtX) < X.shape[1]:
        raise NumericError("singular regression design")
    beta = np.linalg.solve(XtX, X.T @ y)
    resid = y - X @ beta
    return beta, resid, np.linalg.inv(XtX)


def schwert_lags(n: int) -> int:
    return int(math.floor(12.0 * (n / 100.0) ** 0.25))


def adf_test(returns, lags: int | None = None) -> tuple[float, float]:
    """Augmented Dickey-Fuller t-test with intercept; MacKinnon p-value."""
    y = _values(returns)
    n = y.size
    if n <= 20:
        raise DataError("ADF needs more than 20 observations")
    k = schwert_lags(n) if lags is None else int(lags)
    dy = np.diff(y)
    rows = dy.size - k
    if rows <= k + 3:
        raise DataError("too many lags for the sample size")
    cols = [np.ones(rows), y[k:-1]]
    for i in range(1, k + 1):
        cols.append(dy[k - i : dy.size - i])
    X = np.column_stack(cols)
    target = dy[k:]
    beta, resid, xtx_inv = _ols(target, X)
    s2 = resid @ resid / (rows - X.shape[1])
    se = math.sqrt(s2 * xtx_inv[1, 1])
    if se == 0:
        raise NumericError("zero standard error in ADF regression")
    stat = float(beta[1] / se)
    return stat, float(np.clip(mackinnonp(stat, regression="c", N=1), 0.0, 1.0))


def newey_west_variance(e: np.ndarray, bandwidth: int) -> float:
    n = e.size
    lrv = e @ e / n
    for j in range(1, bandwidth + 1):
        w = 1.0 - j / (bandwidth + 1.0)
        lrv += 2.0 * w * (e[j:] @ e[:-j]) / n
    return float(lrv)


def pp_test(returns) -> tuple[float, float]:
    """Phillips-Perron Z-tau with intercept (Bartlett kernel, Newey-West bandwidth)."""
    y = _values(returns)
    n = y.size
    if n <= 20:
        raise DataError("PP needs more than 20 observations")
    target = y[1:]
    X = np.column_stack([np.ones(n - 1), y[:-1]])
    beta, resid, xtx_inv = _ols(target, X)
    T = target.size
    s2 = resid @ resid / (T - 2)
    se = math.sqrt(s2 * xtx_inv[1, 1])
    t_rho = (beta[1] - 1.0) / se
    gamma0 = resid @ resid / T
    bw = int(math.floor(4.0 * (n / 100.0) ** (2.0 / 9.0)))
    lam2 = newey_west_variance(resid, bw)
    if lam2 <= 0:
        raise NumericError("non-positive long-run variance")
    lam = math.sqrt(lam2)
    z_tau = math.sqrt(gamma0 / lam2) * t_rho - 0.5 * (lam2 - gamma0) / lam * (T * se / math.sqrt(s2))
    return float(z_tau), float(np.clip(mackinnonp(z_tau, regression="c", N=1), 0.0, 1.0))


def arch_lm(residuals, lags: int) -> tuple[float, float]:
    """Engle's LM test: (sample size) x R^2 of squared residuals on their lags."""
    e = _values(residuals)
    if lags < 1 or e.size <= lags + 1:
        raise DataError("ARCH-LM needs lags >= 1 and n > lags + 1")
    e2 = e**2
    y = e2[lags:]
    if np.ptp(e2) == 0 or np.ptp(y) == 0:
        return 0.0, 1.0
    X = np.column_stack([np.ones(y.size)] + [e2[lags - i : e2.size - i] for i in range(1, lags + 1)])
    try:
        _, resid, _ = _ols(y, X)
    except NumericError:
        return 0.0, 1.0
    tss = np.sum((y - y.mean()) ** 2)
    r2 = max(0.0, 1.0 - resid @ resid / tss)
    stat = y.size * r2
    return float(stat), float(stats.chi2.sf(stat, lags))


def autocorrelations(x: np.ndarray, lags: int) -> np.ndarray:
    d = x - x.mean()
    denom = d @ d
    if denom == 0:
        return np.zeros(lags)
    return np.array([d[k:] @ d[:-k] / denom for k in range(1, lags + 1)])


def ljung_box(series, lags: int) -> tuple[float, float]:
    x = _values(series)
    n = x.size
    if lags < 1 or n <= lags:
        raise DataError("Ljung-Box needs 1 <= lags < n")
    r = autocorrelations(x, lags)
    q = n * (n + 2) * np.sum(r**2 / (n - np.arange(1, lags + 1)))
    return float(q), float(stats.chi2.sf(q, lags))


def rank_correlations(a, b) -> tuple[float, float]:
    """Spearman rho (average ranks) and Kendall tau-b."""
    x, y = _values(a), _values(b)
    if x.size != y.size or x.size < 3:
        raise DataError("rank correlation needs equal-length inputs of length >= 3")
    rx, ry = stats.rankdata(x), stats.rankdata(y)
    if np.ptp(rx) == 0 or np.ptp(ry) == 0:
        raise CorrelationError("zero rank variance")
    rho = float(np.corrcoef(rx, ry)[0, 1])
    tau = float(stats.kendalltau(x, y, variant="b").statistic)
    return rho, tau


def diagnostics(returns: ReturnSeries, lags: int = 10) -> DiagnosticsReport:
    """Full battery: moments, JB, ADF, PP, ARCH-LM and Ljung-Box on one series."""
    rep = summary_stats(returns)
    rep.jarque_bera = jarque_bera(returns)
    rep.adf = adf_test(returns)
    rep.pp = pp_test(returns)
    x = returns.values
    rep.arch_lm = arch_lm(x - x.mean(), lags)
    rep.ljung_box = ljung_box(x, lags)
    return rep
