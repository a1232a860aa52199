"""Tail-flexible marginal distributions for standardized residuals.

Three families:

* ``BATs`` -- bulk-and-tails, ``F(x) = T_nu(H(x))`` with
  ``H(x) = {1 + k1 P((x - f1)/t1)}^(1/k1) - {1 + k0 P((f0 - x)/t0)}^(1/k0)``
  and ``P`` the softplus ``log(1 + e^x)``.
* ``GNG`` -- GPD lower tail, normal bulk, GPD upper tail.  Tail weights are
  free; the GPD scales are fixed by density continuity at both thresholds.
* ``Cauchy``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import optimize, special, stats

from .errors import DataError, DomainError, FitError

FAMILIES = ("BATs", "GNG", "Cauchy")
PIT_EPS = 1e-10
_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


def softplus(x):
    return np.logaddexp(0.0, x)


def softplus_inv(y):
    """Inverse of ``log(1 + e^x)`` for ``y > 0``."""
    y = np.asarray(y, dtype=float)
    return y + np.log(-np.expm1(-y))


def _log_tail_term(kappa: float, s: np.ndarray):
    """log {1 + kappa softplus(s)}^(1/kappa) and log(1 + kappa softplus(s)).

    Returns ``+inf`` where the base is non-positive (outside a bounded support).
    """
    psi = softplus(s)
    if abs(kappa) < 1e-12:
        return psi, np.zeros_like(psi)
    base = kappa * psi
    with np.errstate(invalid="ignore", divide="ignore"):
        log_base = np.log1p(base)
        out = np.where(base > -1.0, log_base / kappa, np.inf)
    return out, log_base


# ---------------------------------------------------------------------------
# BATs


@dataclass(frozen=True)
class BatsParams:
    kappa0: float
    tau0: float
    phi0: float
    kappa1: float
    tau1: float
    phi1: float
    nu: float

    def __post_init__(self):
        if not (self.tau0 > 0 and self.tau1 > 0 and self.nu > 0):
            raise DomainError("BATs needs tau0, tau1, nu > 0")
        lo, hi = self.support()
        if not lo < hi:
            raise DomainError("BATs support bounds are not ordered")

    def support(self) -> tuple[float, float]:
        hi = math.inf
        lo = -math.inf
        if self.kappa1 < 0:
            hi = self.phi1 + self.tau1 * float(softplus_inv(-1.0 / self.kappa1))
        if self.kappa0 < 0:
            lo = self.phi0 - self.tau0 * float(softplus_inv(-1.0 / self.kappa0))
        return lo, hi

    def vector(self) -> np.ndarray:
        return np.array([self.kappa0, self.tau0, self.phi0, self.kappa1, self.tau1, self.phi1, self.nu])

    # -- core pieces --------------------------------------------------------
    def _logs(self, x):
        s1 = (x - self.phi1) / self.tau1
        s0 = (self.phi0 - x) / self.tau0
        log_a, log_base1 = _log_tail_term(self.kappa1, s1)
        log_b, log_base0 = _log_tail_term(self.kappa0, s0)
        return s0, s1, log_a, log_b, log_base0, log_base1

    def h(self, x):
        """The monotone transform ``H(x)``."""
        x = np.asarray(x, dtype=float)
        _, _, log_a, log_b, _, _ = self._logs(x)
        with np.errstate(over="ignore", invalid="ignore"):
            out = np.exp(log_a) - np.exp(log_b)
        lo, hi = self.support()
        out = np.where(x >= hi, np.inf, out)
        out = np.where(x <= lo, -np.inf, out)
        return out

    def h_limit(self, x):
        """``exp((x - phi1)/tau1) - exp((phi0 - x)/tau0)``: the kappa -> 0 form of ``H``."""
        x = np.asarray(x, dtype=float)
        return np.exp((x - self.phi1) / self.tau1) - np.exp((self.phi0 - x) / self.tau0)

    def cdf(self, x):
        h = self.h(x)
        # upper half via the survival function; scipy's cdf is not monotone near 1
        return np.where(h > 0, 1.0 - stats.t.sf(h, self.nu), stats.t.cdf(h, self.nu))

    def logpdf(self, x):
        x = np.asarray(x, dtype=float)
        s0, s1, log_a, log_b, log_base0, log_base1 = self._logs(x)
        with np.errstate(invalid="ignore", over="ignore"):
            # d/dx of each tail term, in logs
            log_da = log_a - log_base1 + special.log_expit(s1) - math.log(self.tau1)
            log_db = log_b - log_base0 + special.log_expit(s0) - math.log(self.tau0)
            log_dh = np.logaddexp(log_da, log_db)
            # log|H| without forming H when a term overflows
            big = np.maximum(log_a, log_b)
            small = np.minimum(log_a, log_b)
            log_abs_h = big + np.log1p(-np.exp(small - big))
            nu = self.nu
            c = special.gammaln(0.5 * (nu + 1)) - special.gammaln(0.5 * nu) - 0.5 * math.log(nu * math.pi)
            log_t = c - 0.5 * (nu + 1) * np.logaddexp(0.0, 2.0 * log_abs_h - math.log(nu))
            out = log_t + log_dh
        lo, hi = self.support()
        inside = (x > lo) & (x < hi) & np.isfinite(log_a) & np.isfinite(log_b)
        return np.where(inside, np.nan_to_num(out, nan=-np.inf), -np.inf)

    def pdf(self, x):
        return np.exp(self.logpdf(x))

    def quantile(self, p):
        p = np.asarray(p, dtype=float)
        target = stats.t.ppf(p, self.nu)
        lo_b, hi_b = self.support()
        x = _bisect_monotone(self.h, target, self._centre(), self.tau0 + self.tau1, lo_b, hi_b)
        # one Newton polish on the CDF
        with np.errstate(all="ignore"):
            f = self.pdf(x)
            step = np.where(f > 0, (self.cdf(x) - p) / f, 0.0)
            x_new = x - step
            ok = np.isfinite(x_new) & (np.abs(step) < 1e-6 * (1.0 + np.abs(x)))
        x = np.where(ok, x_new, x)
        return x

    def _centre(self) -> float:
        return 0.5 * (self.phi0 + self.phi1)

    def h_is_monotone(self, grid=None) -> bool:
        if grid is None:
            lo, hi = self.support()
            a = max(lo, -50.0) if np.isfinite(lo) else -50.0
            b = min(hi, 50.0) if np.isfinite(hi) else 50.0
            grid = np.linspace(a, b, 2001)[1:-1]
        vals = self.h(grid)
        return bool(np.all(np.diff(vals) > 0))


def _bisect_monotone(fn, target, centre, width, lo_bound=-np.inf, hi_bound=np.inf, iters=200):
    """Vectorised bisection solving ``fn(x) = target`` for increasing ``fn``."""
    target = np.asarray(target, dtype=float)
    shape = target.shape
    tgt = target.reshape(-1)
    width = max(float(width), 1e-3)
    lo = np.full(tgt.shape, centre - width)
    hi = np.full(tgt.shape, centre + width)
    if np.isfinite(lo_bound):
        lo = np.full(tgt.shape, lo_bound)
    if np.isfinite(hi_bound):
        hi = np.full(tgt.shape, hi_bound)
    # expand brackets on unbounded sides
    for _ in range(200):
        need = (fn(lo) > tgt) & ~np.isfinite(lo_bound)
        if not need.any():
            break
        lo = np.where(need, centre - 2.0 * (centre - lo), lo)
    for _ in range(200):
        need = (fn(hi) < tgt) & ~np.isfinite(hi_bound)
        if not need.any():
            break
        hi = np.where(need, centre + 2.0 * (hi - centre), hi)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        below = fn(mid) < tgt
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
        if np.all(hi - lo <= 4e-16 * np.maximum(1.0, np.abs(mid))):
            break
    return (0.5 * (lo + hi)).reshape(shape)


# ---------------------------------------------------------------------------
# GNG


def _gpd_log_sf(y, scale, xi):
    """log survival of GPD(scale, xi) at excess ``y >= 0``."""
    if abs(xi) < 1e-10:
        return -y / scale
    with np.errstate(invalid="ignore", divide="ignore"):
        arg = 1.0 + xi * y / scale
        return np.where(arg > 0, -np.log(np.where(arg > 0, arg, 1.0)) / xi, -np.inf)


def _gpd_logpdf(y, scale, xi):
    if abs(xi) < 1e-10:
        return -y / scale - math.log(scale)
    with np.errstate(invalid="ignore", divide="ignore"):
        arg = 1.0 + xi * y / scale
        return np.where(arg > 0, -math.log(scale) - (1.0 / xi + 1.0) * np.log(np.where(arg > 0, arg, 1.0)), -np.inf)


def _gpd_excess_quantile(q, scale, xi):
    """Excess y with survival probability ``q`` in (0, 1]."""
    if abs(xi) < 1e-10:
        return -scale * np.log(q)
    return scale / xi * (np.power(q, -xi) - 1.0)


@dataclass(frozen=True)
class GngParams:
    mu: float
    sigma: float
    u_lo: float
    alpha_lo: float
    xi_lo: float
    u_hi: float
    alpha_hi: float
    xi_hi: float
    phi_lo: float
    phi_hi: float

    def __post_init__(self):
        if not (self.sigma > 0 and self.alpha_lo > 0 and self.alpha_hi > 0):
            raise DomainError("GNG scales must be positive")
        if not self.u_lo < self.u_hi:
            raise DomainError("GNG thresholds must satisfy u_lo < u_hi")
        if not (0 < self.phi_lo < 1 and 0 < self.phi_hi < 1 and self.phi_lo + self.phi_hi < 1):
            raise DomainError("GNG tail probabilities must be in (0,1) with sum < 1")

    @classmethod
    def continuous(cls, mu, sigma, u_lo, xi_lo, u_hi, xi_hi, phi_lo, phi_hi) -> "GngParams":
        """Build with GPD scales chosen so the density is continuous at both thresholds."""
        if not (sigma > 0 and u_lo < u_hi and phi_lo > 0 and phi_hi > 0 and phi_lo + phi_hi < 1):
            raise DomainError("invalid GNG free parameters")
        z_lo, z_hi = (u_lo - mu) / sigma, (u_hi - mu) / sigma
        mass = special.ndtr(z_hi) - special.ndtr(z_lo)
        if mass <= 0:
            raise DomainError("GNG bulk has no normal mass between thresholds")
        bulk = 1.0 - phi_lo - phi_hi
        dens_lo = bulk * math.exp(-0.5 * z_lo * z_lo - _LOG_SQRT_2PI) / (sigma * mass)
        dens_hi = bulk * math.exp(-0.5 * z_hi * z_hi - _LOG_SQRT_2PI) / (sigma * mass)
        if dens_lo <= 0 or dens_hi <= 0:
            raise DomainError("GNG threshold density underflows")
        return cls(mu, sigma, u_lo, phi_lo / dens_lo, xi_lo, u_hi, phi_hi / dens_hi, xi_hi, phi_lo, phi_hi)

    def free_vector(self) -> np.ndarray:
        return np.array([self.mu, self.sigma, self.u_lo, self.xi_lo, self.u_hi, self.xi_hi, self.phi_lo, self.phi_hi])

    def _bulk(self):
        z_lo, z_hi = (self.u_lo - self.mu) / self.sigma, (self.u_hi - self.mu) / self.sigma
        c_lo, c_hi = special.ndtr(z_lo), special.ndtr(z_hi)
        return c_lo, c_hi, 1.0 - self.phi_lo - self.phi_hi

    def support(self) -> tuple[float, float]:
        lo = self.u_lo + self.alpha_lo / self.xi_lo if self.xi_lo < 0 else -math.inf
        hi = self.u_hi - self.alpha_hi / self.xi_hi if self.xi_hi < 0 else math.inf
        return lo, hi

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        c_lo, c_hi, bulk = self._bulk()
        mid = self.phi_lo + bulk * (special.ndtr((x - self.mu) / self.sigma) - c_lo) / (c_hi - c_lo)
        low = self.phi_lo * np.exp(_gpd_log_sf(np.maximum(self.u_lo - x, 0.0), self.alpha_lo, self.xi_lo))
        high = 1.0 - self.phi_hi * np.exp(_gpd_log_sf(np.maximum(x - self.u_hi, 0.0), self.alpha_hi, self.xi_hi))
        out = np.where(x < self.u_lo, low, np.where(x >= self.u_hi, high, mid))
        return np.clip(out, 0.0, 1.0)

    def logpdf(self, x):
        x = np.asarray(x, dtype=float)
        c_lo, c_hi, bulk = self._bulk()
        z = (x - self.mu) / self.sigma
        mid = math.log(bulk) - 0.5 * z * z - _LOG_SQRT_2PI - math.log(self.sigma) - math.log(c_hi - c_lo)
        low = math.log(self.phi_lo) + _gpd_logpdf(np.maximum(self.u_lo - x, 0.0), self.alpha_lo, self.xi_lo)
        high = math.log(self.phi_hi) + _gpd_logpdf(np.maximum(x - self.u_hi, 0.0), self.alpha_hi, self.xi_hi)
        return np.where(x < self.u_lo, low, np.where(x >= self.u_hi, high, mid))

    def pdf(self, x):
        return np.exp(self.logpdf(x))

    def quantile(self, p):
        p = np.asarray(p, dtype=float)
        c_lo, c_hi, bulk = self._bulk()
        with np.errstate(all="ignore"):
            low = self.u_lo - _gpd_excess_quantile(np.clip(p / self.phi_lo, 1e-300, 1.0), self.alpha_lo, self.xi_lo)
            high = self.u_hi + _gpd_excess_quantile(
                np.clip((1.0 - p) / self.phi_hi, 1e-300, 1.0), self.alpha_hi, self.xi_hi
            )
            frac = np.clip((p - self.phi_lo) / bulk, 0.0, 1.0)
            mid = self.mu + self.sigma * special.ndtri(c_lo + frac * (c_hi - c_lo))
        return np.where(p < self.phi_lo, low, np.where(p > 1.0 - self.phi_hi, high, mid))


# ---------------------------------------------------------------------------
# Cauchy


@dataclass(frozen=True)
class CauchyParams:
    x0: float
    delta: float

    def __post_init__(self):
        if not self.delta > 0:
            raise DomainError("Cauchy scale must be positive")

    def cdf(self, x):
        return np.arctan((np.asarray(x, dtype=float) - self.x0) / self.delta) / math.pi + 0.5

    def logpdf(self, x):
        y = (np.asarray(x, dtype=float) - self.x0) / self.delta
        return -math.log(math.pi * self.delta) - np.log1p(y * y)

    def pdf(self, x):
        return np.exp(self.logpdf(x))

    def quantile(self, p):
        return self.x0 + self.delta * np.tan(math.pi * (np.asarray(p, dtype=float) - 0.5))


_PARAM_TYPES = {"BATs": BatsParams, "GNG": GngParams, "Cauchy": CauchyParams}


def _check(family, params):
    if family not in _PARAM_TYPES:
        raise DomainError(f"unknown marginal family {family!r}")
    if not isinstance(params, _PARAM_TYPES[family]):
        raise DomainError(f"{family} expects {_PARAM_TYPES[family].__name__}")
    return params


def marginal_cdf(family, params, x):
    return _check(family, params).cdf(x)


def marginal_pdf(family, params, x):
    return _check(family, params).pdf(x)


def marginal_logpdf(family, params, x):
    return _check(family, params).logpdf(x)


def marginal_quantile(family, params, p):
    p = np.asarray(p, dtype=float)
    if np.any((p <= 0) | (p >= 1)):
        raise DomainError("quantile levels must lie strictly inside (0, 1)")
    return _check(family, params).quantile(p)


# ---------------------------------------------------------------------------
# fitting


@dataclass
class MarginalFit:
    family: str
    params: object
    loglik: float
    bic: float
    cvm: tuple = (math.nan, math.nan)
    ad: tuple = (math.nan, math.nan)
    n: int = 0
    diagnostics: dict = field(default_factory=dict)

    def cdf(self, x):
        return self.params.cdf(x)

    def quantile(self, p):
        return self.params.quantile(p)

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "params": {k: float(v) for k, v in asdict(self.params).items()},
            "loglik": float(self.loglik),
            "bic": float(self.bic),
            "cvm": {"stat": float(self.cvm[0]), "p": float(self.cvm[1])},
            "ad": {"stat": float(self.ad[0]), "p": float(self.ad[1])},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MarginalFit":
        params = _PARAM_TYPES[d["family"]](**d["params"])
        return cls(
            d["family"],
            params,
            d["loglik"],
            d["bic"],
            (d["cvm"]["stat"], d["cvm"]["p"]),
            (d["ad"]["stat"], d["ad"]["p"]),
        )


_N_FREE = {"BATs": 7, "GNG": 8, "Cauchy": 2}


def _bats_from_theta(th):
    th = [float(v) for v in th]
    return BatsParams(th[0], math.exp(th[1]), th[2], th[3], math.exp(th[4]), th[5], math.exp(th[6]))


def _bats_to_theta(p: BatsParams):
    return np.array([p.kappa0, math.log(p.tau0), p.phi0, p.kappa1, math.log(p.tau1), p.phi1, math.log(p.nu)])


def _gng_from_theta(th):
    th = [float(v) for v in th]
    w = np.exp(np.array([th[6], th[7], 0.0]) - max(th[6], th[7], 0.0))
    w = w / w.sum()
    return GngParams.continuous(
        th[0], math.exp(th[1]), th[2], th[3], th[2] + math.exp(th[4]), th[5], float(w[0]), float(w[1])
    )


def _gng_to_theta(p: GngParams):
    bulk = 1.0 - p.phi_lo - p.phi_hi
    return np.array(
        [
            p.mu,
            math.log(p.sigma),
            p.u_lo,
            p.xi_lo,
            math.log(p.u_hi - p.u_lo),
            p.xi_hi,
            math.log(p.phi_lo / bulk),
            math.log(p.phi_hi / bulk),
        ]
    )


def _cauchy_from_theta(th):
    th = [float(v) for v in th]
    return CauchyParams(th[0], math.exp(th[1]))


def _cauchy_to_theta(p: CauchyParams):
    return np.array([p.x0, math.log(p.delta)])


_CODEC = {
    "BATs": (_bats_from_theta, _bats_to_theta),
    "GNG": (_gng_from_theta, _gng_to_theta),
    "Cauchy": (_cauchy_from_theta, _cauchy_to_theta),
}

_BOUNDS = {
    "BATs": [(-0.9, 5.0), (-6.0, 4.0), (-20.0, 20.0), (-0.9, 5.0), (-6.0, 4.0), (-20.0, 20.0), (-4.0, 5.0)],
    "GNG": [(-20, 20), (-6, 4), (-50, 50), (-0.45, 1.0), (-6, 5), (-0.45, 1.0), (-8.0, 3.0), (-8.0, 3.0)],
    "Cauchy": [(-50, 50), (-10, 5)],
}


def _starts(family, x, rng, n_starts):
    med = float(np.median(x))
    iqr = float(np.subtract(*np.percentile(x, [75, 25]))) or 1.0
    sd = float(np.std(x)) or 1.0
    if family == "Cauchy":
        base = [_cauchy_to_theta(CauchyParams(med, iqr / 2.0))]
    elif family == "BATs":
        base = [
            _bats_to_theta(BatsParams(0.2, 0.5 * iqr, med - 0.2 * iqr, 0.2, 0.5 * iqr, med + 0.2 * iqr, 3.0)),
            _bats_to_theta(BatsParams(0.05, 0.8 * sd, med - 0.3 * sd, 0.05, 0.8 * sd, med + 0.3 * sd, 8.0)),
            _bats_to_theta(BatsParams(0.3, 0.3, med - 0.2, 0.3, 0.3, med + 0.2, 1.0)),
        ]
    else:
        q10, q90 = np.percentile(x, [10, 90])
        if not q10 < q90:
            q10, q90 = med - sd, med + sd
        p0 = GngParams.continuous(med, sd, float(q10), 0.1, float(q90), 0.1, 0.1, 0.1)
        base = [_gng_to_theta(p0)]
    out = list(base)
    while len(out) < n_starts:
        b = base[len(out) % len(base)]
        out.append(b + rng.normal(scale=0.3, size=b.size))
    return out[: max(n_starts, 1)]


def _nll_factory(family, x):
    decode = _CODEC[family][0]
    n = x.size

    def nll(th):
        try:
            prm = decode(th)
        except (DomainError, ValueError, OverflowError, ZeroDivisionError):
            return 1e10
        with np.errstate(all="ignore"):
            lp = prm.logpdf(x)
        if not np.all(np.isfinite(lp)):
            return 1e10
        return float(-lp.sum() / n)

    return nll


def _mle(family, x, n_starts=5, start=None, seed=0):
    nll = _nll_factory(family, x)
    rng = np.random.default_rng(seed)
    starts = [_CODEC[family][1](start)] if start is not None else _starts(family, x, rng, n_starts)
    bounds = _BOUNDS[family]
    best = None
    for x0 in starts:
        x0 = np.array([min(max(v, lo + 1e-9), hi - 1e-9) for v, (lo, hi) in zip(x0, bounds)])
        if nll(x0) >= 1e10:
            continue
        res = optimize.minimize(nll, x0, method="L-BFGS-B", bounds=bounds, options={"maxiter": 3000})
        if res.fun < 1e10 and (best is None or res.fun < best.fun):
            best = res
    if best is None:
        raise FitError(f"{family}: no start produced a finite likelihood")
    return _CODEC[family][0](best.x), -best.fun * x.size, bool(best.success)


def gof_statistics(u_sorted: np.ndarray) -> tuple[float, float]:
    """Cramer-von Mises W^2 and Anderson-Darling A^2 of sorted PIT values."""
    n = u_sorted.size
    u = np.clip(u_sorted, PIT_EPS, 1 - PIT_EPS)
    i = np.arange(1, n + 1)
    w2 = 1.0 / (12 * n) + np.sum((u - (2 * i - 1) / (2.0 * n)) ** 2)
    a2 = -n - np.sum((2 * i - 1) * (np.log(u) + np.log1p(-u[::-1]))) / n
    return float(w2), float(a2)


def fit_marginal(
    residuals,
    family: str,
    n_bootstrap: int = 200,
    seed: int | np.random.SeedSequence = 0,
    n_starts: int = 5,
) -> MarginalFit:
    """MLE fit plus CvM / AD goodness of fit with parametric-bootstrap p-values."""
    x = np.asarray(residuals, dtype=float)
    if family not in FAMILIES:
        raise DomainError(f"unknown marginal family {family!r}")
    if x.size < 100:
        raise DataError("marginal fit needs at least 100 observations")
    if not np.all(np.isfinite(x)) or np.ptp(x) == 0:
        raise DataError("residuals are degenerate (constant or non-finite)")
    params, ll, ok = _mle(family, x, n_starts=n_starts)
    n = x.size
    k = _N_FREE[family]
    w2, a2 = gof_statistics(np.sort(params.cdf(x)))
    p_w2 = p_a2 = math.nan
    if n_bootstrap > 0:
        ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
        hits_w = hits_a = 0
        done = 0
        for child in ss.spawn(n_bootstrap):
            rng = np.random.default_rng(child)
            u = rng.uniform(PIT_EPS, 1 - PIT_EPS, size=n)
            xb = params.quantile(u)
            try:
                pb, _, _ = _mle(family, xb, start=params)
            except FitError:
                continue
            wb, ab = gof_statistics(np.sort(pb.cdf(xb)))
            hits_w += wb >= w2
            hits_a += ab >= a2
            done += 1
        if done:
            p_w2 = (1 + hits_w) / (done + 1)
            p_a2 = (1 + hits_a) / (done + 1)
    diagnostics = {"converged": ok}
    if family == "BATs":
        diagnostics["h_monotone"] = params.h_is_monotone()
    return MarginalFit(
        family=family,
        params=params,
        loglik=float(ll),
        bic=float(-2.0 * ll + k * math.log(n)),
        cvm=(w2, p_w2),
        ad=(a2, p_a2),
        n=n,
        diagnostics=diagnostics,
    )


def compare_marginals(residuals, families=FAMILIES, **fit_kwargs) -> list[MarginalFit]:
    """Fit each family and rank the survivors by ascending BIC."""
    fits = []
    errors = {}
    for fam in families:
        try:
            fits.append(fit_marginal(residuals, fam, **fit_kwargs))
        except FitError as exc:
            errors[fam] = str(exc)
    if not fits:
        raise FitError("no marginal family could be fitted", errors)
    order = {f: i for i, f in enumerate(families)}
    fits.sort(key=lambda f: (f.bic, order[f.family]))
    return fits


def pit_transform(residuals, fit: MarginalFit) -> np.ndarray:
    u = fit.params.cdf(np.asarray(residuals, dtype=float))
    return np.clip(u, PIT_EPS, 1 - PIT_EPS)


def loglik_at(family, params, x) -> float:
    return float(np.sum(_check(family, params).logpdf(np.asarray(x, dtype=float))))


# Bitcoin BATs estimates from the empirical study, used as a realistic fixture.
BITCOIN_BATS = BatsParams(kappa0=0.2331, tau0=0.4153, phi0=-0.2042, kappa1=0.1423, tau1=0.4655, phi1=0.2503, nu=0.9514)
