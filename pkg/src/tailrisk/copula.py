"""Bivariate Frank, Gumbel, Joe and Student-t copulas.

Families carry their standard names and parametrisations:

* Gumbel ``C = exp(-((-ln u1)^t + (-ln u2)^t)^(1/t))``, ``t >= 1``
* Frank ``C = -(1/t) ln(1 + (e^{-t u1} - 1)(e^{-t u2} - 1)/(e^{-t} - 1))``, ``t != 0``
* Joe ``C = 1 - [(1-u1)^t + (1-u2)^t - (1-u1)^t (1-u2)^t]^(1/t)``, ``t >= 1``
* Student-t with correlation ``theta`` in (-1, 1) and ``nu > 2``.

``h(u2 | u1) = dC/du1`` is the conditional distribution used for sampling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize, special, stats
from statsmodels.tools.numdiff import approx_hess3

from .errors import DataError, DomainError, FitError

FAMILIES = ("Frank", "Gumbel", "Joe", "StudentT")
U_EPS = 1e-12
_HINV_TOL = 1e-10


@dataclass(frozen=True)
class CopulaSpec:
    family: str
    theta: float
    nu: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "theta", float(self.theta))
        f = self.family
        if f not in FAMILIES:
            raise DomainError(f"unknown copula family {f!r}")
        if f in ("Gumbel", "Joe") and not self.theta >= 1.0:
            raise DomainError(f"{f} copula needs theta >= 1")
        if f == "Frank" and not np.isfinite(self.theta):
            raise DomainError("Frank theta must be finite")
        if f == "StudentT":
            if self.nu is None or not self.nu > 2.0:
                raise DomainError("Student-t copula needs nu > 2")
            if not -1.0 < self.theta < 1.0:
                raise DomainError("Student-t copula needs -1 < theta < 1")
            object.__setattr__(self, "nu", float(self.nu))


def _u(u):
    return np.asarray(u, dtype=float)


def _check_unit(*us):
    for u in us:
        if np.any((u < 0) | (u > 1)) or np.any(~np.isfinite(u)):
            raise DomainError("copula arguments must lie in [0, 1]")


# ---------------------------------------------------------------------------
# CDF


def copula_cdf(spec: CopulaSpec, u1, u2):
    u1, u2 = np.broadcast_arrays(_u(u1), _u(u2))
    _check_unit(u1, u2)
    t = spec.theta
    with np.errstate(divide="ignore", invalid="ignore"):
        if spec.family == "Gumbel":
            x, y = -np.log(u1), -np.log(u2)
            out = np.exp(-np.power(np.power(x, t) + np.power(y, t), 1.0 / t))
        elif spec.family == "Frank":
            if t == 0.0:
                out = u1 * u2
            else:
                out = -np.log1p(np.expm1(-t * u1) * np.expm1(-t * u2) / np.expm1(-t)) / t
        elif spec.family == "Joe":
            a, b = np.power(1.0 - u1, t), np.power(1.0 - u2, t)
            out = 1.0 - np.power(a + b - a * b, 1.0 / t)
        else:
            out = _t_cdf(spec, u1, u2)
    out = np.where((u1 == 0) | (u2 == 0), 0.0, out)
    out = np.where(u1 == 1, u2, out)
    out = np.where(u2 == 1, u1, out)
    return np.clip(out, np.maximum(u1 + u2 - 1.0, 0.0), np.minimum(u1, u2))


def _t_cdf(spec, u1, u2):
    nu, rho = spec.nu, spec.theta
    flat1, flat2 = u1.reshape(-1), u2.reshape(-1)
    out = np.empty(flat1.size)
    scale_c = math.sqrt((1.0 - rho * rho) / (nu + 1.0))
    for i, (a, b) in enumerate(zip(flat1, flat2)):
        if a <= 0 or b <= 0:
            out[i] = 0.0
            continue
        if a >= 1 or b >= 1:
            out[i] = min(a, b)
            continue
        x1, x2 = stats.t.ppf(a, nu), stats.t.ppf(b, nu)

        def integrand(s):
            cond = stats.t.cdf((x2 - rho * s) / (scale_c * math.sqrt(nu + s * s)), nu + 1.0)
            return cond * stats.t.pdf(s, nu)

        out[i] = integrate.quad(integrand, -np.inf, x1, epsabs=1e-13, epsrel=1e-11, limit=200)[0]
    return out.reshape(u1.shape)


# ---------------------------------------------------------------------------
# density


def copula_logpdf(spec: CopulaSpec, u1, u2):
    u1, u2 = np.broadcast_arrays(_u(u1), _u(u2))
    _check_unit(u1, u2)
    u1 = np.clip(u1, U_EPS, 1 - U_EPS)
    u2 = np.clip(u2, U_EPS, 1 - U_EPS)
    t = spec.theta
    if spec.family == "Gumbel":
        x, y = -np.log(u1), -np.log(u2)
        lx, ly = np.log(x), np.log(y)
        log_a = np.logaddexp(t * lx, t * ly)
        a_inv_t = np.exp(log_a / t)
        return (
            -a_inv_t
            - np.log(u1)
            - np.log(u2)
            + (t - 1.0) * (lx + ly)
            + (2.0 / t - 2.0) * log_a
            + np.log1p((t - 1.0) / a_inv_t)
        )
    if spec.family == "Frank":
        if t == 0.0:
            return np.zeros_like(u1)
        # c = t (1 - e^-t) e^{-t(u1+u2)} / [(1 - e^-t) - (1 - e^{-t u1})(1 - e^{-t u2})]^2
        num = np.log(abs(t)) + np.log(abs(-np.expm1(-t))) - t * (u1 + u2)
        den = -np.expm1(-t) - (-np.expm1(-t * u1)) * (-np.expm1(-t * u2))
        return num - 2.0 * np.log(np.abs(den))
    if spec.family == "Joe":
        a, b = np.power(1.0 - u1, t), np.power(1.0 - u2, t)
        s = a + b - a * b
        return (
            (1.0 / t - 2.0) * np.log(s)
            + (t - 1.0) * (np.log1p(-u1) + np.log1p(-u2))
            + np.log(t - 1.0 + s)
        )
    nu, rho = spec.nu, spec.theta
    x1, x2 = stats.t.ppf(u1, nu), stats.t.ppf(u2, nu)
    one_m = 1.0 - rho * rho
    q = (x1 * x1 - 2.0 * rho * x1 * x2 + x2 * x2) / (nu * one_m)
    log_f2 = (
        special.gammaln(0.5 * (nu + 2.0))
        - special.gammaln(0.5 * nu)
        - math.log(nu * math.pi)
        - 0.5 * math.log(one_m)
        - 0.5 * (nu + 2.0) * np.log1p(q)
    )
    return log_f2 - stats.t.logpdf(x1, nu) - stats.t.logpdf(x2, nu)


def copula_density(spec: CopulaSpec, u1, u2):
    return np.exp(copula_logpdf(spec, u1, u2))


# ---------------------------------------------------------------------------
# conditional distribution and its inverse


def h_function(spec: CopulaSpec, u2, u1):
    """``P(U2 <= u2 | U1 = u1) = dC/du1``."""
    u1, u2 = np.broadcast_arrays(_u(u1), _u(u2))
    u1 = np.clip(u1, U_EPS, 1 - U_EPS)
    u2 = np.clip(u2, U_EPS, 1 - U_EPS)
    t = spec.theta
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        if spec.family == "Gumbel":
            if t == 1.0:
                return u2.copy()
            x, y = -np.log(u1), -np.log(u2)
            log_a = np.logaddexp(t * np.log(x), t * np.log(y))
            out = np.exp(-np.exp(log_a / t) + x + (t - 1.0) * np.log(x) + (1.0 / t - 1.0) * log_a)
        elif spec.family == "Frank":
            if t == 0.0:
                return u2.copy()
            e1, e2 = np.expm1(-t * u1), np.expm1(-t * u2)
            out = np.exp(-t * u1) * e2 / (np.expm1(-t) + e1 * e2)
        elif spec.family == "Joe":
            if t == 1.0:
                return u2.copy()
            a, b = np.power(1.0 - u1, t), np.power(1.0 - u2, t)
            out = np.power(1.0 - u1, t - 1.0) * (1.0 - b) * np.power(a + b - a * b, 1.0 / t - 1.0)
        else:
            nu, rho = spec.nu, spec.theta
            x1, x2 = stats.t.ppf(u1, nu), stats.t.ppf(u2, nu)
            scale = np.sqrt((nu + x1 * x1) * (1.0 - rho * rho) / (nu + 1.0))
            out = stats.t.cdf((x2 - rho * x1) / scale, nu + 1.0)
    return np.clip(out, 0.0, 1.0)


def h_inverse(spec: CopulaSpec, v, u1):
    """Solve ``h(u2 | u1) = v`` for ``u2``."""
    u1, v = np.broadcast_arrays(_u(u1), _u(v))
    u1c = np.clip(u1, U_EPS, 1 - U_EPS)
    t = spec.theta
    if spec.family == "Frank":
        if t == 0.0:
            return v.copy()
        # closed form
        with np.errstate(divide="ignore", invalid="ignore"):
            w = v * np.expm1(-t) / (v + (1.0 - v) * np.exp(-t * u1c))
            out = -np.log1p(w) / t
        return np.clip(out, U_EPS, 1 - U_EPS)
    if spec.family == "StudentT":
        nu, rho = spec.nu, spec.theta
        x1 = stats.t.ppf(u1c, nu)
        scale = np.sqrt((nu + x1 * x1) * (1.0 - rho * rho) / (nu + 1.0))
        x2 = rho * x1 + scale * stats.t.ppf(np.clip(v, U_EPS, 1 - U_EPS), nu + 1.0)
        return np.clip(stats.t.cdf(x2, nu), U_EPS, 1 - U_EPS)
    if t == 1.0:
        return v.copy()
    lo = np.full(v.shape, U_EPS)
    hi = np.full(v.shape, 1.0 - U_EPS)
    while True:
        mid = 0.5 * (lo + hi)
        below = h_function(spec, mid, u1c) < v
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
        if np.all(hi - lo < _HINV_TOL):
            break
    return 0.5 * (lo + hi)


def conditional_sample(spec: CopulaSpec, n: int, seed) -> np.ndarray:
    """``n`` dependent uniform pairs: ``u1 ~ U(0,1)``, ``u2 = h^{-1}(v | u1)``."""
    rng = np.random.default_rng(seed)
    u = rng.uniform(size=(n, 2))
    out = np.empty_like(u)
    out[:, 0] = u[:, 0]
    out[:, 1] = h_inverse(spec, u[:, 1], u[:, 0])
    return out


# ---------------------------------------------------------------------------
# dependence measures


def _debye1(x: float) -> float:
    if x == 0:
        return 1.0
    val = integrate.quad(lambda s: s / math.expm1(s) if s != 0 else 1.0, 0.0, abs(x))[0] / abs(x)
    if x < 0:
        val += abs(x) / 2.0
    return val


def kendall_tau(spec: CopulaSpec) -> float:
    t = spec.theta
    if spec.family == "Gumbel":
        return 1.0 - 1.0 / t
    if spec.family == "Frank":
        if t == 0.0:
            return 0.0
        return 1.0 - 4.0 / t * (1.0 - _debye1(t))
    if spec.family == "Joe":
        if t == 1.0:
            return 0.0
        # series form of the Archimedean generator integral
        k = np.arange(1, 20001, dtype=float)
        total = np.sum(1.0 / (k * (t * k + 2.0) * (t * (k - 1.0) + 2.0)))
        total += 1.0 / (2.0 * t * t * 20000.0**2)
        return float(1.0 - 4.0 * total)
    return 2.0 / math.pi * math.asin(t)


def kendall_tau_numeric(spec: CopulaSpec, n_grid: int = 400) -> float:
    """``4 E[C(U1, U2)] - 1`` by midpoint quadrature against the density."""
    g = (np.arange(n_grid) + 0.5) / n_grid
    u1, u2 = np.meshgrid(g, g, indexing="ij")
    c = copula_density(spec, u1, u2)
    cc = copula_cdf(spec, u1, u2) if spec.family != "StudentT" else None
    if cc is None:
        raise DomainError("numeric tau is only offered for the Archimedean families")
    return float(4.0 * np.mean(cc * c) - 1.0)


def tail_dependence(spec: CopulaSpec) -> tuple[float, float]:
    t = spec.theta
    if spec.family in ("Gumbel", "Joe"):
        return 0.0, 2.0 - 2.0 ** (1.0 / t)
    if spec.family == "Frank":
        return 0.0, 0.0
    nu = spec.nu
    lam = 2.0 * stats.t.cdf(-math.sqrt((nu + 1.0) * (1.0 - t) / (1.0 + t)), nu + 1.0)
    return float(lam), float(lam)


def dependence_summary(spec: CopulaSpec) -> tuple[float, float, float]:
    """(Kendall tau, lower tail dependence, upper tail dependence)."""
    lo, hi = tail_dependence(spec)
    return kendall_tau(spec), lo, hi


def theta_from_tau(family: str, tau: float) -> float:
    """Dependence parameter matching Kendall's tau (clipped to the family domain)."""
    tau = float(np.clip(tau, -0.95, 0.95))
    if family == "Gumbel":
        return 1.0 / (1.0 - max(tau, 0.0))
    if family == "StudentT":
        return math.sin(math.pi * tau / 2.0)
    if family == "Frank":
        if abs(tau) < 1e-6:
            return 0.0
        f = lambda th: kendall_tau(CopulaSpec("Frank", th)) - tau
        return optimize.brentq(f, -200.0 if tau < 0 else 1e-6, -1e-6 if tau < 0 else 200.0)
    if family == "Joe":
        if tau <= 1e-6:
            return 1.0
        f = lambda th: kendall_tau(CopulaSpec("Joe", th)) - tau
        return optimize.brentq(f, 1.0 + 1e-9, 200.0)
    raise DomainError(f"unknown copula family {family!r}")


# ---------------------------------------------------------------------------
# fitting


@dataclass
class CopulaFit:
    spec: CopulaSpec
    loglik: float
    standard_error: dict
    n: int

    def to_dict(self) -> dict:
        d = {"family": self.spec.family, "theta": self.spec.theta}
        if self.spec.nu is not None:
            d["nu"] = self.spec.nu
        d["loglik"] = float(self.loglik)
        d["se"] = {k: float(v) for k, v in self.standard_error.items()}
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "CopulaFit":
        return cls(CopulaSpec(d["family"], d["theta"], d.get("nu")), d["loglik"], d.get("se", {}), d.get("n", 0))


def copula_loglik(spec: CopulaSpec, u) -> float:
    u = np.asarray(u, dtype=float)
    return float(np.sum(copula_logpdf(spec, u[:, 0], u[:, 1])))


def _decode(family, th):
    if family in ("Gumbel", "Joe"):
        return CopulaSpec(family, 1.0 + math.exp(min(th[0], 6.0)))
    if family == "Frank":
        return CopulaSpec(family, float(th[0]))
    return CopulaSpec(family, math.tanh(th[0]), 2.0 + math.exp(min(th[1], 6.0)))


def _encode(spec: CopulaSpec):
    if spec.family in ("Gumbel", "Joe"):
        return np.array([math.log(max(spec.theta - 1.0, 1e-4))])
    if spec.family == "Frank":
        return np.array([spec.theta])
    return np.array([math.atanh(np.clip(spec.theta, -0.999, 0.999)), math.log(spec.nu - 2.0)])


def fit_copula(pseudo_obs, family: str) -> CopulaFit:
    """Maximum likelihood, started from the Kendall-tau inversion."""
    u = np.asarray(pseudo_obs, dtype=float)
    if u.ndim != 2 or u.shape[1] != 2:
        raise DataError("pseudo-observations must be an (n, 2) array")
    if u.shape[0] < 100:
        raise DataError("copula fit needs at least 100 pairs")
    if family not in FAMILIES:
        raise DomainError(f"unknown copula family {family!r}")
    u = np.clip(u, U_EPS, 1 - U_EPS)
    n = u.shape[0]
    tau = float(stats.kendalltau(u[:, 0], u[:, 1]).statistic)

    def nll(th):
        try:
            spec = _decode(family, th)
            with np.errstate(all="ignore"):
                val = -copula_loglik(spec, u) / n
        except (DomainError, ValueError, OverflowError):
            return 1e10
        return val if np.isfinite(val) else 1e10

    theta0 = theta_from_tau(family, tau)
    if family == "StudentT":
        # profile the degrees of freedom on a coarse grid for the start
        best_nu = min((3.0, 5.0, 8.0, 12.0, 20.0, 40.0), key=lambda v: nll(_encode(CopulaSpec(family, theta0, v))))
        x0 = _encode(CopulaSpec(family, theta0, best_nu))
    else:
        x0 = _encode(CopulaSpec(family, theta0))
    if family == "Frank":
        res = optimize.minimize_scalar(lambda s: nll([s]), bracket=(x0[0] - 0.5, x0[0] + 0.5))
        x_opt, fun, ok = np.array([res.x]), res.fun, bool(res.success)
    else:
        res = optimize.minimize(nll, x0, method="L-BFGS-B", bounds=[(-12.0, 6.0)] * x0.size)
        x_opt, fun, ok = res.x, res.fun, bool(res.success)
    if not ok or fun >= 1e10:
        raise FitError(f"{family} copula fit did not converge")
    spec = _decode(family, x_opt)
    return CopulaFit(spec, -fun * n, _wald_se(spec, u), n)


def _wald_se(spec: CopulaSpec, u) -> dict:
    """Standard errors from the observed information in the natural parameters."""
    names = ["theta"] if spec.family != "StudentT" else ["theta", "nu"]
    x = np.array([spec.theta] if spec.family != "StudentT" else [spec.theta, spec.nu])

    def nll(v):
        try:
            s = CopulaSpec(spec.family, v[0], v[1] if len(v) > 1 else None)
        except DomainError:
            return np.nan
        with np.errstate(all="ignore"):
            return -copula_loglik(s, u)

    step = np.maximum(np.abs(x) * 1e-4, 1e-5)
    if spec.family in ("Gumbel", "Joe"):
        step = np.minimum(step, np.maximum((x - 1.0) / 2.0, 1e-8))
    try:
        hess = approx_hess3(x, nll, epsilon=step)
        cov = np.linalg.inv(hess)
        se = np.sqrt(np.where(np.diag(cov) > 0, np.diag(cov), np.nan))
    except (np.linalg.LinAlgError, ValueError):
        se = np.full(len(names), np.nan)
    return dict(zip(names, (float(s) for s in se)))
