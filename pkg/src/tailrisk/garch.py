"""ARMA mean + sGARCH / eGARCH / gjrGARCH variance with standardized Student-t errors.

Conventions
-----------
``garch_order = (p, q)``: ``p`` lags of the conditional variance (``beta``),
``q`` lags of the shock (``alpha``, and ``gamma`` where present).

The eGARCH recursion is::

    log h_t = omega + sum_j (gamma_j |z_{t-j}| + alpha_j z_{t-j}) + sum_i beta_i log h_{t-i}

with no centring of ``|z|``.  ``alpha`` is the sign (leverage) coefficient and
``gamma`` the size coefficient, matching the usual ``alpha1 / gamma1 / beta1``
labels of fitted-parameter tables.  gjrGARCH adds ``gamma_j * 1{eps<0} eps^2``.

Pre-sample values: ``h = eps^2 = sample variance``, ``z = 0``, ``|z| = sqrt(2/pi)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numba
import numpy as np
from scipy import optimize, special

from .data_ingest import ReturnSeries
from .errors import DataError, DomainError, FitError, SelectionError

KINDS = ("sGARCH", "eGARCH", "gjrGARCH")
_KIND_CODE = {"sGARCH": 0, "eGARCH": 1, "gjrGARCH": 2}
_PERSIST_CAP = 0.9999
_NU_MAX_EXCESS = 500.0
_NU_MIN_EXCESS = 0.1
_EGARCH_COEF_BOUND = 2.0
_ABS_Z_PRESAMPLE = math.sqrt(2.0 / math.pi)


@dataclass(frozen=True)
class GarchSpec:
    variance_kind: str = "eGARCH"
    arma_order: tuple = (0, 0)
    garch_order: tuple = (1, 1)
    innovation: str = "std"

    def __post_init__(self):
        if self.variance_kind not in KINDS:
            raise DomainError(f"unknown variance kind {self.variance_kind!r}")
        p_ar, q_ma = (int(v) for v in self.arma_order)
        p, q = (int(v) for v in self.garch_order)
        if not (0 <= p_ar <= 8 and 0 <= q_ma <= 8):
            raise DomainError("ARMA orders must lie in [0, 8]")
        if p < 1 or q < 1:
            raise DomainError("GARCH orders must be >= 1")
        if self.innovation != "std":
            raise DomainError("only Student-t innovations are supported")
        object.__setattr__(self, "arma_order", (p_ar, q_ma))
        object.__setattr__(self, "garch_order", (p, q))

    @property
    def label(self) -> str:
        return (
            f"ARMA({self.arma_order[0]},{self.arma_order[1]})-"
            f"{self.variance_kind}({self.garch_order[0]},{self.garch_order[1]})"
        )

    def to_dict(self) -> dict:
        return {
            "variance_kind": self.variance_kind,
            "arma_order": list(self.arma_order),
            "garch_order": list(self.garch_order),
            "innovation": self.innovation,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GarchSpec":
        return cls(d["variance_kind"], tuple(d.get("arma_order", (0, 0))), tuple(d.get("garch_order", (1, 1))))


@dataclass(frozen=True)
class GarchParams:
    mu: float = 0.0
    ar: tuple = ()
    ma: tuple = ()
    omega: float = 0.0
    alpha: tuple = ()
    gamma: tuple = ()
    beta: tuple = ()
    nu: float = 8.0

    def __post_init__(self):
        for name in ("ar", "ma", "alpha", "gamma", "beta"):
            object.__setattr__(self, name, tuple(float(v) for v in getattr(self, name)))

    def count(self, spec: GarchSpec) -> int:
        return 1 + len(self.ar) + len(self.ma) + 1 + len(self.alpha) + len(self.gamma) + len(self.beta) + 1

    def named(self) -> dict:
        out = {"mu": self.mu}
        out.update({f"ar{i + 1}": v for i, v in enumerate(self.ar)})
        out.update({f"ma{i + 1}": v for i, v in enumerate(self.ma)})
        out["omega"] = self.omega
        out.update({f"alpha{i + 1}": v for i, v in enumerate(self.alpha)})
        out.update({f"beta{i + 1}": v for i, v in enumerate(self.beta)})
        out.update({f"gamma{i + 1}": v for i, v in enumerate(self.gamma)})
        out["shape"] = self.nu
        return {k: float(v) for k, v in out.items()}

    def persistence(self, kind: str) -> float:
        if kind == "eGARCH":
            return float(sum(self.beta))
        return float(sum(self.alpha) + sum(self.beta) + 0.5 * sum(self.gamma))


def check_stationary(spec: GarchSpec, params: GarchParams) -> None:
    p, q = spec.garch_order
    p_ar, q_ma = spec.arma_order
    if len(params.beta) != p or len(params.alpha) != q or len(params.ar) != p_ar or len(params.ma) != q_ma:
        raise DomainError(f"parameter shapes do not match {spec.label}")
    if spec.variance_kind == "gjrGARCH" and len(params.gamma) != q:
        raise DomainError("gjrGARCH needs q gamma coefficients")
    if spec.variance_kind == "eGARCH" and len(params.gamma) != q:
        raise DomainError("eGARCH needs q gamma coefficients")
    if params.nu <= 2:
        raise DomainError("Student-t shape must exceed 2")
    if spec.variance_kind == "eGARCH":
        if abs(sum(params.beta)) >= 1:
            raise DomainError("eGARCH requires |sum beta| < 1")
    else:
        if params.omega <= 0 or min(params.alpha + params.beta + params.gamma, default=0.0) < 0:
            raise DomainError("GARCH coefficients must be non-negative with omega > 0")
        if params.persistence(spec.variance_kind) >= 1:
            raise DomainError("variance process is not covariance stationary")


# ---------------------------------------------------------------------------
# numba kernels


@numba.njit(cache=True)
def _filter(r, mu, ar, ma, kind, omega, alpha, gamma, beta, h0):
    """Return (mean, h) of length n+1 (last entry = one-step forecast) and eps."""
    n = r.shape[0]
    p_ar = ar.shape[0]
    q_ma = ma.shape[0]
    q = alpha.shape[0]
    p = beta.shape[0]
    mean = np.empty(n + 1)
    h = np.empty(n + 1)
    eps = np.empty(n)
    z = np.empty(n)
    logh0 = math.log(h0)
    absz0 = math.sqrt(2.0 / math.pi)
    for t in range(n + 1):
        m = mu
        for i in range(p_ar):
            if t - 1 - i >= 0:
                m += ar[i] * (r[t - 1 - i] - mu)
        for j in range(q_ma):
            if t - 1 - j >= 0:
                m += ma[j] * eps[t - 1 - j]
        mean[t] = m
        if kind == 1:
            lh = omega
            for j in range(q):
                if t - 1 - j >= 0:
                    lh += gamma[j] * abs(z[t - 1 - j]) + alpha[j] * z[t - 1 - j]
                else:
                    lh += gamma[j] * absz0
            for i in range(p):
                if t - 1 - i >= 0:
                    lh += beta[i] * math.log(h[t - 1 - i])
                else:
                    lh += beta[i] * logh0
            if lh > 700.0:
                lh = 700.0
            elif lh < -700.0:
                lh = -700.0
            ht = math.exp(lh)
        else:
            ht = omega
            for j in range(q):
                if t - 1 - j >= 0:
                    e2 = eps[t - 1 - j] * eps[t - 1 - j]
                    ht += alpha[j] * e2
                    if kind == 2 and eps[t - 1 - j] < 0.0:
                        ht += gamma[j] * e2
                else:
                    ht += alpha[j] * h0
                    if kind == 2:
                        ht += 0.5 * gamma[j] * h0
            for i in range(p):
                if t - 1 - i >= 0:
                    ht += beta[i] * h[t - 1 - i]
                else:
                    ht += beta[i] * h0
        if ht < 1e-300:
            ht = 1e-300
        h[t] = ht
        if t < n:
            eps[t] = r[t] - m
            z[t] = eps[t] / math.sqrt(ht)
    return mean, h, eps


@numba.njit(cache=True)
def _std_t_loglik(eps, h, nu):
    n = eps.shape[0]
    c = math.lgamma(0.5 * (nu + 1.0)) - math.lgamma(0.5 * nu) - 0.5 * math.log(math.pi * (nu - 2.0))
    ll = n * c
    for t in range(n):
        ll -= 0.5 * math.log(h[t]) + 0.5 * (nu + 1.0) * math.log1p(eps[t] * eps[t] / ((nu - 2.0) * h[t]))
    return ll


@numba.njit(cache=True)
def _simulate(n_total, z, mu, ar, ma, kind, omega, alpha, gamma, beta, h0):
    p_ar = ar.shape[0]
    q_ma = ma.shape[0]
    q = alpha.shape[0]
    p = beta.shape[0]
    r = np.empty(n_total)
    h = np.empty(n_total)
    eps = np.empty(n_total)
    logh0 = math.log(h0)
    absz0 = math.sqrt(2.0 / math.pi)
    for t in range(n_total):
        m = mu
        for i in range(p_ar):
            if t - 1 - i >= 0:
                m += ar[i] * (r[t - 1 - i] - mu)
        for j in range(q_ma):
            if t - 1 - j >= 0:
                m += ma[j] * eps[t - 1 - j]
        if kind == 1:
            lh = omega
            for j in range(q):
                if t - 1 - j >= 0:
                    lh += gamma[j] * abs(z[t - 1 - j]) + alpha[j] * z[t - 1 - j]
                else:
                    lh += gamma[j] * absz0
            for i in range(p):
                if t - 1 - i >= 0:
                    lh += beta[i] * math.log(h[t - 1 - i])
                else:
                    lh += beta[i] * logh0
            ht = math.exp(lh)
        else:
            ht = omega
            for j in range(q):
                if t - 1 - j >= 0:
                    e2 = eps[t - 1 - j] * eps[t - 1 - j]
                    ht += alpha[j] * e2
                    if kind == 2 and eps[t - 1 - j] < 0.0:
                        ht += gamma[j] * e2
                else:
                    ht += alpha[j] * h0
                    if kind == 2:
                        ht += 0.5 * gamma[j] * h0
            for i in range(p):
                if t - 1 - i >= 0:
                    ht += beta[i] * h[t - 1 - i]
                else:
                    ht += beta[i] * h0
        h[t] = ht
        eps[t] = math.sqrt(ht) * z[t]
        r[t] = m + eps[t]
    return r, h


@numba.njit(cache=True)
def _css_residuals(r, mu, ar, ma):
    n = r.shape[0]
    eps = np.empty(n)
    for t in range(n):
        m = mu
        for i in range(ar.shape[0]):
            if t - 1 - i >= 0:
                m += ar[i] * (r[t - 1 - i] - mu)
        for j in range(ma.shape[0]):
            if t - 1 - j >= 0:
                m += ma[j] * eps[t - 1 - j]
        eps[t] = r[t] - m
    return eps


# ---------------------------------------------------------------------------
# parameter transforms


def _arr(v) -> np.ndarray:
    return np.asarray(v, dtype=float).reshape(-1)


def _run_filter(spec: GarchSpec, params: GarchParams, r: np.ndarray, h0: float):
    gamma = params.gamma if params.gamma else (0.0,) * spec.garch_order[1]
    return _filter(
        r,
        params.mu,
        _arr(params.ar),
        _arr(params.ma),
        _KIND_CODE[spec.variance_kind],
        params.omega,
        _arr(params.alpha),
        _arr(gamma),
        _arr(params.beta),
        h0,
    )


def _n_free(spec: GarchSpec) -> int:
    p_ar, q_ma = spec.arma_order
    p, q = spec.garch_order
    n_var = 1 + q + p + (q if spec.variance_kind != "sGARCH" else 0)
    return 1 + p_ar + q_ma + n_var + 1


def _theta_bounds(spec: GarchSpec) -> list:
    """Box for the optimizer; keeps eGARCH news coefficients and the shape in a sane range."""
    k = _n_free(spec)
    bounds = [(-30.0, 30.0)] * k
    if spec.variance_kind == "eGARCH":
        q = spec.garch_order[1]
        start = 1 + spec.arma_order[0] + spec.arma_order[1] + 1
        for j in range(start, start + 2 * q):
            bounds[j] = (-_EGARCH_COEF_BOUND, _EGARCH_COEF_BOUND)
    bounds[-1] = (math.log(_NU_MIN_EXCESS), math.log(_NU_MAX_EXCESS) + 0.5)
    return bounds


def _to_natural(spec: GarchSpec, theta: np.ndarray) -> GarchParams:
    p_ar, q_ma = spec.arma_order
    p, q = spec.garch_order
    i = 0
    mu = theta[i]
    i += 1
    ar = theta[i : i + p_ar]
    i += p_ar
    ma = theta[i : i + q_ma]
    i += q_ma
    if spec.variance_kind == "eGARCH":
        omega = theta[i]
        i += 1
        alpha = theta[i : i + q]
        i += q
        gamma = theta[i : i + q]
        i += q
        beta = _PERSIST_CAP * np.tanh(theta[i : i + p]) / p
        i += p
    else:
        omega = math.exp(theta[i])
        i += 1
        n_comp = q + p + (q if spec.variance_kind == "gjrGARCH" else 0)
        c = theta[i : i + n_comp]
        i += n_comp
        ec = np.exp(c - max(0.0, c.max()))
        w = _PERSIST_CAP * ec / (math.exp(-max(0.0, c.max())) + ec.sum())
        alpha = w[:q]
        if spec.variance_kind == "gjrGARCH":
            gamma = 2.0 * w[q : 2 * q]
            beta = w[2 * q :]
        else:
            gamma = ()
            beta = w[q:]
    nu = 2.0 + min(math.exp(theta[i]), _NU_MAX_EXCESS)
    return GarchParams(mu, tuple(ar), tuple(ma), omega, tuple(alpha), tuple(gamma), tuple(beta), nu)


def _to_theta(spec: GarchSpec, params: GarchParams) -> np.ndarray:
    out = [params.mu, *params.ar, *params.ma]
    p, q = spec.garch_order
    if spec.variance_kind == "eGARCH":
        b = np.clip(np.asarray(params.beta) * p / _PERSIST_CAP, -0.999999, 0.999999)
        out += [params.omega, *params.alpha, *params.gamma, *np.arctanh(b)]
    else:
        comps = list(params.alpha)
        if spec.variance_kind == "gjrGARCH":
            comps += [g / 2.0 for g in params.gamma]
        comps += list(params.beta)
        w = np.clip(np.asarray(comps) / _PERSIST_CAP, 1e-10, None)
        slack = max(1.0 - w.sum(), 1e-10)
        out += [math.log(params.omega), *np.log(w / slack)]
    out.append(math.log(max(params.nu - 2.0, _NU_MIN_EXCESS)))
    return np.asarray(out, dtype=float)


def _rescale(spec: GarchSpec, params: GarchParams, s: float) -> GarchParams:
    """Parameters for the series ``r * s`` given parameters for ``r``."""
    s2 = s * s
    if spec.variance_kind == "eGARCH":
        omega = params.omega + 2.0 * math.log(s) * (1.0 - sum(params.beta))
    else:
        omega = params.omega * s2
    return replace(params, mu=params.mu * s, omega=omega)


# ---------------------------------------------------------------------------
# simulation


def simulate_garch(spec: GarchSpec, params: GarchParams, n: int, seed, burn: int = 1000) -> ReturnSeries:
    """Simulate ``n`` returns (after discarding ``burn`` values)."""
    check_stationary(spec, params)
    rng = np.random.default_rng(seed)
    nu = params.nu
    z = rng.standard_t(nu, size=n + burn) * math.sqrt((nu - 2.0) / nu)
    if spec.variance_kind == "eGARCH":
        h0 = math.exp((params.omega + sum(params.gamma) * _ABS_Z_PRESAMPLE) / (1.0 - sum(params.beta)))
    else:
        h0 = params.omega / (1.0 - params.persistence(spec.variance_kind))
    gamma = params.gamma if params.gamma else (0.0,) * spec.garch_order[1]
    r, _ = _simulate(
        n + burn,
        z,
        params.mu,
        _arr(params.ar),
        _arr(params.ma),
        _KIND_CODE[spec.variance_kind],
        params.omega,
        _arr(params.alpha),
        _arr(gamma),
        _arr(params.beta),
        h0,
    )
    values = r[burn:]
    dates = np.datetime64("2000-01-01") + np.arange(n)
    return ReturnSeries("sim", dates, values)


# ---------------------------------------------------------------------------
# fitting


@dataclass
class GarchFit:
    spec: GarchSpec
    params: GarchParams
    cond_variance: np.ndarray
    std_residuals: np.ndarray
    residuals: np.ndarray
    fitted_mean: np.ndarray
    loglik: float
    aic: float
    bic: float
    mae: float
    rmse: float
    h0: float
    converged: bool = True
    diagnostics: dict = field(default_factory=dict)

    @property
    def n_params(self) -> int:
        return self.params.count(self.spec)

    @property
    def mean_params(self) -> dict:
        return {"mu": self.params.mu, "ar": list(self.params.ar), "ma": list(self.params.ma)}

    @property
    def variance_params(self) -> dict:
        named = self.params.named()
        return {k: v for k, v in named.items() if k.startswith(("omega", "alpha", "beta", "gamma"))}

    @property
    def shape(self) -> float:
        return self.params.nu

    def forecast(self) -> tuple[float, float]:
        """One-step-ahead (mean, sigma) after the last fitted observation."""
        return float(self._next[0]), float(math.sqrt(self._next[1]))

    def to_dict(self) -> dict:
        return {
            "spec": self.spec.to_dict(),
            "params": self.params.named(),
            "shape": float(self.params.nu),
            "loglik": float(self.loglik),
            "aic": float(self.aic),
            "bic": float(self.bic),
            "mae": float(self.mae),
            "rmse": float(self.rmse),
        }


def garch_loglik(returns, spec: GarchSpec, params: GarchParams, h0: float | None = None) -> float:
    """Student-t conditional log-likelihood of ``params`` on ``returns``."""
    r = _values(returns)
    h0 = float(np.var(r)) if h0 is None else h0
    _, h, eps = _run_filter(spec, params, r, h0)
    return float(_std_t_loglik(eps, h[:-1], params.nu))


def filter_series(returns, spec: GarchSpec, params: GarchParams, h0: float | None = None):
    """Run the recursion with fixed parameters; returns (mean, h, eps) with one-step extension."""
    r = _values(returns)
    h0 = float(np.var(r)) if h0 is None else h0
    return _run_filter(spec, params, r, h0)


def _values(returns) -> np.ndarray:
    if isinstance(returns, ReturnSeries):
        return returns.values
    return np.ascontiguousarray(returns, dtype=float)


def _default_start(spec: GarchSpec, r_scaled: np.ndarray) -> GarchParams:
    p_ar, q_ma = spec.arma_order
    p, q = spec.garch_order
    mu = float(np.mean(r_scaled))
    ar = (0.0,) * p_ar
    ma = (0.0,) * q_ma
    if spec.variance_kind == "eGARCH":
        beta = (0.9 / p,) * p
        gamma = (0.1,) * q
        alpha = (-0.05,) * q
        omega = -sum(gamma) * _ABS_Z_PRESAMPLE + math.log(np.var(r_scaled)) * (1 - sum(beta))
        return GarchParams(mu, ar, ma, omega, alpha, gamma, beta, 8.0)
    alpha = (0.05 / q,) * q
    gamma = (0.05 / q,) * q if spec.variance_kind == "gjrGARCH" else ()
    beta = (0.9 / p,) * p
    pers = sum(alpha) + sum(beta) + 0.5 * sum(gamma)
    omega = float(np.var(r_scaled)) * (1 - pers)
    return GarchParams(mu, ar, ma, omega, alpha, gamma, beta, 8.0)


def fit_garch(
    returns,
    spec: GarchSpec,
    n_starts: int = 5,
    start: GarchParams | None = None,
    min_obs: int = 250,
    seed: int = 0,
) -> GarchFit:
    """Maximum-likelihood fit; quasi-Newton on an unconstrained reparametrisation.

    The first start is either ``start`` or a generic default; the remaining
    ``n_starts - 1`` are random perturbations of it.  The best local optimum wins.
    """
    r = _values(returns)
    n = r.size
    if n < min_obs:
        raise DataError(f"GARCH fit needs at least {min_obs} observations, got {n}")
    scale = float(np.std(r))
    if not np.isfinite(scale) or scale == 0:
        raise DataError("returns have zero variance")
    rs = np.ascontiguousarray(r / scale)
    h0 = float(np.var(rs))

    def objective(theta):
        try:
            prm = _to_natural(spec, theta)
            _, h, eps = _run_filter(spec, prm, rs, h0)
            ll = _std_t_loglik(eps, h[:-1], prm.nu)
        except (OverflowError, ValueError, ZeroDivisionError):
            return 1e6
        if not np.isfinite(ll):
            return 1e6
        return -ll / n

    if start is not None:
        theta0 = _to_theta(spec, _rescale(spec, start, 1.0 / scale))
    else:
        theta0 = _to_theta(spec, _default_start(spec, rs))
    k = theta0.size
    bounds = _theta_bounds(spec)
    lo, hi = np.array(bounds).T
    rng = np.random.default_rng(seed)
    best = None
    attempts = []
    for i in range(max(1, n_starts)):
        if i == 0:
            x0 = theta0
        else:
            x0 = theta0 + rng.normal(scale=0.5, size=k)
            x0[0] = theta0[0]
        x0 = np.clip(x0, lo + 1e-6, hi - 1e-6)
        try:
            res = optimize.minimize(objective, x0, method="L-BFGS-B", bounds=bounds, options={"maxiter": 2000})
        except (FloatingPointError, ValueError) as exc:
            attempts.append(str(exc))
            continue
        attempts.append({"fun": float(res.fun), "success": bool(res.success), "nit": int(res.nit)})
        if np.isfinite(res.fun) and res.fun < 1e5 and (best is None or res.fun < best.fun):
            best = res
    if best is None:
        raise FitError(f"{spec.label}: optimizer failed from every start", {"attempts": attempts})
    prm_scaled = _to_natural(spec, best.x)
    params = _rescale(spec, prm_scaled, scale)
    try:
        check_stationary(spec, params)
    except DomainError as exc:
        raise FitError(f"{spec.label}: optimum violates constraints ({exc})", {"attempts": attempts})
    return _assemble_fit(spec, params, r, float(np.var(r)), converged=bool(best.success), diagnostics={"attempts": attempts})


def _assemble_fit(spec, params, r, h0, converged=True, diagnostics=None) -> GarchFit:
    mean, h, eps = _run_filter(spec, params, r, h0)
    ll = float(_std_t_loglik(eps, h[:-1], params.nu))
    n = r.size
    k = params.count(spec)
    sigma = np.sqrt(h[:-1])
    fit = GarchFit(
        spec=spec,
        params=params,
        cond_variance=h[:-1].copy(),
        std_residuals=eps / sigma,
        residuals=eps.copy(),
        fitted_mean=mean[:-1].copy(),
        loglik=ll,
        aic=-2.0 * ll / n + 2.0 * k / n,
        bic=-2.0 * ll / n + k * math.log(n) / n,
        mae=float(np.mean(np.abs(np.abs(r) - sigma))),
        rmse=float(np.sqrt(np.mean((np.abs(r) - sigma) ** 2))),
        h0=h0,
        converged=converged,
        diagnostics=diagnostics or {},
    )
    fit._next = (mean[-1], h[-1])
    return fit


def select_model(returns, candidates: Sequence[GarchSpec], **fit_kwargs):
    """Fit every candidate; best = lowest AIC, ties by BIC, then RMSE, then input order."""
    if not candidates:
        raise SelectionError("no candidate specifications")
    rows = []
    fits = []
    for i, spec in enumerate(candidates):
        try:
            fit = fit_garch(returns, spec, **fit_kwargs)
        except (FitError, DataError) as exc:
            rows.append({"model": spec.label, "kind": spec.variance_kind, "error": str(exc)})
            continue
        fits.append((fit.aic, fit.bic, fit.rmse, i, fit))
        rows.append(
            {"model": spec.label, "kind": spec.variance_kind, "aic": fit.aic, "bic": fit.bic, "mae": fit.mae, "rmse": fit.rmse}
        )
    if not fits:
        raise SelectionError("every candidate specification failed to fit")
    fits.sort(key=lambda t: t[:4])
    return fits[0][4], rows


def select_arma_order(returns, max_order: tuple = (8, 8)) -> tuple[int, int]:
    """ARMA order with the lowest Gaussian conditional-sum-of-squares BIC."""
    r = _values(returns)
    n = r.size
    scale = float(np.std(r)) or 1.0
    rs = np.ascontiguousarray(r / scale)
    best = None
    for p_ar in range(max_order[0] + 1):
        for q_ma in range(max_order[1] + 1):
            k = 1 + p_ar + q_ma

            def sse(theta, p_ar=p_ar, q_ma=q_ma):
                eps = _css_residuals(rs, theta[0], theta[1 : 1 + p_ar], theta[1 + p_ar :])
                val = float(eps @ eps)
                return val / n if np.isfinite(val) and val < 1e12 else 1e12

            x0 = np.zeros(k)
            x0[0] = rs.mean()
            res = optimize.minimize(sse, x0, method="L-BFGS-B", bounds=[(None, None)] + [(-0.99, 0.99)] * (k - 1))
            sigma2 = max(res.fun, 1e-300)
            bic = n * math.log(sigma2) + (k + 1) * math.log(n)
            if best is None or bic < best[0] - 1e-9:
                best = (bic, (p_ar, q_ma))
    return best[1]


# ---------------------------------------------------------------------------
# rolling forecasts


@dataclass
class RollingForecast:
    dates: np.ndarray
    mean: np.ndarray
    sigma: np.ndarray
    nu: np.ndarray
    refit: np.ndarray  # True where parameters were re-estimated
    failed: np.ndarray  # True where a refit failed and previous parameters were carried
    n_estimations: int


def rolling_forecast(
    returns: ReturnSeries,
    spec: GarchSpec,
    window: int = 500,
    refit_stride: int = 10,
    n_starts: int = 2,
) -> RollingForecast:
    """One-step-ahead mean/sigma for every t in ``[window, n)``.

    Parameters are re-estimated on the trailing ``window`` observations every
    ``refit_stride`` steps and held fixed in between, with the variance
    recursion filtered forward from the start of the latest estimation window.
    """
    r = _values(returns)
    n = r.size
    if window < 250:
        raise DataError("rolling window must be at least 250 observations")
    if refit_stride < 1:
        raise DataError("refit stride must be >= 1")
    if n <= window:
        raise DataError("series shorter than the rolling window")
    m = n - window
    mean = np.empty(m)
    sigma = np.empty(m)
    nu = np.empty(m)
    refit = np.zeros(m, dtype=bool)
    failed = np.zeros(m, dtype=bool)
    params = None
    est_start = 0
    h0 = None
    n_est = 0
    for k, t in enumerate(range(window, n)):
        if k % refit_stride == 0:
            seg = r[t - window : t]
            try:
                fit = fit_garch(seg, spec, n_starts=n_starts if params is None else 1, start=params)
                params, est_start, h0 = fit.params, t - window, fit.h0
                refit[k] = True
                n_est += 1
            except (FitError, DataError):
                if params is None:
                    raise
                failed[k] = True
        mu_path, h_path, _ = _run_filter(spec, params, np.ascontiguousarray(r[est_start:t]), h0)
        mean[k] = mu_path[-1]
        sigma[k] = math.sqrt(h_path[-1])
        nu[k] = params.nu
    dates = returns.dates[window:] if isinstance(returns, ReturnSeries) else np.arange(window, n)
    return RollingForecast(dates, mean, sigma, nu, refit, failed, n_est)


def news_impact(params: GarchParams, z: np.ndarray, log_h_prev: float = 0.0) -> np.ndarray:
    """eGARCH conditional variance as a function of the last standardized shock."""
    lh = params.omega + params.gamma[0] * np.abs(z) + params.alpha[0] * z + params.beta[0] * log_h_prev
    return np.exp(lh)


def t_scale(nu: float) -> float:
    """Factor mapping a Student-t(nu) draw to unit variance."""
    return math.sqrt((nu - 2.0) / nu)


def std_t_logpdf(z: np.ndarray, nu: float) -> np.ndarray:
    c = special.gammaln(0.5 * (nu + 1)) - special.gammaln(0.5 * nu) - 0.5 * np.log(np.pi * (nu - 2))
    return c - 0.5 * (nu + 1) * np.log1p(z**2 / (nu - 2))
