"""VAR(p) estimation and generalized forecast-error variance decomposition.

The decomposition share of asset ``k`` in the H-step forecast-error variance of
asset ``j`` is::

    g[j, k] = sigma_kk^-1 sum_{h<H} (e_j' A_h S e_k)^2 / sum_{h<H} e_j' A_h S A_h' e_j

with ``A_h`` the moving-average matrices and ``S`` the innovation covariance.
Rows are normalised to one; spillover indices are read off the normalised
matrix.
"""

from __future__ import annotations

import csv
import json
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .data_ingest import ReturnSeries
from .errors import AlignmentError, DataError, NumericError


@dataclass
class VarModel:
    p: int
    coefficients: np.ndarray  # (p, n, n); coefficients[i] multiplies y_{t-i-1}
    intercept: np.ndarray
    sigma: np.ndarray
    n_vars: int
    n_obs: int
    stderr: np.ndarray | None = None  # same shape as coefficients
    names: tuple = ()

    def companion_radius(self) -> float:
        if self.p == 0:
            return 0.0
        n, p = self.n_vars, self.p
        comp = np.zeros((n * p, n * p))
        comp[:n, :] = np.hstack(list(self.coefficients))
        comp[n:, :-n] = np.eye(n * (p - 1))
        return float(np.max(np.abs(np.linalg.eigvals(comp))))


def _stack(returns) -> tuple[np.ndarray, tuple, np.ndarray | None]:
    if isinstance(returns, np.ndarray):
        y = np.asarray(returns, dtype=float)
        return y, tuple(f"y{i}" for i in range(y.shape[1])), None
    series = list(returns)
    if not series:
        raise DataError("no return series given")
    if isinstance(series[0], ReturnSeries):
        d0 = series[0].dates
        for s in series[1:]:
            if not np.array_equal(s.dates, d0):
                raise AlignmentError("VAR inputs must share one calendar")
        return np.column_stack([s.values for s in series]), tuple(s.asset_id for s in series), d0
    y = np.asarray(series, dtype=float)
    return y, tuple(f"y{i}" for i in range(y.shape[1])), None


def fit_var(returns, p: int = 1) -> VarModel:
    """Equation-by-equation least squares with an intercept."""
    y, names, _ = _stack(returns)
    if y.ndim != 2:
        raise DataError("VAR input must be a (T, n) panel")
    T, n = y.shape
    if p < 0:
        raise DataError("lag order must be non-negative")
    if T <= n * p + 10:
        raise DataError(f"need T > n*p + 10 observations, got T={T}")
    Y = y[p:]
    X = np.ones((T - p, 1 + n * p))
    for i in range(p):
        X[:, 1 + i * n : 1 + (i + 1) * n] = y[p - i - 1 : T - i - 1]
    if np.linalg.matrix_rank(X) < X.shape[1]:
        raise NumericError("VAR regressors are rank deficient")
    xtx_inv = np.linalg.inv(X.T @ X)
    B = xtx_inv @ X.T @ Y
    resid = Y - X @ B
    dof = (T - p) - n * p - 1
    sigma = resid.T @ resid / dof
    sigma = 0.5 * (sigma + sigma.T)
    coefs = np.array([B[1 + i * n : 1 + (i + 1) * n].T for i in range(p)]).reshape(p, n, n)
    se_full = np.sqrt(np.outer(np.diag(xtx_inv), np.diag(sigma)))
    stderr = np.array([se_full[1 + i * n : 1 + (i + 1) * n].T for i in range(p)]).reshape(p, n, n)
    model = VarModel(p, coefs, B[0].copy(), sigma, n, T - p, stderr, names)
    rad = model.companion_radius()
    if rad >= 1.0:
        warnings.warn(f"VAR companion spectral radius {rad:.4f} >= 1; forecasts are explosive", stacklevel=2)
    return model


def ma_coefficients(model: VarModel, H: int) -> np.ndarray:
    """Moving-average matrices A_0..A_H stacked as an (H+1, n, n) array."""
    if H < 0:
        raise DataError("horizon must be non-negative")
    n = model.n_vars
    A = np.zeros((H + 1, n, n))
    A[0] = np.eye(n)
    for h in range(1, H + 1):
        for i in range(1, min(h, model.p) + 1):
            A[h] += model.coefficients[i - 1] @ A[h - i]
    return A


@dataclass
class SpilloverTable:
    matrix: np.ndarray  # row-normalised shares
    horizon: int
    names: tuple = ()
    raw: np.ndarray | None = field(default=None, repr=False)

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def _offdiag(self) -> np.ndarray:
        return self.matrix - np.diag(np.diag(self.matrix))

    @property
    def from_others(self) -> np.ndarray:
        return self._offdiag().sum(axis=1)

    @property
    def to_others(self) -> np.ndarray:
        return self._offdiag().sum(axis=0)

    @property
    def to_others_incl_own(self) -> np.ndarray:
        return self.matrix.sum(axis=0)

    @property
    def net(self) -> np.ndarray:
        return self.to_others - self.from_others

    @property
    def total_index(self) -> float:
        """Off-diagonal share of total forecast-error variance, in percent."""
        return float(100.0 * self._offdiag().sum() / self.matrix.sum())

    def to_dict(self) -> dict:
        names = list(self.names)
        return {
            "assets": names,
            "horizon": self.horizon,
            "matrix": [[float(v) for v in row] for row in self.matrix],
            "from_others": dict(zip(names, map(float, self.from_others))),
            "to_others": dict(zip(names, map(float, self.to_others))),
            "to_others_incl_own": dict(zip(names, map(float, self.to_others_incl_own))),
            "net": dict(zip(names, map(float, self.net))),
            "total_index": self.total_index,
        }

    def layout_rows(self, digits: int = 2) -> list[list[str]]:
        """Percentage table: matrix with a From-others column, To-others rows and the total index."""
        f = f"{{:.{digits}f}}"
        names = list(self.names) or [f"y{i}" for i in range(self.n)]
        rows = [[""] + names + ["From others"]]
        pct = 100.0 * self.matrix
        for j, name in enumerate(names):
            rows.append([name] + [f.format(v) for v in pct[j]] + [f.format(100.0 * self.from_others[j])])
        rows.append(["To others"] + [f.format(100.0 * v) for v in self.to_others] + [""])
        rows.append(["To others incl. own"] + [f.format(100.0 * v) for v in self.to_others_incl_own] + [""])
        rows.append(["Net"] + [f.format(100.0 * v) for v in self.net] + [""])
        rows.append(["Total index"] + [""] * len(names) + [f.format(self.total_index) + "%"])
        return rows

    def write_csv(self, path, digits: int = 2) -> None:
        with open(path, "w", newline="") as fh:
            csv.writer(fh, lineterminator="\n").writerows(self.layout_rows(digits))

    def write_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def gfevd(model: VarModel, H: int = 10) -> SpilloverTable:
    if H < 1:
        raise DataError("horizon must be at least 1")
    S = model.sigma
    diag = np.diag(S)
    if np.any(diag <= 0.0):
        raise NumericError("innovation variances must be positive")
    A = ma_coefficients(model, H - 1)
    AS = A @ S  # (H, n, n)
    num = np.sum(AS**2, axis=0) / diag[None, :]
    den = np.einsum("hjk,hjk->j", AS, A)  # diag of A S A'
    if np.any(den <= 0.0) or not np.all(np.isfinite(den)):
        raise NumericError("zero forecast-error variance in the decomposition")
    raw = num / den[:, None]
    mat = raw / raw.sum(axis=1, keepdims=True)
    return SpilloverTable(mat, H, model.names, raw)


@dataclass
class RollingSpillover:
    dates: np.ndarray
    tables: list
    failed: np.ndarray
    names: tuple

    @property
    def net(self) -> np.ndarray:
        out = np.full((len(self.tables), len(self.names)), np.nan)
        for i, t in enumerate(self.tables):
            if t is not None:
                out[i] = t.net
        return out

    @property
    def total(self) -> np.ndarray:
        return np.array([np.nan if t is None else t.total_index for t in self.tables])

    def write_net_csv(self, path, digits: int = 8) -> None:
        net = self.net
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["date", "asset", "net"])
            for i, d in enumerate(self.dates):
                for j, name in enumerate(self.names):
                    v = net[i, j]
                    w.writerow([str(d), name, "nan" if np.isnan(v) else f"{v:.{digits}f}"])


def rolling_spillover(returns, p: int = 1, H: int = 10, window: int = 200, stride: int = 1) -> RollingSpillover:
    """Decomposition on each trailing window; dated by the window's last day."""
    y, names, dates = _stack(returns)
    T, n = y.shape
    if window <= n * p + 10:
        raise DataError("rolling window must exceed n*p + 10")
    if window > T:
        raise DataError("rolling window longer than the sample")
    if stride < 1:
        raise DataError("stride must be >= 1")
    ends = list(range(window, T + 1, stride))
    tables, failed = [], np.zeros(len(ends), dtype=bool)
    for i, e in enumerate(ends):
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                model = fit_var(y[e - window : e], p)
            model.names = names
            tables.append(gfevd(model, H))
        except (NumericError, DataError, np.linalg.LinAlgError):
            tables.append(None)
            failed[i] = True
    if dates is None:
        out_dates = np.array(ends) - 1
    else:
        out_dates = dates[np.array(ends) - 1]
    return RollingSpillover(out_dates, tables, failed, names)


def spillover_from_series(returns: Sequence[ReturnSeries], p: int = 1, H: int = 10) -> SpilloverTable:
    return gfevd(fit_var(returns, p), H)
