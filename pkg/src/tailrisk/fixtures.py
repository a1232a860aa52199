"""Synthetic four-asset price panel used for end-to-end runs and tests.

Two "crypto" assets trade every calendar day, two "index" assets on weekdays
only.  Innovations are multivariate Student-t with block correlation and each
asset follows its own GARCH-type volatility recursion, so the panel shows
volatility clustering, heavy tails and cross dependence.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from .config import PipelineConfig, RiskConfig, MarginalConfig, GarchConfig, SpilloverConfig, write_config
from .data_ingest import PriceSeries, write_price_csv

CRYPTO = ("CRYPTO_A", "CRYPTO_B")
INDEX = ("INDEX_A", "INDEX_B")

# (omega, alpha, beta, initial price) per asset, daily variance scale
_VOL = {
    "CRYPTO_A": (4e-5, 0.10, 0.85, 8000.0),
    "CRYPTO_B": (6e-5, 0.12, 0.82, 300.0),
    "INDEX_A": (2e-6, 0.08, 0.90, 2500.0),
    "INDEX_B": (3e-6, 0.09, 0.88, 1800.0),
}
_CORR = np.array(
    [
        [1.0, 0.7, 0.2, 0.2],
        [0.7, 1.0, 0.2, 0.15],
        [0.2, 0.2, 1.0, 0.6],
        [0.2, 0.15, 0.6, 1.0],
    ]
)


def synthetic_panel(n_days: int = 760, seed: int = 2024, nu: float = 5.0, start="2019-01-01") -> list[PriceSeries]:
    rng = np.random.default_rng(seed)
    names = CRYPTO + INDEX
    chol = np.linalg.cholesky(_CORR)
    g = rng.standard_normal((n_days, 4)) @ chol.T
    w = rng.chisquare(nu, size=(n_days, 1)) / nu
    z = g / np.sqrt(w) * math.sqrt((nu - 2.0) / nu)
    dates = np.datetime64(start, "D") + np.arange(n_days + 1)
    out = []
    for j, name in enumerate(names):
        omega, alpha, beta, p0 = _VOL[name]
        h = omega / (1.0 - alpha - beta)
        r = np.empty(n_days)
        for t in range(n_days):
            r[t] = math.sqrt(h) * z[t, j]
            h = omega + alpha * r[t] ** 2 + beta * h
        closes = p0 * np.exp(np.concatenate([[0.0], np.cumsum(r)]))
        if name in INDEX:
            # index levels exist on weekdays only; the weekend moves still accrue
            weekday = ((dates.astype("datetime64[D]").view("int64") - 4) % 7) < 5
            out.append(PriceSeries(name, dates[weekday], closes[weekday]))
        else:
            out.append(PriceSeries(name, dates, closes))
    return out


def fixture_config(data_files: dict, seed: int = 7) -> PipelineConfig:
    """Desk-scale settings: shorter windows and fewer bootstrap replicates."""
    return PipelineConfig(
        data=dict(data_files),
        portfolios=[["CRYPTO_A", "INDEX_A"], ["CRYPTO_B", "INDEX_B"]],
        seed=seed,
        out="reports",
        garch=GarchConfig(max_arma=[1, 1], n_starts=2),
        marginals=MarginalConfig(n_bootstrap=19, n_starts=3),
        risk=RiskConfig(window=300, refit_stride=10),
        spillover=SpilloverConfig(window=200, stride=5),
    )


def write_fixture(directory, n_days: int = 760, seed: int = 2024) -> Path:
    """Write the price CSVs plus ``config.toml`` into ``directory``; returns the config path."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    files = {}
    for series in synthetic_panel(n_days, seed):
        fname = f"{series.asset_id.lower()}.csv"
        write_price_csv(directory / fname, series)
        files[series.asset_id] = fname
    path = directory / "config.toml"
    write_config(fixture_config(files), path)
    return path
