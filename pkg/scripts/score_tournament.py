"""Backtest tournament on simulated Student-t returns.

Historical simulation, a normal model and the correctly specified t model
forecast VaR/ES/RVaR; average scores and legal robustness are printed.
Lower scores are better.
"""

import argparse

import numpy as np

from tailrisk.data_ingest import ReturnSeries
from tailrisk.risk import (
    ForecastStream,
    RiskLevels,
    estimate_from_sample,
    evaluate_methods,
    parametric_t_estimate,
)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--nu", type=float, default=4.0)
    ap.add_argument("--window", type=int, default=500)
    ap.add_argument("--n-test", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    nu = args.nu
    x = rng.standard_t(nu, args.window + args.n_test) * np.sqrt((nu - 2) / nu) * 0.01
    levels = [RiskLevels(0.01, 0.025), RiskLevels(0.01, 0.05), RiskLevels(0.025, 0.05)]
    dates = np.datetime64("2020-01-01") + np.arange(args.n_test)
    realized = ReturnSeries("sim", dates, x[args.window :])
    hs = [estimate_from_sample(x[t - args.window : t], levels, "HS") for t in range(args.window, len(x))]
    t_right = parametric_t_estimate(0.0, 0.01, nu, levels, "t (true)")
    normal = parametric_t_estimate(0.0, 0.01, 1e6, levels, "normal")
    streams = [
        ForecastStream("HS", dates, hs),
        ForecastStream("t (true)", dates, [t_right] * args.n_test),
        ForecastStream("normal", dates, [normal] * args.n_test),
    ]
    reports, lr = evaluate_methods(realized, streams, levels)
    for name, rep in reports.items():
        print(f"{name:<10} S_VaR(1%) {rep.s_var[0.01]:.6f}  S_ES(2.5%) {rep.s_es[0.025]:.6f}  S_RVaR(1-5%) {rep.s_rvar[(0.01, 0.05)]:.6f}")
    for (meas, lvl), v in lr.items():
        print(f"LR {meas} {lvl}: {v:.4f}")


if __name__ == "__main__":
    main()
