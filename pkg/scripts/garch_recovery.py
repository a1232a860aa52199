"""Monte Carlo study: how well does the t-GARCH MLE recover simulated parameters?

Prints mean bias, RMSE and the share of seeds with every mean/variance
parameter within a tolerance, per model kind.
"""

import argparse
import time

import numpy as np

from tailrisk.garch import GarchParams, GarchSpec, fit_garch, simulate_garch

TRUE = {
    "sGARCH": GarchParams(0.0, (), (), 0.05, (0.10,), (), (0.85,), 8.0),
    "eGARCH": GarchParams(0.0, (), (), -0.12, (-0.08,), (0.15,), (0.95,), 8.0),
    "gjrGARCH": GarchParams(0.0, (), (), 0.05, (0.05,), (0.10,), (0.85,), 8.0),
}


def flat(p: GarchParams):
    return np.array([p.mu, p.omega, *p.alpha, *p.gamma, *p.beta, p.nu])


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=10_000)
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--tol", type=float, default=0.05)
    ap.add_argument("--kinds", nargs="+", default=list(TRUE))
    args = ap.parse_args()
    for kind in args.kinds:
        spec, prm = GarchSpec(kind), TRUE[kind]
        truth = flat(prm)
        est = []
        t0 = time.perf_counter()
        for s in range(args.seeds):
            est.append(flat(fit_garch(simulate_garch(spec, prm, args.n, seed=s), spec).params))
        est = np.array(est)
        err = est - truth
        hit = np.mean(np.all(np.abs(err[:, :-1]) <= args.tol, axis=1))
        print(f"{kind}: {args.seeds} fits in {time.perf_counter() - t0:.1f}s, all within {args.tol}: {hit:.0%}")
        print("  true ", np.array2string(truth, precision=4))
        print("  bias ", np.array2string(err.mean(axis=0), precision=4))
        print("  rmse ", np.array2string(np.sqrt((err**2).mean(axis=0)), precision=4))


if __name__ == "__main__":
    main()
