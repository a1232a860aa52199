"""Regenerate the four-asset synthetic fixture (CSV prices + config.toml)."""

import argparse
from pathlib import Path

from tailrisk.fixtures import write_fixture


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--dir", default=str(Path(__file__).resolve().parents[1] / "tests" / "fixtures"))
    ap.add_argument("--days", type=int, default=760)
    ap.add_argument("--seed", type=int, default=2024)
    args = ap.parse_args()
    path = write_fixture(args.dir, n_days=args.days, seed=args.seed)
    print(f"wrote {path}")


if __name__ == "__main__":
    main()
