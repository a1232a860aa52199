"""Command-line entry point.

Exit codes: 0 success, 1 configuration error, 2 data error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .config import validate_config
from .errors import ConfigError, DataError, NumericError
from .pipeline import STAGES, run_pipeline

_COMMANDS = {
    "analyze": None,
    "diagnostics": "diagnostics",
    "fit-garch": "garch",
    "fit-marginals": "marginals",
    "fit-copulas": "copulas",
    "risk": "risk",
    "spillover": "spillover",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tailrisk", description="GARCH / EVT / copula tail-risk pipeline")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, stage in _COMMANDS.items():
        p = sub.add_parser(name, help="full pipeline" if stage is None else f"run the {stage} stage and its inputs")
        p.add_argument("--config", required=True, help="TOML configuration file")
        p.add_argument("--seed", type=int, help="override the master seed")
        p.add_argument("--out", help="override the output directory")
        if stage is None:
            p.add_argument("--stage", choices=STAGES, help="stop after this stage (prerequisites included)")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    stage = _COMMANDS[args.command] or getattr(args, "stage", None)
    try:
        cfg = validate_config(args.config)
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError([("--seed", "must be non-negative")])
            cfg.seed = args.seed
        if args.out is not None:
            # data paths stay relative to the config file, --out to the cwd
            cfg.data = {a: str(cfg.data_path(a).resolve()) for a in cfg.data}
            cfg.out = args.out
            cfg.base_dir = "."
        ctx = run_pipeline(cfg, stage)
    except ConfigError as exc:
        for key, why in exc.problems:
            print(f"config error: {key}: {why}" if key else f"config error: {why}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error{_where(exc)}: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"numeric failure{_where(exc)}: {exc}", file=sys.stderr)
        return 3
    print(f"reports written to {ctx.out}")
    return 0


def _where(exc) -> str:
    stage = getattr(exc, "stage", None)
    return f" in stage {stage}" if stage else ""


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
