"""``ach-forge`` command line: run one experiment and write its report."""

from __future__ import annotations

import argparse
import logging
import sys

from .config import EXPERIMENTS, ConfigError, load_config, make_config
from .experiments import THREADS_ENV, run
from .report import emit

EXIT_PASS, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="ach-forge",
        description="Numerical checks for complex hyperbolic gluing constructions.",
        epilog=f"Exit status: 0 all checks pass, 1 numeric failure, 2 usage error. "
               f"Set {THREADS_ENV} to evaluate sample points on several threads.",
    )
    p.add_argument("experiment", choices=EXPERIMENTS)
    p.add_argument("--config", help="TOML file with experiment settings")
    p.add_argument("--seed", type=int, help="override the seed")
    p.add_argument("--out", help="output directory (default from config, else ./out)")
    p.add_argument("--n", type=int, help="complex dimension")
    p.add_argument("--N", type=int, dest="N_samples", help="sample count")
    p.add_argument("--format", action="append", choices=["csv", "json", "svg"],
                   help="output format (repeatable; default: every format)")
    p.add_argument("--quiet", action="store_true", help="only print the overall verdict")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code not in (0, None) else EXIT_PASS
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    over = {}
    if args.seed is not None:
        over["seed"] = args.seed
    if args.n is not None:
        over["n"] = args.n
    if args.N_samples is not None:
        over["N"] = args.N_samples
    if args.out is not None or args.format:
        over["output"] = {}
        if args.out is not None:
            over["output"]["dir"] = args.out
        if args.format:
            over["output"]["formats"] = args.format
    try:
        if args.config:
            cfg = load_config(args.config, args.experiment, over)
        else:
            cfg = make_config(args.experiment, over)
    except ConfigError as e:
        print(f"ach-forge: usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    try:
        report = run(cfg)
    except Exception as e:  # a failure outside the per-row guards
        print(f"ach-forge: {cfg['experiment']} failed: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_FAIL
    try:
        paths = emit(report, cfg["output"]["dir"], cfg["output"]["formats"])
    except OSError as e:
        print(f"ach-forge: {e}", file=sys.stderr)
        return EXIT_FAIL
    if not args.quiet:
        print(f"# {report.experiment}: {report.claim}")
        for c in report.checks:
            print(report.check_line(c))
        for f in report.failures:
            print(f"FLAGGED {f}")
        for p in paths:
            print(f"wrote {p}")
    print("PASS" if report.passed else "FAIL")
    return EXIT_PASS if report.passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
