"""Command-line interface: run / sweep / report / selftest.

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 acceptance-check (selftest) failure.
"""

from __future__ import annotations

import argparse
import sys

from . import __version__
from .errors import ConfigError, PricelabError
from .runner import WORKERS_ENV, report, run, selftest, sweep

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_ACCEPTANCE = 4


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pricelab",
                                description="Late-time tail experiments on black-hole backgrounds")
    p.add_argument("--version", action="version", version=f"pricelab {__version__}")
    sub = p.add_subparsers(dest="verb", required=True)

    pr = sub.add_parser("run", help="execute one experiment config")
    pr.add_argument("config")
    pr.add_argument("--in-place", action="store_true",
                    help="reuse the run directory instead of timestamping a new one")
    pr.add_argument("--out-dir", default=None, help="override the output directory")

    ps = sub.add_parser("sweep", help="run the cross product of the [sweep] ranges")
    ps.add_argument("config")
    ps.add_argument("--out-dir", default=None)
    ps.add_argument("--workers", type=int, default=None,
                    help=f"worker processes (default: ${WORKERS_ENV} or cpu count)")

    pp = sub.add_parser("report", help="summarize a run or sweep directory")
    pp.add_argument("run_dir")

    sub.add_parser("selftest", help="fast built-in numerical checks")
    return p


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.verb == "run":
            run_dir = run(args.config, in_place=args.in_place, out_dir=args.out_dir)
            print(run_dir)
            return EXIT_OK
        if args.verb == "sweep":
            sweep_dir = sweep(args.config, out_dir=args.out_dir, workers=args.workers)
            print(sweep_dir)
            return EXIT_OK
        if args.verb == "report":
            print(report(args.run_dir))
            return EXIT_OK
        if args.verb == "selftest":
            return EXIT_OK if selftest(verbose=True) else EXIT_ACCEPTANCE
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except PricelabError as e:
        print(f"numerical failure: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
