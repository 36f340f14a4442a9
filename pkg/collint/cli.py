"""Command line entry point: collint run | validate | list-scenarios."""
import argparse
import logging
import sys
from typing import List, Optional

from collint import __version__
from collint.config import settings
from collint.exceptions import EXIT_BRANCH, EXIT_ERROR, EXIT_OK, CollintError, InvalidArgumentError, report_error
from collint.logging_config import setup_logging
from collint.services.runner import SCENARIO_DESCRIPTIONS, parse_config, run

logger = logging.getLogger(__name__)


class ArgumentParser(argparse.ArgumentParser):
    """Reports usage errors as collint errors instead of exiting."""

    def error(self, message: str):
        raise InvalidArgumentError("arguments", " ".join(sys.argv[1:]), message)


def parse_orders(text: str) -> List[int]:
    """'0..3' or '0,1,3'."""
    try:
        if ".." in text:
            lo, hi = text.split("..", 1)
            orders = list(range(int(lo), int(hi) + 1))
        else:
            orders = [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise InvalidArgumentError("orders", text, "expected a range like 0..3 or a list like 0,1,2")
    if not orders or min(orders) < 0:
        raise InvalidArgumentError("orders", text, "orders must be non-negative")
    return sorted(set(orders))


def build_parser() -> ArgumentParser:
    parser = ArgumentParser(prog="collint", description="Interpolation generators of collision models")
    parser.add_argument("--version", action="version", version=f"collint {__version__}")
    parser.add_argument("--log-level", default=None, help=f"logging level (default {settings.LOG_LEVEL})")
    commands = parser.add_subparsers(dest="command", required=True, parser_class=ArgumentParser)

    run_parser = commands.add_parser("run", help="run a scenario config and write result tables")
    run_parser.add_argument("config", help="scenario config (JSON)")
    run_parser.add_argument("--out", default=None, help=f"output directory (default {settings.OUT_DIR})")
    run_parser.add_argument("--format", choices=["csv", "json"], default="csv")
    run_parser.add_argument("--orders", type=parse_orders, default=None, help="truncation orders, e.g. 0..3")
    run_parser.add_argument("--tol", type=float, default=None, help=f"numerical tolerance (default {settings.TOL})")
    run_parser.add_argument("--threads", type=int, default=None, help="worker threads for the dt sweep")

    validate_parser = commands.add_parser("validate", help="check a scenario config without running it")
    validate_parser.add_argument("config", help="scenario config (JSON)")

    commands.add_parser("list-scenarios", help="print the built-in scenario families")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Exit codes: 0 success, 1 invalid input or numerical failure, 2 branch failure."""
    try:
        args = build_parser().parse_args(argv)
    except CollintError as exc:
        setup_logging()
        return report_error(exc)

    setup_logging(args.log_level)

    try:
        if args.command == "list-scenarios":
            for name, description in SCENARIO_DESCRIPTIONS.items():
                print(f"{name.value:<22} {description}")
            return EXIT_OK

        config = parse_config(args.config)
        if args.command == "validate":
            print(f"{args.config}: valid {config.scenario.value} config")
            return EXIT_OK

        if args.tol is not None and not args.tol > 0:
            raise InvalidArgumentError("tol", args.tol, "must be positive")
        if args.threads is not None and args.threads < 1:
            raise InvalidArgumentError("threads", args.threads, "must be at least 1")

        report = run(
            config,
            out_dir=args.out,
            fmt=args.format,
            orders=args.orders,
            tol=args.tol,
            threads=args.threads,
        )
    except CollintError as exc:
        return report_error(exc)
    except Exception as exc:
        logger.error(f"Unexpected error: {exc}", exc_info=True)
        return EXIT_ERROR

    if report.status == "branch_failure":
        logger.error(f"Branch failure located at dt={report.divergence_dt}")
        return EXIT_BRANCH
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
