"""
main.py - Command-line entry point for fiberband.

    fiberband <slice|bands|flatband|harmonic|asymptotics|scattering|agmon>
              --config run.toml [--jobs N] [--out DIR] [--format csv,json,plotdata] [--strict]

Exit codes: 0 ok, 2 configuration error, 3 numerical failure,
4 inconclusive flat-band verdict under --strict.
"""

import os
import sys
import logging
import argparse

from cli.commands import COMMANDS, is_inconclusive, run_command
from cli.config import OUTPUT_FORMATS, load_config
from cli.report import write_report
from core.errors import ConfigError, NumericalError

APP_VERSION = "1.0.0"

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_INCONCLUSIVE = 4

# FIBERBAND_LOG values and the logging levels they select
LOG_LEVELS = {
    "error": logging.ERROR,
    "warn": logging.WARNING,
    "info": logging.INFO,
    "debug": logging.DEBUG,
}


def setup_logging() -> None:
    """Configure the root logger from FIBERBAND_LOG (default: warn)."""
    name = os.environ.get("FIBERBAND_LOG", "warn").strip().lower()
    if name not in LOG_LEVELS:
        raise ConfigError(f"unknown level {name!r}, choose from {', '.join(LOG_LEVELS)}", "FIBERBAND_LOG")
    logging.basicConfig(
        level=LOG_LEVELS[name],
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fiberband",
        description="Band functions, flat bands and semiclassical checks for 2D magnetic Laplacians.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {APP_VERSION}")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, help="TOML run configuration")
    parser.add_argument("--jobs", type=int, default=os.cpu_count() or 1,
                        help="worker processes for sweeps (default: number of CPUs)")
    parser.add_argument("--out", default=None, help="output directory (overrides [output].path)")
    parser.add_argument("--format", default=None,
                        help=f"comma-separated subset of {','.join(OUTPUT_FORMATS)} (overrides [output].formats)")
    parser.add_argument("--strict", action="store_true",
                        help="exit with 4 when a flat-band verdict is inconclusive")
    return parser


def _formats(arg: str) -> list:
    formats = [f.strip() for f in arg.split(",") if f.strip()]
    if not formats:
        raise ConfigError("no formats given", "--format")
    for fmt in formats:
        if fmt not in OUTPUT_FORMATS:
            raise ConfigError(f"unknown format {fmt!r}, choose from {', '.join(OUTPUT_FORMATS)}", "--format")
    return formats


def _summary(report) -> str:
    lines = [f"fiberband {report.command}: {len(report.records)} record(s) in {report.wall_clock_seconds:.2f}s"]
    for key, value in report.verdicts.items():
        lines.append(f"  {key}: {value}")
    return "\n".join(lines)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        setup_logging()
        if args.jobs < 1:
            raise ConfigError("must be >= 1", "--jobs")
        config = load_config(args.config)
        out_dir = args.out or config.output.path
        formats = _formats(args.format) if args.format else list(config.output.formats)
        report = run_command(args.command, config, APP_VERSION, args.jobs)
        written = write_report(report, out_dir, formats)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERICAL
    except KeyboardInterrupt:
        print("\nInterrupted.", file=sys.stderr)
        return 130

    print(_summary(report))
    for path in written:
        print(f"  wrote {path}")
    if args.strict and is_inconclusive(report):
        print("inconclusive flat-band verdict (--strict)", file=sys.stderr)
        return EXIT_INCONCLUSIVE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
