import argparse
import logging
import sys

from harfusion.cli import augment, evaluate, fuse, ingest, predict, report, sample, synth, train, transform
from harfusion.core.exceptions import HarfusionError
from harfusion.core.log_setup import configure_logging


logger = logging.getLogger(__name__)

COMMANDS = [synth, ingest, sample, transform, augment, train, predict, fuse, evaluate, report]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="harfusion", description="Multi-modal IMU activity recognition pipeline.")
    parser.add_argument("--log-level", help="root log level (default: HARFUSION_LOG_LEVEL or INFO)")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for command in COMMANDS:
        command.register(subparsers)
    return parser


def main(argv: list[str] | None = None) -> int:
    """
    Parse the command line, run one stage and map pipeline errors to exit codes.
    """
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level)
    try:
        return args.func(args)
    except HarfusionError as e:
        print(f"error: {e.detail}", file=sys.stderr)
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
