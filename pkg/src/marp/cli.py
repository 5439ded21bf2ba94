"""Command-line entry point."""

import argparse
import logging
import sys
from typing import Optional, Sequence

from marp import __version__
from marp.commands import (
    register_cq,
    register_examples,
    register_rates,
    register_run,
    register_sweep,
)
from marp.errors import ConfigError, MarpError
from marp.settings import get_settings

logger = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="marp", description="Alternating relaxed projections between two sets"
    )
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument(
        "--log-level",
        default=None,
        help="Logging level (default: MARP_LOG_LEVEL or INFO)",
    )
    subparsers = ap.add_subparsers(dest="command", required=True)
    for register in (
        register_run,
        register_examples,
        register_rates,
        register_cq,
        register_sweep,
    ):
        register(subparsers)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    settings = get_settings()
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=(args.log_level or settings.log_level).upper(),
        format="%(asctime)s - %(levelname)s - %(filename)s - %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S",
    )
    try:
        return int(args.func(args, settings))
    except ConfigError as e:
        for pointer, message in e.problems:
            sys.stderr.write(f"{pointer or '/'}: {message}\n")
        logger.error("Config rejected")
        return 1
    except MarpError as e:
        logger.error("%s failed: %s", args.command, e)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
