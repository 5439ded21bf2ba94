"""`marp sweep`: one run per value of a swept parameter."""

import argparse
import asyncio
import logging
from pathlib import Path

from marp.models.enums import RateMode, SweepParam
from marp.services.config_loader import load_config
from marp.services.export import write_sweep_csv
from marp.services.sweep import grid, run_sweep
from marp.settings import MarpSettings

logger = logging.getLogger(__name__)


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("sweep", help="Sweep one parameter of a config")
    parser.add_argument("config", type=Path, help="Base experiment config JSON")
    parser.add_argument(
        "--param", type=SweepParam, choices=list(SweepParam), required=True
    )
    parser.add_argument("--from", dest="start", type=float, required=True)
    parser.add_argument("--to", dest="stop", type=float, required=True)
    parser.add_argument("--steps", type=int, default=10, help="Grid size (default: 10)")
    parser.add_argument(
        "--coord",
        type=int,
        default=0,
        help="Start coordinate for start-coordinate sweeps (default: 0)",
    )
    parser.add_argument(
        "--rate-mode", type=RateMode, choices=list(RateMode), default=RateMode.ITERATION
    )
    parser.add_argument("--window", type=int, default=30, help="Rate fit window")
    parser.add_argument(
        "--out", type=Path, default=Path("sweep.csv"), help="Output CSV path"
    )
    parser.add_argument(
        "--workers",
        type=int,
        default=None,
        help="Concurrent runs (default: MARP_SWEEP_WORKERS or 4)",
    )
    parser.set_defaults(func=cmd_sweep)


def cmd_sweep(args: argparse.Namespace, settings: MarpSettings) -> int:
    config = load_config(args.config, settings)
    values = grid(args.start, args.stop, args.steps)
    rows = asyncio.run(
        run_sweep(
            config,
            args.param,
            values,
            workers=args.workers or settings.sweep_workers,
            coord=args.coord,
            window=args.window,
            mode=args.rate_mode,
        )
    )
    write_sweep_csv(rows, args.out)
    logger.info("Wrote %d sweep rows to %s", len(rows), args.out)
    return 0
