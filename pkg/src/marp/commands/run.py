"""`marp run`: one solver run to trajectory.csv and summary.json."""

import argparse
import logging
import sys
from pathlib import Path

from marp.models.enums import RateMode
from marp.services.config_loader import load_config
from marp.services.export import (
    EXIT_CODES,
    summarize,
    to_json,
    write_summary_json,
    write_trajectory_csv,
)
from marp.services.solver import MarpConfig, run
from marp.settings import MarpSettings

logger = logging.getLogger(__name__)


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("run", help="Run the solver on a config file")
    parser.add_argument("config", type=Path, help="Experiment config JSON")
    parser.add_argument(
        "--out-dir",
        type=Path,
        default=Path("out"),
        help="Directory for trajectory.csv and summary.json (default: out)",
    )
    parser.add_argument(
        "--rate-mode",
        type=RateMode,
        choices=list(RateMode),
        default=RateMode.ITERATION,
        help="Gap sequence used for the empirical rate (default: iteration)",
    )
    parser.add_argument("--window", type=int, default=30, help="Rate fit window")
    parser.set_defaults(func=cmd_run)


def cmd_run(args: argparse.Namespace, settings: MarpSettings) -> int:
    config = load_config(args.config, settings)
    trajectory = run(MarpConfig.from_experiment(config))
    summary = summarize(trajectory, window=args.window, mode=args.rate_mode)

    out_dir: Path = args.out_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    write_trajectory_csv(trajectory, out_dir / "trajectory.csv")
    write_summary_json(summary, out_dir / "summary.json")

    sys.stdout.write(to_json(summary).decode() + "\n")
    return EXIT_CODES[summary.status]
