"""`marp examples`: replay the worked-example catalog."""

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional

from marp.services.example_catalog import ExampleCatalog, ExampleReport, run_example
from marp.settings import MarpSettings

logger = logging.getLogger(__name__)

_COLUMNS = ("example", "case", "check", "observed", "expected", "result")


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("examples", help="Check the example catalog")
    parser.add_argument("id", nargs="?", default=None, help="Example id (default: all)")
    parser.add_argument(
        "--data-dir",
        type=Path,
        default=None,
        help="Catalog root holding examples/*.yaml (default: MARP_DATA_DIR or data)",
    )
    parser.set_defaults(func=cmd_examples)


def _format(value: object) -> str:
    if isinstance(value, float):
        return f"{value:.12g}"
    return "-" if value is None else str(value)


def format_table(reports: list[ExampleReport]) -> str:
    rows = [list(_COLUMNS)]
    for report in reports:
        for o in report.outcomes:
            check = o.check if o.target is None else f"{o.check}:{o.target}"
            expected = f"{o.relation} {_format(o.expected)}"
            if o.tolerance:
                expected += f" ±{o.tolerance:g}"
            rows.append(
                [
                    report.example_id,
                    o.case,
                    check,
                    _format(o.observed),
                    expected,
                    "PASS" if o.passed else "FAIL",
                ]
            )
    widths = [max(len(row[i]) for row in rows) for i in range(len(_COLUMNS))]
    return "\n".join(
        "  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip()
        for row in rows
    )


def cmd_examples(args: argparse.Namespace, settings: MarpSettings) -> int:
    catalog = ExampleCatalog(args.data_dir or settings.data_dir)
    example_id: Optional[str] = args.id
    if example_id is not None:
        specs = [catalog.get(example_id)]
        errors: list[str] = []
    else:
        loaded, results = catalog.load_all()
        specs = [loaded[key] for key in sorted(loaded)]
        errors = results["errors"]

    reports = [run_example(spec) for spec in specs]
    sys.stdout.write(format_table(reports) + "\n")
    for error in errors:
        sys.stderr.write(f"load error: {error}\n")

    failed = sum(not r.passed for r in reports)
    logger.info("%d of %d examples passed", len(reports) - failed, len(reports))
    return 1 if failed or errors else 0
