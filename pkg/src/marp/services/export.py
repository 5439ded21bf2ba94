"""Trajectory CSV and run summary JSON."""

import csv
import logging
from pathlib import Path
from typing import Any, Iterable, Optional

import orjson
from pydantic import BaseModel

from marp.errors import NoDataError
from marp.models.enums import RateMode, RunStatus
from marp.models.schemas import RunSummary, SweepRow
from marp.services.config_loader import JSON_OPTIONS
from marp.services.diagnostics import empirical_rate
from marp.services.solver import Trajectory

logger = logging.getLogger(__name__)


def _number(value: float) -> str:
    # repr gives the shortest string that round-trips the double
    return repr(float(value))


def trajectory_header(dimension: int) -> list[str]:
    header = ["n"]
    for name in ("a", "x", "b", "y"):
        header.extend(f"{name}{i}" for i in range(dimension))
    return header + ["gap_yx", "gap_xy_prev"]


def trajectory_rows(t: Trajectory) -> Iterable[list[str]]:
    for i, n in enumerate(t.n):
        row = [str(int(n))]
        for points in (t.a, t.x, t.b, t.y):
            row.extend(_number(v) for v in points[i])
        row.extend([_number(t.g[i]), _number(t.h[i])])
        yield row


def write_trajectory_csv(t: Trajectory, path: Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(trajectory_header(t.dimension))
        writer.writerows(trajectory_rows(t))
    logger.info("Wrote %d trajectory rows to %s", len(t.n), path)


def summarize(
    t: Trajectory, window: int = 30, mode: RateMode = RateMode.ITERATION
) -> RunSummary:
    """Status, limit and the fitted tail rate of a run."""
    rate = fit = None
    exact = False
    try:
        fitted = empirical_rate(t, window=window, mode=mode)
        rate, fit, exact = fitted.rate, fitted.fit_quality, fitted.exact_convergence
    except NoDataError:
        logger.info("Too few positive gaps for a rate fit")
    limit = t.status.limit
    return RunSummary(
        status=t.status.kind,
        iterations=t.iterations,
        limit=None if limit is None else [float(v) for v in limit],
        final_gap=t.final_gap,
        empirical_rate=rate,
        rate_mode=mode,
        fit_quality=fit,
        exact_convergence=exact,
        cycle_period=t.status.period,
    )


def to_json(model: BaseModel, extra: Optional[dict[str, Any]] = None) -> bytes:
    document = model.model_dump(mode="json")
    if extra:
        document.update(extra)
    return orjson.dumps(document, option=JSON_OPTIONS)


def write_summary_json(summary: RunSummary, path: Path) -> None:
    Path(path).write_bytes(to_json(summary) + b"\n")


SWEEP_HEADER = ["value", "status", "iterations", "empirical_rate", "limit"]


def write_sweep_csv(rows: list[SweepRow], path: Path) -> None:
    """One row per grid value, sorted by value; the limit is space separated."""
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(SWEEP_HEADER)
        for row in sorted(rows, key=lambda r: r.value):
            writer.writerow(
                [
                    _number(row.value),
                    row.status.value,
                    row.iterations,
                    "" if row.empirical_rate is None else _number(row.empirical_rate),
                    ""
                    if row.limit is None
                    else " ".join(_number(v) for v in row.limit),
                ]
            )


EXIT_CODES = {
    RunStatus.CONVERGED: 0,
    RunStatus.CYCLE: 2,
    RunStatus.MAX_ITER: 3,
}
