"""Parameter sweeps over a base experiment config."""

import asyncio
import logging
from typing import Any, Sequence

import numpy as np
from pydantic import ValidationError

from marp.errors import InvalidParameterError
from marp.models.enums import RateMode, SweepParam
from marp.models.schemas import (
    ConstantSchedule,
    ExperimentConfig,
    GeometricSchedule,
    SweepRow,
)
from marp.services.export import summarize
from marp.services.solver import MarpConfig, run

logger = logging.getLogger(__name__)


def grid(start: float, stop: float, steps: int) -> list[float]:
    """steps evenly spaced values from start to stop; one step gives [start]."""
    if steps < 1:
        raise InvalidParameterError("steps must be at least 1")
    if steps == 1:
        return [float(start)]
    return [float(v) for v in np.linspace(start, stop, steps)]


def _with_ratio(schedule: object, ratio: float) -> GeometricSchedule:
    if not isinstance(schedule, GeometricSchedule):
        raise InvalidParameterError("an eta sweep needs geometric lambda and mu")
    return schedule.model_copy(update={"ratio": ratio})


def _update(
    config: ExperimentConfig, param: SweepParam, value: float, coord: int
) -> dict[str, Any]:
    if param == SweepParam.LAMBDA_CONST:
        return {"lambda_": ConstantSchedule(value=value)}
    if param == SweepParam.MU_CONST:
        return {"mu": ConstantSchedule(value=value)}
    if param == SweepParam.LAMBDA_MU_CONST:
        schedule = ConstantSchedule(value=value)
        return {"lambda_": schedule, "mu": schedule}
    if param == SweepParam.ETA:
        return {
            "lambda_": _with_ratio(config.lambda_, value),
            "mu": _with_ratio(config.mu, value),
        }
    if not 0 <= coord < config.dimension:
        raise InvalidParameterError(
            f"coordinate {coord} outside 0..{config.dimension - 1}"
        )
    start = list(config.start)
    start[coord] = value
    return {"start": start}


def apply_param(
    config: ExperimentConfig, param: SweepParam, value: float, coord: int = 0
) -> ExperimentConfig:
    """The config with the swept parameter set to value."""
    try:
        update = _update(config, param, value, coord)
        # model_copy skips validation, so re-validate the swept document
        document = config.model_copy(update=update).model_dump(by_alias=True)
        return ExperimentConfig.model_validate(document)
    except ValidationError as e:
        raise InvalidParameterError(f"{param.value}={value}: {e}") from e


def sweep_point(
    config: ExperimentConfig,
    param: SweepParam,
    value: float,
    coord: int = 0,
    window: int = 30,
    mode: RateMode = RateMode.ITERATION,
) -> SweepRow:
    swept = apply_param(config, param, value, coord)
    trajectory = run(MarpConfig.from_experiment(swept))
    summary = summarize(trajectory, window=window, mode=mode)
    return SweepRow(
        value=value,
        status=summary.status,
        iterations=summary.iterations,
        empirical_rate=summary.empirical_rate,
        limit=summary.limit,
    )


async def run_sweep(
    config: ExperimentConfig,
    param: SweepParam,
    values: Sequence[float],
    workers: int = 4,
    coord: int = 0,
    window: int = 30,
    mode: RateMode = RateMode.ITERATION,
) -> list[SweepRow]:
    """Run every grid point in a worker thread; rows come back sorted by value."""
    if workers < 1:
        raise InvalidParameterError("workers must be at least 1")
    semaphore = asyncio.Semaphore(workers)

    async def one(value: float) -> SweepRow:
        async with semaphore:
            return await asyncio.to_thread(
                sweep_point, config, param, value, coord, window, mode
            )

    logger.info(
        "Sweeping %s over %d values with %d workers", param.value, len(values), workers
    )
    rows = await asyncio.gather(*(one(v) for v in values))
    return sorted(rows, key=lambda r: r.value)
