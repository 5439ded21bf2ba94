"""Relaxation parameter sequences and their metadata."""

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from marp.errors import InvalidParameterError, ScheduleExhaustedError
from marp.models.enums import Exactness
from marp.models.schemas import (
    ConstantSchedule,
    DyadicRatioSchedule,
    DyadicSqrtSchedule,
    ExplicitSchedule,
    ExplicitTail,
    GeometricSchedule,
    HarmonicSchedule,
    MonotoneToLimitSchedule,
    ScheduleSpec,
)

logger = logging.getLogger(__name__)

DEFAULT_HORIZON = 10_000

# Smallest normal double. Values that underflow below it are raised to it so
# every term stays in (0, 1].
VALUE_FLOOR = float(np.finfo(np.float64).tiny)


def value(schedule: ScheduleSpec, n: int) -> float:
    """The n-th relaxation parameter, n >= 0."""
    if n < 0:
        raise InvalidParameterError(f"schedule index must be nonnegative, got {n}")
    return max(_raw_value(schedule, n), VALUE_FLOOR)


def _raw_value(schedule: ScheduleSpec, n: int) -> float:
    if isinstance(schedule, ConstantSchedule):
        return schedule.value
    if isinstance(schedule, GeometricSchedule):
        return schedule.initial * schedule.ratio**n
    if isinstance(schedule, MonotoneToLimitSchedule):
        return schedule.limit + (schedule.initial - schedule.limit) * schedule.decay**n
    if isinstance(schedule, DyadicSqrtSchedule):
        # 1 - sqrt(r) = (1 - r) / (1 + sqrt(r)) avoids cancellation for large n
        delta = schedule.delta
        shrink = 2.0 ** -(n + 1) / (delta + 2.0**-n)
        return shrink / (1.0 + math.sqrt(1.0 - shrink))
    if isinstance(schedule, DyadicRatioSchedule):
        return 2.0 ** -(n + 1) / (1.0 + 2.0**-n)
    if isinstance(schedule, HarmonicSchedule):
        return schedule.c / (n + 2)
    if isinstance(schedule, ExplicitSchedule):
        return _explicit_value(schedule, n)
    raise InvalidParameterError(f"Unknown schedule {schedule!r}")


def _explicit_value(schedule: ExplicitSchedule, n: int) -> float:
    values = schedule.values
    if n < len(values):
        return values[n]
    tail = schedule.tail
    if tail is None:
        raise ScheduleExhaustedError(
            f"explicit schedule has {len(values)} values and no tail rule (n={n})"
        )
    if tail.rule == "hold":
        return values[-1]
    assert tail.ratio is not None
    return values[-1] * tail.ratio ** (n - len(values) + 1)


def values(schedule: ScheduleSpec, count: int) -> np.ndarray:
    return np.array([value(schedule, n) for n in range(count)])


@dataclass(frozen=True)
class ScheduleMeta:
    initial: float
    limit: float
    monotone: bool
    sup_ratio: float
    exactness: Exactness


def successive_ratios(seq: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Indices n and ratios s_{n+1} / s_n, skipping terms at VALUE_FLOOR."""
    index = np.flatnonzero(seq[1:] > VALUE_FLOOR)
    if not len(index):
        index = np.array([0])
    return index, seq[index + 1] / seq[index]


def _ratio_scan(schedule: ScheduleSpec, horizon: int) -> float:
    _, ratios = successive_ratios(values(schedule, horizon + 2))
    return float(np.max(ratios))


def describe(schedule: ScheduleSpec, horizon: int = DEFAULT_HORIZON) -> ScheduleMeta:
    """Initial value, limit, monotonicity and sup of successive ratios.

    Constant, Geometric and the dyadic forms have a closed-form sup: the
    dyadic ratios decrease in n, so the sup is the first ratio. Explicit lists
    with a tail rule are exact too. The rest are scanned over the horizon.
    """
    if horizon < 1:
        raise InvalidParameterError("horizon must be at least 1")
    first = value(schedule, 0)

    if isinstance(schedule, ConstantSchedule):
        return ScheduleMeta(first, first, True, 1.0, Exactness.ANALYTIC)
    if isinstance(schedule, GeometricSchedule):
        return ScheduleMeta(first, 0.0, True, schedule.ratio, Exactness.ANALYTIC)
    if isinstance(schedule, (DyadicSqrtSchedule, DyadicRatioSchedule)):
        return ScheduleMeta(
            first, 0.0, True, value(schedule, 1) / first, Exactness.ANALYTIC
        )
    if isinstance(schedule, MonotoneToLimitSchedule):
        return ScheduleMeta(
            first,
            schedule.limit,
            True,
            _ratio_scan(schedule, horizon),
            Exactness.NUMERIC,
        )
    if isinstance(schedule, HarmonicSchedule):
        return ScheduleMeta(
            first, 0.0, True, _ratio_scan(schedule, horizon), Exactness.NUMERIC
        )
    if isinstance(schedule, ExplicitSchedule):
        return _describe_explicit(schedule)
    raise InvalidParameterError(f"Unknown schedule {schedule!r}")


def _describe_explicit(schedule: ExplicitSchedule) -> ScheduleMeta:
    seq = np.array(schedule.values)
    ratios = list(seq[1:] / seq[:-1])
    tail: Optional[ExplicitTail] = schedule.tail
    monotone = bool(np.all(np.diff(seq) <= 0))
    if tail is None:
        return ScheduleMeta(
            float(seq[0]),
            float(seq[-1]),
            monotone,
            max(ratios, default=1.0),
            Exactness.NUMERIC,
        )
    if tail.rule == "hold":
        ratios.append(1.0)
        limit = float(seq[-1])
    else:
        assert tail.ratio is not None
        ratios.append(tail.ratio)
        limit = 0.0
    return ScheduleMeta(
        float(seq[0]), limit, monotone, float(max(ratios)), Exactness.ANALYTIC
    )


@dataclass(frozen=True)
class SchedulePairMeta:
    alpha0: float
    alpha_inf: float
    sup_ratio: float
    exactness: Exactness
    horizon: int


def pair_meta(
    lam: ScheduleSpec, mu: ScheduleSpec, horizon: int = DEFAULT_HORIZON
) -> SchedulePairMeta:
    lam_meta = describe(lam, horizon)
    mu_meta = describe(mu, horizon)
    exact = (
        lam_meta.exactness == Exactness.ANALYTIC
        and mu_meta.exactness == Exactness.ANALYTIC
    )
    return SchedulePairMeta(
        alpha0=max(lam_meta.initial, mu_meta.initial),
        alpha_inf=min(lam_meta.limit, mu_meta.limit),
        sup_ratio=max(lam_meta.sup_ratio, mu_meta.sup_ratio),
        exactness=Exactness.ANALYTIC if exact else Exactness.NUMERIC,
        horizon=horizon,
    )


def parse_flag(text: str) -> ScheduleSpec:
    """Parse the compact CLI form, e.g. const:0.5, geom:0.5:0.9, harmonic:1.

    Explicit lists use explicit:0.8,0.4,0.3[:hold|:geom:0.5].
    """
    kind, _, rest = text.partition(":")
    args = rest.split(":") if rest else []
    try:
        if kind == "const":
            return ConstantSchedule(value=float(args[0]))
        if kind == "geom":
            return GeometricSchedule(initial=float(args[0]), ratio=float(args[1]))
        if kind == "monotone":
            return MonotoneToLimitSchedule(
                initial=float(args[0]), limit=float(args[1]), decay=float(args[2])
            )
        if kind == "dyadic-sqrt":
            return DyadicSqrtSchedule(delta=float(args[0]) if args else 1.0)
        if kind == "dyadic-ratio":
            return DyadicRatioSchedule()
        if kind == "harmonic":
            return HarmonicSchedule(c=float(args[0]) if args else 1.0)
        if kind == "explicit":
            listed = [float(v) for v in args[0].split(",")]
            tail = None
            if len(args) >= 2 and args[1] == "hold":
                tail = ExplicitTail(rule="hold")
            elif len(args) >= 3 and args[1] == "geom":
                tail = ExplicitTail(rule="geometric", ratio=float(args[2]))
            return ExplicitSchedule(values=listed, tail=tail)
    except (IndexError, ValueError) as e:
        raise InvalidParameterError(f"Cannot parse schedule {text!r}: {e}") from e
    raise InvalidParameterError(f"Unknown schedule kind {kind!r} in {text!r}")
