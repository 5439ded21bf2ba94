"""Alternating relaxed projections between two closed sets."""

import logging
from collections import deque
from dataclasses import dataclass
from typing import Optional

import numpy as np
from numpy.typing import ArrayLike

from marp.errors import DimensionMismatchError, InvalidParameterError
from marp.models.enums import RunStatus, TiePolicy
from marp.models.schemas import ExperimentConfig, ScheduleSpec
from marp.services import schedules
from marp.services.geometry import ClosedSet, build_set, relaxed_project
from shared_lib.numerics import CYCLE_RTOL, STALL_RTOL, FloatArray, as_point, norm

logger = logging.getLogger(__name__)

_CYCLE_WINDOW = 32
_COLUMNS = ("n", "a", "x", "b", "y", "g", "h", "lam", "mu")


@dataclass(frozen=True)
class MarpConfig:
    set_a: ClosedSet
    set_b: ClosedSet
    lam: ScheduleSpec
    mu: ScheduleSpec
    start: FloatArray
    tie_policy: TiePolicy = TiePolicy.LEX_MIN
    max_iter: int = 100_000
    gap_tol: float = 1e-10
    cycle_detect: bool = True
    record_every: int = 1

    def __post_init__(self) -> None:
        if self.max_iter < 1:
            raise InvalidParameterError("max_iter must be at least 1")
        if not self.gap_tol > 0:
            raise InvalidParameterError("gap_tol must be positive")
        if self.record_every < 1:
            raise InvalidParameterError("record_every must be at least 1")
        if self.tie_policy == TiePolicy.ALL:
            raise InvalidParameterError("tie policy 'all' cannot drive a run")
        dims = {self.set_a.dimension, self.set_b.dimension, len(self.start)}
        if len(dims) != 1:
            raise DimensionMismatchError(
                f"setA, setB and start disagree on dimension: {sorted(dims)}"
            )

    @classmethod
    def from_experiment(cls, config: ExperimentConfig) -> "MarpConfig":
        return cls(
            set_a=build_set(config.set_a),
            set_b=build_set(config.set_b),
            lam=config.lambda_,
            mu=config.mu,
            start=as_point(config.start),
            tie_policy=config.tie_policy,
            max_iter=config.max_iter,
            gap_tol=config.gap_tol,
            cycle_detect=config.cycle_detect,
            record_every=config.record_every,
        )


@dataclass(frozen=True)
class Status:
    kind: RunStatus
    limit: Optional[FloatArray] = None
    period: Optional[int] = None
    witness: tuple[tuple[FloatArray, FloatArray], ...] = ()


def _frozen(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class Trajectory:
    """Recorded orbit.

    Row i holds iteration n[i]: a_n in P_A y_{n-1}, x_n, b_n in P_B x_n, y_n,
    the gaps g_n = |y_n - x_n| and h_n = |x_n - y_{n-1}|, and lam_n, mu_n.
    """

    start: FloatArray
    n: np.ndarray
    a: FloatArray
    x: FloatArray
    b: FloatArray
    y: FloatArray
    g: FloatArray
    h: FloatArray
    lam: FloatArray
    mu: FloatArray
    status: Status
    iterations: int
    record_every: int = 1
    final_gap: float = 0.0

    @property
    def dimension(self) -> int:
        return len(self.start)

    @property
    def consecutive(self) -> bool:
        return self.record_every == 1

    def previous_y(self) -> FloatArray:
        """y_{n-1} for each recorded row (consecutive recording only)."""
        return np.vstack([self.start[None, :], self.y[:-1]])

    def interleaved(self) -> FloatArray:
        """y_{-1}, x_0, y_0, x_1, y_1, ..."""
        points = np.empty((2 * len(self.n) + 1, self.dimension))
        points[0] = self.start
        points[1::2] = self.x
        points[2::2] = self.y
        return points


def _detect_cycle(history: deque[FloatArray], state: FloatArray) -> Optional[int]:
    """Smallest period p with state equal to the state p steps back."""
    if not history:
        return None
    recent = np.array(history)[::-1]
    matches = np.linalg.norm(recent - state, axis=1) <= CYCLE_RTOL * (1.0 + norm(state))
    hits = np.flatnonzero(matches)
    return int(hits[0]) + 1 if len(hits) else None


def run(cfg: MarpConfig) -> Trajectory:
    """Iterate x_n = (1 - lam_n) y_{n-1} + lam_n a_n, y_n = (1 - mu_n) x_n + mu_n b_n.

    Stops on a small gap, a repeated state or after max_iter iterations. A state
    that repeats with period 1 and a negligible gap counts as converged.
    """
    y_prev = cfg.start.copy()
    a_prev: Optional[FloatArray] = None
    b_prev: Optional[FloatArray] = None
    rows: dict[str, list] = {key: [] for key in _COLUMNS}
    history: deque[FloatArray] = deque(maxlen=_CYCLE_WINDOW)
    cycle_states: deque[tuple[FloatArray, FloatArray]] = deque(maxlen=_CYCLE_WINDOW)
    status = Status(RunStatus.MAX_ITER)
    gap = float("inf")
    iterations = 0

    for n in range(cfg.max_iter):
        lam_n = schedules.value(cfg.lam, n)
        mu_n = schedules.value(cfg.mu, n)
        x, a = relaxed_project(cfg.set_a, y_prev, lam_n, cfg.tie_policy, a_prev)
        y, b = relaxed_project(cfg.set_b, x, mu_n, cfg.tie_policy, b_prev)
        g_n = norm(y - x)
        h_n = norm(x - y_prev)
        gap = max(g_n, h_n)
        iterations = n + 1

        converged = gap <= cfg.gap_tol * (1.0 + norm(y))
        period = None
        state = np.concatenate([x, y])
        if cfg.cycle_detect and not converged:
            period = _detect_cycle(history, state)
            if period == 1 and gap <= STALL_RTOL * (1.0 + norm(y)):
                # Relaxation has died out below rounding; the orbit has settled.
                converged, period = True, None
        finished = converged or period is not None or n == cfg.max_iter - 1

        if n % cfg.record_every == 0 or finished:
            for key, item in zip(_COLUMNS, (n, a, x, b, y, g_n, h_n, lam_n, mu_n)):
                rows[key].append(item)

        if converged:
            status = Status(RunStatus.CONVERGED, limit=y.copy())
            break
        if period is not None:
            witness = tuple(list(cycle_states)[-period:])
            status = Status(RunStatus.CYCLE, period=period, witness=witness)
            break

        history.append(state)
        cycle_states.append((x.copy(), y.copy()))
        y_prev, a_prev, b_prev = y, a, b

    logger.info(
        "Run finished: status=%s iterations=%d final_gap=%.3e",
        status.kind.value,
        iterations,
        gap,
    )
    dimension = len(cfg.start)

    def _points(key: str) -> FloatArray:
        return _frozen(np.array(rows[key], dtype=np.float64).reshape(-1, dimension))

    def _scalars(key: str) -> np.ndarray:
        return _frozen(np.array(rows[key]))

    return Trajectory(
        start=_frozen(cfg.start.copy()),
        n=_scalars("n"),
        a=_points("a"),
        x=_points("x"),
        b=_points("b"),
        y=_points("y"),
        g=_scalars("g"),
        h=_scalars("h"),
        lam=_scalars("lam"),
        mu=_scalars("mu"),
        status=status,
        iterations=iterations,
        record_every=cfg.record_every,
        final_gap=gap,
    )


def closed_form_axes(
    start: ArrayLike, lam: ScheduleSpec, mu: ScheduleSpec, n: int
) -> tuple[FloatArray, FloatArray]:
    """x_n and y_n for A = R x {0}, B = {0} x R.

    The A-step only shrinks the second coordinate and the B-step only the first:
    x_n = (e1 prod_{i<n}(1 - mu_i), e2 prod_{i<=n}(1 - lam_i)),
    y_n = (e1 prod_{i<=n}(1 - mu_i), e2 prod_{i<=n}(1 - lam_i)).
    """
    if n < 0:
        raise InvalidParameterError("n must be nonnegative")
    xs, ys = closed_form_axes_orbit(start, lam, mu, n + 1)
    return xs[n], ys[n]


def closed_form_axes_orbit(
    start: ArrayLike, lam: ScheduleSpec, mu: ScheduleSpec, count: int
) -> tuple[FloatArray, FloatArray]:
    """Rows 0..count-1 of closed_form_axes, via cumulative products."""
    e1, e2 = as_point(start)
    lam_keep = np.cumprod(1.0 - schedules.values(lam, count))
    mu_keep = np.cumprod(1.0 - schedules.values(mu, count))
    mu_before = np.concatenate([[1.0], mu_keep[:-1]])
    xs = np.column_stack([e1 * mu_before, e2 * lam_keep])
    ys = np.column_stack([e1 * mu_keep, e2 * lam_keep])
    return xs, ys
