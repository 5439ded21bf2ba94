"""Orbit-level checks on recorded trajectories."""

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from numpy.typing import ArrayLike
from scipy.stats import linregress

from marp.errors import InvalidParameterError, NoDataError, NotConvergedError
from marp.models.enums import RateMode, RunStatus, TiePolicy
from marp.services.geometry import ClosedSet, relaxed_project
from marp.services.solver import Trajectory
from shared_lib.numerics import (
    MEMBERSHIP_RTOL,
    FloatArray,
    as_point,
    make_rng,
    norm,
)

logger = logging.getLogger(__name__)

_ABS_SLACK = 1e-12
_MIN_FIT_POINTS = 3
_SEGMENT_POINTS = 64


def _require_consecutive(t: Trajectory, what: str) -> None:
    if not t.consecutive:
        raise InvalidParameterError(f"{what} needs record_every = 1")


def _check_rho(rho: float, upper_open: bool = True) -> None:
    if rho < 0 or (rho >= 1 if upper_open else rho > 1):
        raise InvalidParameterError(f"rho={rho} outside [0, 1)")


def iteration_gaps(t: Trajectory) -> tuple[np.ndarray, FloatArray]:
    """Recorded n and max{g_n, h_n}."""
    return t.n.astype(np.float64), np.maximum(t.g, t.h)


def interleaved_gaps(t: Trajectory) -> tuple[np.ndarray, FloatArray]:
    """Half-step positions and gaps h_0, g_0, h_1, g_1, ..."""
    positions = np.empty(2 * len(t.n))
    positions[0::2] = 2.0 * t.n
    positions[1::2] = 2.0 * t.n + 1.0
    gaps = np.empty(2 * len(t.n))
    gaps[0::2] = t.h
    gaps[1::2] = t.g
    return positions, gaps


@dataclass(frozen=True)
class EmpiricalRate:
    rate: float
    fit_quality: float
    samples: int
    mode: RateMode
    exact_convergence: bool = False


def empirical_rate(
    t: Trajectory, window: int = 30, mode: RateMode = RateMode.ITERATION
) -> EmpiricalRate:
    """Least-squares geometric rate of the tail gaps.

    The slope of log(gap) against the step index over the last `window`
    positive gaps gives rate = exp(slope); fit_quality is R^2. When fewer
    gaps are available, all positive tail gaps are used (at least three).
    A run whose gaps reach exactly zero reports exact_convergence and rate 0.
    """
    if window < 2:
        raise InvalidParameterError("window must be at least 2")
    positions, gaps = (
        interleaved_gaps(t) if mode == RateMode.HALF_STEP else iteration_gaps(t)
    )
    if len(gaps) and gaps[-1] == 0.0:
        return EmpiricalRate(0.0, 1.0, 0, mode, exact_convergence=True)

    positive = gaps > 0.0
    xs, ys = positions[positive], np.log(gaps[positive])
    if len(xs) >= window + 2:
        xs, ys = xs[-window:], ys[-window:]
    elif len(xs) < _MIN_FIT_POINTS:
        raise NoDataError(
            f"only {len(xs)} positive gaps recorded, need at least {_MIN_FIT_POINTS}"
        )

    if np.ptp(ys) == 0.0:
        return EmpiricalRate(1.0, 1.0, len(xs), mode)
    fit = linregress(xs, ys)
    return EmpiricalRate(
        rate=math.exp(fit.slope),
        fit_quality=float(fit.rvalue**2),
        samples=len(xs),
        mode=mode,
    )


@dataclass(frozen=True)
class ContractionReport:
    r: float
    rho: float
    satisfied: tuple[bool, ...]
    holds: bool
    worst_ratio: float
    checked: int


def contraction_check(
    t: Trajectory, c: ArrayLike, r: float, rho: float
) -> ContractionReport:
    """Alternating contraction on every window (u1, u2, u3, u4) of
    y_{-1}, x_0, y_0, x_1, ...

    A window is checked when both u2 and u3 lie within r of c; it then needs
    |u3 - u4| <= rho * max{|u1 - u2|, |u2 - u3|} + 1e-12.
    """
    if not r > 0:
        raise InvalidParameterError("r must be positive")
    _check_rho(rho)
    _require_consecutive(t, "contraction_check")
    center = as_point(c)
    points = t.interleaved()
    steps = np.linalg.norm(np.diff(points, axis=0), axis=1)
    near = np.linalg.norm(points - center, axis=1) <= r

    satisfied: list[bool] = []
    worst = 0.0
    checked = 0
    for i in range(len(points) - 3):
        if not (near[i + 1] and near[i + 2]):
            satisfied.append(True)
            continue
        checked += 1
        previous = max(steps[i], steps[i + 1])
        satisfied.append(bool(steps[i + 2] <= rho * previous + _ABS_SLACK))
        if previous > 0:
            worst = max(worst, float(steps[i + 2] / previous))
        elif steps[i + 2] > 0:
            worst = math.inf
    return ContractionReport(
        r=r,
        rho=rho,
        satisfied=tuple(satisfied),
        holds=all(satisfied),
        worst_ratio=worst,
        checked=checked,
    )


def gap_envelope_check(
    t: Trajectory, M: float, rho: float, rtol: float = 1e-9
) -> bool:
    """max{g_n, h_n} <= M * rho**n * (1 + rtol) on every recorded n."""
    _check_rho(rho, upper_open=False)
    n, gaps = iteration_gaps(t)
    return bool(np.all(gaps <= M * rho**n * (1.0 + rtol)))


def abstract_radius_check(M: float, r: float, rho: float) -> bool:
    """M <= r (1 - rho) / 2, the radius hypothesis of the local convergence result."""
    if M < 0 or not r > 0:
        raise InvalidParameterError("need M >= 0 and r > 0")
    _check_rho(rho)
    return M <= r * (1.0 - rho) / 2.0


def tail_bound_check(t: Trajectory, M: float, rho: float) -> bool:
    """max{|x_n - c|, |y_n - c|} <= M (1 + rho) / (1 - rho) * rho**n for the limit c."""
    _check_rho(rho)
    if t.status.kind != RunStatus.CONVERGED or t.status.limit is None:
        raise NotConvergedError(f"trajectory ended with status {t.status.kind.value}")
    limit = t.status.limit
    distances = np.maximum(
        np.linalg.norm(t.x - limit, axis=1), np.linalg.norm(t.y - limit, axis=1)
    )
    bound = M * (1.0 + rho) / (1.0 - rho) * rho ** t.n.astype(np.float64)
    return bool(np.all(distances <= bound + _ABS_SLACK))


def _realized_theta(u: FloatArray, v: FloatArray) -> float:
    scale = norm(u) * norm(v)
    if scale == 0.0:
        return 0.0
    return min(1.0, max(0.0, float(u @ v) / scale))


def _step_factor(current: float, following: float, theta: float) -> float:
    inner = current**2 + (1.0 - current) ** 2 + 2.0 * theta * current * (1.0 - current)
    return following / current * math.sqrt(inner)


@dataclass(frozen=True)
class GapRecursionReport:
    """Indices n where the bound on h_{n+1} or on g_{n+1} fails."""

    a_violations: list[int] = field(default_factory=list)
    b_violations: list[int] = field(default_factory=list)

    @property
    def holds(self) -> bool:
        return not self.a_violations and not self.b_violations


def verify_gap_recursion(t: Trajectory, rtol: float = 1e-9) -> GapRecursionReport:
    """Check the one-step gap recursion on both half-steps.

    theta is the realized normalized inner product of the two displacements
    meeting at the current point, clipped to [0, 1].
    """
    _require_consecutive(t, "verify_gap_recursion")
    previous = t.previous_y()
    report = GapRecursionReport()
    for n in range(len(t.n) - 1):
        x, y, y_before = t.x[n], t.y[n], previous[n]
        theta_a = _realized_theta(y - x, y_before - x)
        bound = _step_factor(t.lam[n], t.lam[n + 1], theta_a) * max(t.g[n], t.h[n])
        if t.h[n + 1] > bound * (1.0 + rtol) + _ABS_SLACK:
            report.a_violations.append(n)

        x_next = t.x[n + 1]
        theta_b = _realized_theta(x_next - y, x - y)
        bound = _step_factor(t.mu[n], t.mu[n + 1], theta_b) * max(t.h[n + 1], t.g[n])
        if t.g[n + 1] > bound * (1.0 + rtol) + _ABS_SLACK:
            report.b_violations.append(n)
    if not report.holds:
        logger.warning(
            "Gap recursion failed at A-steps %s and B-steps %s",
            report.a_violations,
            report.b_violations,
        )
    return report


@dataclass(frozen=True)
class FirstStepBounds:
    beta: float
    step_a: float
    step_a_expected: float
    step_b: float
    combined_bound: float

    @property
    def holds(self) -> bool:
        slack = 1e-12 * (1.0 + self.beta)
        return (
            abs(self.step_a - self.step_a_expected) <= slack
            and max(self.step_a, self.step_b) <= self.combined_bound + slack
        )


def first_step_bounds(
    A: ClosedSet, B: ClosedSet, lam0: float, mu0: float, y_minus1: ArrayLike
) -> FirstStepBounds:
    """|x_0 - y_{-1}| = lam0 d_A(y_{-1}) and
    max{|y_0 - x_0|, |x_0 - y_{-1}|} <= a0 (1 + a0) max{d_A, d_B}(y_{-1})."""
    start = as_point(y_minus1)
    d_a, d_b = A.distance(start), B.distance(start)
    x0, _ = relaxed_project(A, start, lam0, TiePolicy.LEX_MIN)
    y0, _ = relaxed_project(B, x0, mu0, TiePolicy.LEX_MIN)
    alpha0 = max(lam0, mu0)
    beta = max(d_a, d_b)
    return FirstStepBounds(
        beta=beta,
        step_a=norm(x0 - start),
        step_a_expected=lam0 * d_a,
        step_b=norm(y0 - x0),
        combined_bound=alpha0 * (1.0 + alpha0) * beta,
    )


@dataclass(frozen=True)
class AbsorbingReport:
    absorbing: bool
    tested: int
    witness: Optional[tuple[FloatArray, FloatArray, FloatArray]] = None


def absorbing_sample_check(
    S: ClosedSet,
    A: ClosedSet,
    samples: int,
    seed: Optional[int] = None,
    center: Optional[ArrayLike] = None,
    radius: float = 10.0,
) -> AbsorbingReport:
    """Sample s in S and test that each segment [s, a], a in P_A s, stays in S.

    The witness is (s, a, p) with p the first segment point found outside S.
    """
    if samples < 1:
        raise InvalidParameterError("samples must be at least 1")
    if S.dimension != A.dimension:
        raise InvalidParameterError("S and A must share a dimension")
    anchor = np.zeros(S.dimension) if center is None else as_point(center)
    rng = make_rng(seed)
    logger.debug("Absorbing check with %d samples, seed %s", samples, seed)
    points = S.sample(rng, samples, anchor, radius)
    ts = np.linspace(0.0, 1.0, _SEGMENT_POINTS)[:, None]

    for s in points:
        for a in A.project(s).nearest:
            segment = s + ts * (a - s)
            _, distances = S.project_batch(segment)
            tol = MEMBERSHIP_RTOL * (1.0 + np.linalg.norm(segment, axis=1))
            outside = np.flatnonzero(distances > tol)
            if len(outside):
                return AbsorbingReport(
                    absorbing=False,
                    tested=len(points),
                    witness=(s.copy(), a.copy(), segment[outside[0]].copy()),
                )
    return AbsorbingReport(absorbing=True, tested=len(points))
