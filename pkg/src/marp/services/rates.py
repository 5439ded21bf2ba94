"""Rate constants and radii that certify linear convergence."""

import logging
import math
from dataclasses import dataclass
from typing import Callable, TypeVar

import numpy as np

from marp.errors import InvalidParameterError, RegularityMarginError
from marp.models.enums import CertificateKind, Exactness
from marp.models.schemas import (
    ConstantSchedule,
    GeometricSchedule,
    RateCertificate,
    ScheduleSpec,
)
from marp.services import schedules

logger = logging.getLogger(__name__)

StepTerm = Callable[[np.ndarray, np.ndarray], np.ndarray]
Scalars = TypeVar("Scalars", float, np.ndarray)


def _check_theta(theta: float) -> None:
    if not 0.0 <= theta < 1.0:
        raise InvalidParameterError(f"theta={theta} outside [0, 1)")


def _schedule_inputs(lam: ScheduleSpec, mu: ScheduleSpec) -> dict:
    return {
        "lambda": lam.model_dump(mode="json"),
        "mu": mu.model_dump(mode="json"),
    }


def _sup_term(schedule: ScheduleSpec, term: StepTerm, horizon: int) -> float:
    """sup over n < horizon of (s_{n+1} / s_n) * term(s_n)."""
    seq = schedules.values(schedule, horizon + 1)
    index, ratios = schedules.successive_ratios(seq)
    return float(np.max(ratios * term(seq[index], seq[index + 1])))


def _monotone(schedule: ScheduleSpec, horizon: int) -> bool:
    return schedules.describe(schedule, horizon).monotone


def _spread(s: Scalars, theta: float) -> Scalars:
    return s**2 + (1.0 - s) ** 2 + 2.0 * theta * s * (1.0 - s)


def _square_factor(theta: float) -> StepTerm:
    def term(current: np.ndarray, following: np.ndarray) -> np.ndarray:
        return following / current * _spread(current, theta)

    return term


def rho_hat(
    lam: ScheduleSpec,
    mu: ScheduleSpec,
    theta: float,
    horizon: int = schedules.DEFAULT_HORIZON,
) -> RateCertificate:
    """Rate for the CQ-based local convergence result.

    rho^2 = sup_n (s_{n+1}/s_n)^2 (s_n^2 + (1 - s_n)^2 + 2 theta s_n (1 - s_n))
    over both schedules. Constant schedules give the bracket directly; a
    geometric schedule with ratio eta gives eta, the bracket tending to 1.
    """
    _check_theta(theta)
    meta = schedules.pair_meta(lam, mu, horizon)
    squares: list[float] = []
    exact = True
    for schedule in (lam, mu):
        if isinstance(schedule, ConstantSchedule):
            s = schedule.value
            squares.append(s**2 + (1.0 - s) ** 2 + 2.0 * theta * s * (1.0 - s))
        elif isinstance(schedule, GeometricSchedule):
            squares.append(schedule.ratio**2)
        else:
            exact = False
            squares.append(_sup_term(schedule, _square_factor(theta), horizon))
    value = math.sqrt(max(squares))

    a0, a_inf = meta.alpha0, meta.alpha_inf
    upper = math.sqrt(
        1.0 - 2.0 * (1.0 - theta) * min(a0 * (1.0 - a0), a_inf * (1.0 - a_inf))
    )
    monotone = _monotone(lam, horizon) and _monotone(mu, horizon)
    return RateCertificate(
        kind=CertificateKind.RHO_HAT,
        value=value,
        upper_bound=upper if monotone else None,
        exactness=Exactness.ANALYTIC if exact else Exactness.NUMERIC,
        horizon=None if exact else horizon,
        valid=value < 1.0,
        inputs={"theta": theta, **_schedule_inputs(lam, mu)},
        note=None if monotone else "schedules are not nonincreasing; no upper bound",
    )


def kappa_hat(
    lam: ScheduleSpec,
    mu: ScheduleSpec,
    theta: float,
    eps: float,
    horizon: int = schedules.DEFAULT_HORIZON,
) -> RateCertificate:
    """Rate for the regularity-based local convergence result.

    kappa = sup_n (s_{n+1}/s_n)(theta s_n + 2 eps + 1 - s_n) over both
    schedules. Needs (1 - theta) alpha_inf > 2 eps.
    """
    _check_theta(theta)
    if eps < 0:
        raise InvalidParameterError("eps must be nonnegative")
    meta = schedules.pair_meta(lam, mu, horizon)
    margin = (1.0 - theta) * meta.alpha_inf - 2.0 * eps
    if margin <= 0:
        raise RegularityMarginError(
            f"(1 - theta) * alpha_inf = {(1.0 - theta) * meta.alpha_inf:.6g} "
            f"does not exceed 2 * eps = {2.0 * eps:.6g}"
        )

    def term(current: np.ndarray, following: np.ndarray) -> np.ndarray:
        return theta * current + 2.0 * eps + (1.0 - current)

    sups: list[float] = []
    exact = True
    for schedule in (lam, mu):
        if isinstance(schedule, ConstantSchedule):
            s = schedule.value
            sups.append(theta * s + 2.0 * eps + (1.0 - s))
        else:
            exact = False
            sups.append(_sup_term(schedule, term, horizon))
    value = max(sups)
    return RateCertificate(
        kind=CertificateKind.KAPPA_HAT,
        value=value,
        upper_bound=1.0 - margin,
        exactness=Exactness.ANALYTIC if exact else Exactness.NUMERIC,
        horizon=None if exact else horizon,
        valid=value < 1.0,
        inputs={"theta": theta, "eps": eps, **_schedule_inputs(lam, mu)},
    )


def eta(
    lam: ScheduleSpec, mu: ScheduleSpec, horizon: int = schedules.DEFAULT_HORIZON
) -> RateCertificate:
    """Largest successive ratio of either schedule; usable when below 1."""
    meta = schedules.pair_meta(lam, mu, horizon)
    valid = meta.sup_ratio < 1.0
    return RateCertificate(
        kind=CertificateKind.ETA,
        value=meta.sup_ratio,
        exactness=meta.exactness,
        horizon=None if meta.exactness == Exactness.ANALYTIC else horizon,
        valid=valid,
        inputs=_schedule_inputs(lam, mu),
        note=None if valid else "eta >= 1: schedules do not vanish geometrically",
    )


@dataclass(frozen=True)
class CQRadius:
    delta: float
    radius: float


def cq_delta(eps_slack: float, rho: float, alpha0: float) -> CQRadius:
    """Start radius for CQ-based local convergence.

    delta = eps (1 - rho) / (1 - rho + 2 a0 (1 + a0)) and the orbit stays within
    r = 2 delta a0 (1 + a0) / (1 - rho).
    """
    if not 0.0 < rho < 1.0:
        raise InvalidParameterError(f"rho={rho} outside (0, 1)")
    if not 0.0 < alpha0 <= 1.0:
        raise InvalidParameterError(f"alpha0={alpha0} outside (0, 1]")
    if not eps_slack > 0:
        raise InvalidParameterError("eps_slack must be positive")
    growth = 2.0 * alpha0 * (1.0 + alpha0)
    delta = eps_slack * (1.0 - rho) / (1.0 - rho + growth)
    return CQRadius(delta=delta, radius=delta * growth / (1.0 - rho))


@dataclass(frozen=True)
class RegularityBall:
    """Start radius and distance-to-limit bounds under regularity."""

    delta: float
    kappa: float
    alpha0: float
    start_radius: float
    radius: float
    coefficient: float

    def bound(self, n: int) -> float:
        return self.coefficient * self.kappa**n

    @property
    def unrelaxed_coefficient(self) -> float:
        k = self.kappa
        return 2.0 * self.delta * (1.0 + k**2) / ((1.0 + k) * (5.0 - k))

    def unrelaxed_bound(self, n: int) -> float:
        """Bound for plain alternating projections, rate kappa^2."""
        return self.unrelaxed_coefficient * self.kappa ** (2 * n)


def regularity_ball(delta: float, kappa: float, alpha0: float) -> RegularityBall:
    if not 0.0 < kappa < 1.0:
        raise InvalidParameterError(f"kappa={kappa} outside (0, 1)")
    if not delta > 0 or not 0.0 < alpha0 <= 1.0:
        raise InvalidParameterError("need delta > 0 and alpha0 in (0, 1]")
    growth = alpha0 * (1.0 + alpha0)
    denominator = 1.0 - kappa + 2.0 * growth
    return RegularityBall(
        delta=delta,
        kappa=kappa,
        alpha0=alpha0,
        start_radius=delta * (1.0 - kappa) / denominator,
        radius=2.0 * delta * growth / denominator,
        coefficient=delta * growth * (1.0 + kappa) / denominator,
    )


def vanishing_limit_bound(alpha0: float, eta: float, d_a: float, d_b: float) -> float:
    """Bound on |c - y_{-1}| for geometrically vanishing schedules."""
    if not 0.0 < eta < 1.0:
        raise InvalidParameterError(f"eta={eta} outside (0, 1)")
    return 2.0 * alpha0 * (1.0 + alpha0) / (1.0 - eta) * max(d_a, d_b)


@dataclass(frozen=True)
class LocalRadius:
    start_radius: float
    coefficient: float

    def bound(self, rho: float, n: int) -> float:
        return self.coefficient * rho**n


def local_convergence_radius(r: float, rho: float, alpha0: float) -> LocalRadius:
    """Admissible max{d_A, d_B}(y_{-1}) for local linear convergence with rate rho."""
    if not r > 0:
        raise InvalidParameterError("r must be positive")
    if not 0.0 <= rho < 1.0:
        raise InvalidParameterError(f"rho={rho} outside [0, 1)")
    if not 0.0 < alpha0 <= 1.0:
        raise InvalidParameterError(f"alpha0={alpha0} outside (0, 1]")
    return LocalRadius(
        start_radius=r * (1.0 - rho) / (2.0 * alpha0 * (1.0 + alpha0)),
        coefficient=r * (1.0 + rho) / 2.0,
    )


def rate_comparison_factor(lam: float, theta: float) -> float:
    """(theta lam + 1 - lam) / sqrt(lam^2 + (1 - lam)^2 + 2 theta lam (1 - lam))."""
    _check_theta(theta)
    if not 0.0 < lam <= 1.0:
        raise InvalidParameterError(f"lambda={lam} outside (0, 1]")
    numerator = theta * lam + 1.0 - lam
    return numerator / math.sqrt(_spread(lam, theta))


@dataclass(frozen=True)
class TwoAxesRates:
    actual: float
    rho_hat: float
    kappa_hat: float


def two_axes_rates(lam: float) -> TwoAxesRates:
    """Observed and certified rates for perpendicular lines, constant lam."""
    if not 0.0 < lam <= 1.0:
        raise InvalidParameterError(f"lambda={lam} outside (0, 1]")
    return TwoAxesRates(
        actual=1.0 - lam,
        rho_hat=math.sqrt(lam**2 + (1.0 - lam) ** 2),
        kappa_hat=1.0 - lam,
    )


def cycling_window(a: float, b: float, c: float) -> tuple[float, float]:
    """Constant relaxations for which A = {c, a}, B = {c, b} converge from 0 to c.

    Needs c < 0 < a < b and max{a, b - 2a} < |c| < sqrt(a^2 + (b - a)^2) < b;
    plain alternating projections then cycle between a and b.
    """
    if not (c < 0 < a < b):
        raise InvalidParameterError("need c < 0 < a < b")
    if not max(a, b - 2.0 * a) < -c < math.hypot(a, b - a) < b:
        raise InvalidParameterError(
            f"(a, b, c) = ({a}, {b}, {c}) violates max(a, b - 2a) < |c| < "
            "sqrt(a^2 + (b - a)^2) < b"
        )
    low = (a + c + math.sqrt(c**2 - a**2)) / (2.0 * a)
    high = (b + c) / (2.0 * a)
    logger.debug("Cycling window for (%s, %s, %s): (%s, %s)", a, b, c, low, high)
    return low, high
