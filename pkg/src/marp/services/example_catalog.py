"""Worked-example catalog loaded from YAML and checked against live runs."""

import logging
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Any, Callable, Optional, Union

import numpy as np
import yaml
from pydantic import ValidationError

from marp.errors import ConfigError, InvalidParameterError, NoDataError
from marp.models.enums import Provenance
from marp.models.schemas import ExampleCase, ExampleSpec, Expectation
from marp.services import cones
from marp.services.config_loader import problems_from
from marp.services.diagnostics import empirical_rate
from marp.services.geometry import build_set, membership
from marp.services.sawtooth import Sawtooth2D, SawtoothLandmarks, sawtooth_landmarks
from marp.services.solver import MarpConfig, Trajectory, closed_form_axes_orbit, run
from shared_lib.numerics import MEMBERSHIP_RTOL, norm

logger = logging.getLogger(__name__)

Observed = Union[float, str, bool, None]


@dataclass(frozen=True)
class CheckOutcome:
    case: str
    check: str
    passed: bool
    observed: Observed
    expected: Union[float, str, bool]
    relation: str
    tolerance: float
    provenance: Provenance
    target: Optional[str] = None
    note: Optional[str] = None


@dataclass
class ExampleReport:
    example_id: str
    outcomes: list[CheckOutcome] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(o.passed for o in self.outcomes)

    @property
    def failures(self) -> list[CheckOutcome]:
        return [o for o in self.outcomes if not o.passed]


class ExampleCatalog:
    """Example definitions stored as YAML files under <data_dir>/examples."""

    def __init__(self, data_dir: Union[str, Path] = "data"):
        self.data_dir = Path(data_dir)
        self.examples_dir = self.data_dir / "examples"

    def load_all(self) -> tuple[dict[str, ExampleSpec], dict[str, Any]]:
        """
        Load every example file.

        Returns:
            The examples by id, and a summary with the load count and one
            error string per file that failed.
        """
        examples: dict[str, ExampleSpec] = {}
        claimed: set[str] = set()
        results: dict[str, Any] = {"loaded": 0, "errors": []}
        if not self.examples_dir.exists():
            logger.warning("Example directory %s does not exist", self.examples_dir)
            return examples, results

        for yaml_file in sorted(self.examples_dir.glob("*.yaml")):
            try:
                spec = self._load_file(yaml_file)
                names = {spec.id, *spec.aliases}
                taken = sorted(names & claimed)
                if taken:
                    raise InvalidParameterError(f"duplicate example id {taken[0]!r}")
                claimed |= names
                examples[spec.id] = spec
                results["loaded"] += 1
            except Exception as e:
                results["errors"].append(f"{yaml_file.name}: {str(e)}")
                logger.exception(f"Error loading {yaml_file}")
        return examples, results

    def _load_file(self, yaml_file: Path) -> ExampleSpec:
        with open(yaml_file, encoding="utf-8") as f:
            raw_data = yaml.safe_load(f) or {}
        try:
            return ExampleSpec.model_validate(raw_data)
        except ValidationError as e:
            raise ConfigError(problems_from(e, raw_data)) from e

    def get(self, example_id: str) -> ExampleSpec:
        """Look an example up by id or alias."""
        examples, _ = self.load_all()
        for spec in examples.values():
            if example_id == spec.id or example_id in spec.aliases:
                return spec
        known = ", ".join(sorted(examples)) or "none"
        raise InvalidParameterError(f"Unknown example {example_id!r} (known: {known})")


class _CaseRun:
    """Lazily evaluated builder of one example case."""

    def __init__(self, case: ExampleCase):
        self.case = case

    @cached_property
    def trajectory(self) -> Trajectory:
        if self.case.config is None:
            raise InvalidParameterError(f"case {self.case.label!r} has no run config")
        return run(MarpConfig.from_experiment(self.case.config))

    @cached_property
    def cq(self) -> float:
        if self.case.cq is None:
            raise InvalidParameterError(f"case {self.case.label!r} has no CQ query")
        return cones.evaluate_cq(self.case.cq).theta_delta

    @cached_property
    def probe(self) -> float:
        if self.case.probe is None:
            raise InvalidParameterError(f"case {self.case.label!r} has no probe")
        return cones.evaluate_probe(self.case.probe).epsilon_lower

    @cached_property
    def landmarks(self) -> list[tuple[Sawtooth2D, SawtoothLandmarks]]:
        query = self.case.landmarks
        if query is None:
            raise InvalidParameterError(f"case {self.case.label!r} has no landmarks")
        shape = Sawtooth2D(k_max=query.k_max)
        return [(shape, sawtooth_landmarks(shape, k)) for k in query.k_values]


def _farthest(values: Any, expected: float) -> float:
    """The entry of values farthest from expected."""
    array = np.asarray(values, dtype=np.float64).ravel()
    return float(array[int(np.argmax(np.abs(array - expected)))])


def _row(t: Trajectory, index: Optional[int]) -> int:
    if index is None:
        return len(t.n) - 1
    hits = np.flatnonzero(t.n == index)
    if not len(hits):
        raise NoDataError(f"iteration {index} was not recorded")
    return int(hits[0])


def _pick(point: np.ndarray, coord: Optional[int]) -> float:
    return norm(point) if coord is None else float(point[coord])


def _status(ctx: _CaseRun, e: Expectation) -> Observed:
    return ctx.trajectory.status.kind.value


def _iterate(ctx: _CaseRun, e: Expectation) -> Observed:
    t = ctx.trajectory
    points = getattr(t, e.target or "y")
    return _pick(points[_row(t, e.index)], e.coord)


def _constant_iterates(ctx: _CaseRun, e: Expectation) -> Observed:
    points = getattr(ctx.trajectory, e.target or "y")
    return _farthest(points[:, e.coord or 0], float(e.value))


def _limit(ctx: _CaseRun, e: Expectation) -> Observed:
    limit = ctx.trajectory.status.limit
    return None if limit is None else _pick(limit, e.coord)


def _limit_membership(ctx: _CaseRun, e: Expectation) -> Observed:
    limit = ctx.trajectory.status.limit
    config = ctx.case.config
    if limit is None or config is None:
        return None
    spec = config.set_a if (e.target or "A") == "A" else config.set_b
    return membership(build_set(spec), limit, e.tolerance or MEMBERSHIP_RTOL)


def _empirical_rate(ctx: _CaseRun, e: Expectation) -> Observed:
    return empirical_rate(ctx.trajectory, window=e.window, mode=e.mode).rate


def _cycle_period(ctx: _CaseRun, e: Expectation) -> Observed:
    period = ctx.trajectory.status.period
    return None if period is None else float(period)


def _closed_form_axes(ctx: _CaseRun, e: Expectation) -> Observed:
    t, config = ctx.trajectory, ctx.case.config
    if config is None or t.dimension != 2:
        raise InvalidParameterError("closed form needs a planar run")
    count = int(t.n[-1]) + 1
    xs, ys = closed_form_axes_orbit(t.start, config.lambda_, config.mu, count)
    rows = t.n.astype(int)
    return max(
        float(np.max(np.abs(t.x - xs[rows]))), float(np.max(np.abs(t.y - ys[rows])))
    )


def _theta_delta(ctx: _CaseRun, e: Expectation) -> Observed:
    return ctx.cq


def _epsilon_lower(ctx: _CaseRun, e: Expectation) -> Observed:
    return ctx.probe


_LANDMARK_SCALES: dict[str, Callable[[SawtoothLandmarks], float]] = {
    "beta1_scaled": lambda m: m.beta1 / 2.0 ** -(m.k + 1),
    "beta2_scaled": lambda m: m.beta2 / 2.0 ** -(m.k + 1),
    "cos_angle": lambda m: m.cos_angle,
}


def _landmark(ctx: _CaseRun, e: Expectation) -> Observed:
    measure = _LANDMARK_SCALES.get(e.target or "")
    if measure is None:
        raise InvalidParameterError(f"unknown landmark target {e.target!r}")
    return _farthest([measure(m) for _, m in ctx.landmarks], float(e.value))


def _projection_ties(ctx: _CaseRun, e: Expectation) -> Observed:
    counts: list[float] = []
    errors: list[float] = []
    for shape, m in ctx.landmarks:
        nearest = shape.project(m.z_k).nearest
        counts.append(len(nearest))
        errors.extend(min(norm(p - m.h), norm(p - m.h_prime)) for p in nearest)
    if e.target == "count":
        return _farthest(counts, float(e.value))
    if e.target == "midpoint_error":
        return max(errors)
    raise InvalidParameterError(f"unknown projection_ties target {e.target!r}")


_CHECKS: dict[str, Callable[[_CaseRun, Expectation], Observed]] = {
    "status": _status,
    "iterate": _iterate,
    "constant_iterates": _constant_iterates,
    "limit": _limit,
    "limit_membership": _limit_membership,
    "empirical_rate": _empirical_rate,
    "cycle_period": _cycle_period,
    "closed_form_axes": _closed_form_axes,
    "theta_delta": _theta_delta,
    "epsilon_lower": _epsilon_lower,
    "landmark": _landmark,
    "projection_ties": _projection_ties,
}


def compare(observed: Observed, e: Expectation) -> bool:
    if observed is None:
        return False
    if isinstance(e.value, (bool, str)) or isinstance(observed, (bool, str)):
        return observed == e.value
    expected = float(e.value)
    if e.relation == "at_least":
        return observed >= expected - e.tolerance
    if e.relation == "at_most":
        return observed <= expected + e.tolerance
    return abs(observed - expected) <= e.tolerance


def run_example(spec: ExampleSpec) -> ExampleReport:
    """Evaluate every expectation of every case."""
    report = ExampleReport(spec.id)
    for case in spec.cases:
        ctx = _CaseRun(case)
        for e in case.expectations:
            observed = _CHECKS[e.check](ctx, e)
            passed = compare(observed, e)
            if not passed:
                logger.warning(
                    "%s/%s: %s observed %r, expected %s %r (tol %g)",
                    spec.id,
                    case.label,
                    e.check,
                    observed,
                    e.relation,
                    e.value,
                    e.tolerance,
                )
            report.outcomes.append(
                CheckOutcome(
                    case=case.label,
                    check=e.check,
                    passed=passed,
                    observed=observed,
                    expected=e.value,
                    relation=e.relation,
                    tolerance=e.tolerance,
                    provenance=e.provenance,
                    target=e.target,
                    note=e.note,
                )
            )
    logger.info(
        "Example %s: %d/%d checks passed",
        spec.id,
        sum(o.passed for o in report.outcomes),
        len(report.outcomes),
    )
    return report

