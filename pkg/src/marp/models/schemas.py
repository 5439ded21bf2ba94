"""Pydantic schemas for config files, catalog entries and reports."""

from typing import Annotated, Any, Literal, Optional, Union

from pydantic import (
    BaseModel,
    BeforeValidator,
    ConfigDict,
    Field,
    field_validator,
    model_validator,
)

from marp.models.enums import (
    CertificateKind,
    ConeMethod,
    Exactness,
    Provenance,
    RateMode,
    RunStatus,
    TiePolicy,
)


def _coerce_vector(value: Any) -> Any:
    """Allow a bare number where a 1-D point is expected."""
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return [float(value)]
    return value


Vector = Annotated[list[float], BeforeValidator(_coerce_vector)]


class _Spec(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid", populate_by_name=True)


# Set descriptions
class FiniteSetSpec(_Spec):
    """Finitely many points."""

    type: Literal["finite"] = "finite"
    points: list[Vector] = Field(..., min_length=1)

    @field_validator("points")
    @classmethod
    def _same_dimension(cls, points: list[list[float]]) -> list[list[float]]:
        if len({len(p) for p in points}) != 1 or not points[0]:
            raise ValueError("all points must share one nonzero dimension")
        return points

    @property
    def dimension(self) -> int:
        return len(self.points[0])


class AffineSubspaceSpec(_Spec):
    """base + span(basis); basis rows must be orthonormal."""

    type: Literal["affine"] = "affine"
    base: Vector
    basis: list[Vector] = Field(default_factory=list)

    @property
    def dimension(self) -> int:
        return len(self.base)


class HalfSpaceSpec(_Spec):
    """{x : <normal, x> <= offset} with a unit normal."""

    type: Literal["halfspace"] = "halfspace"
    normal: Vector
    offset: float = 0.0

    @property
    def dimension(self) -> int:
        return len(self.normal)


class BoxSpec(_Spec):
    """Coordinate box; null bounds are unbounded."""

    type: Literal["box"] = "box"
    lower: list[Optional[float]]
    upper: list[Optional[float]]

    @model_validator(mode="after")
    def _check_bounds(self) -> "BoxSpec":
        if len(self.lower) != len(self.upper) or not self.lower:
            raise ValueError("lower and upper must have the same nonzero length")
        for lo, hi in zip(self.lower, self.upper):
            if lo is not None and hi is not None and lo > hi:
                raise ValueError(f"lower bound {lo} exceeds upper bound {hi}")
        return self

    @property
    def dimension(self) -> int:
        return len(self.lower)


class BallSpec(_Spec):
    type: Literal["ball"] = "ball"
    center: Vector
    radius: float = Field(..., gt=0)

    @property
    def dimension(self) -> int:
        return len(self.center)


class SphereSpec(_Spec):
    type: Literal["sphere"] = "sphere"
    center: Vector
    radius: float = Field(..., gt=0)

    @property
    def dimension(self) -> int:
        return len(self.center)


class SawtoothSpec(_Spec):
    """Hypograph of the sawtooth function; w defaults to arccos(3/4)/4."""

    type: Literal["sawtooth"] = "sawtooth"
    w: Optional[float] = Field(None, gt=0, le=0.39269908169872414)
    k_max: int = Field(60, ge=2, le=1000)

    @property
    def dimension(self) -> int:
        return 2


class TransformedSpec(_Spec):
    """Image of inner under x -> matrix @ x + translation."""

    type: Literal["transformed"] = "transformed"
    inner: "SetSpec"
    matrix: list[Vector]
    translation: Optional[Vector] = None

    @property
    def dimension(self) -> int:
        return self.inner.dimension


SetSpec = Annotated[
    Union[
        FiniteSetSpec,
        AffineSubspaceSpec,
        HalfSpaceSpec,
        BoxSpec,
        BallSpec,
        SphereSpec,
        SawtoothSpec,
        TransformedSpec,
    ],
    Field(discriminator="type"),
]

TransformedSpec.model_rebuild()


# Schedule descriptions
class ConstantSchedule(_Spec):
    type: Literal["constant"] = "constant"
    value: float = Field(..., gt=0, le=1)


class GeometricSchedule(_Spec):
    """initial * ratio**n"""

    type: Literal["geometric"] = "geometric"
    initial: float = Field(..., gt=0, le=1)
    ratio: float = Field(..., gt=0, lt=1)


class MonotoneToLimitSchedule(_Spec):
    """limit + (initial - limit) * decay**n"""

    type: Literal["monotone"] = "monotone"
    initial: float = Field(..., gt=0, le=1)
    limit: float = Field(..., ge=0, le=1)
    decay: float = Field(..., gt=0, lt=1)

    @model_validator(mode="after")
    def _limit_below_initial(self) -> "MonotoneToLimitSchedule":
        if self.limit > self.initial:
            raise ValueError("limit must not exceed initial")
        return self


class DyadicSqrtSchedule(_Spec):
    """1 - sqrt((delta + 2^-(n+1)) / (delta + 2^-n))"""

    type: Literal["dyadic_sqrt"] = "dyadic_sqrt"
    delta: float = Field(..., gt=0)


class DyadicRatioSchedule(_Spec):
    """1 - (1 + 2^-(n+1)) / (1 + 2^-n)"""

    type: Literal["dyadic_ratio"] = "dyadic_ratio"


class HarmonicSchedule(_Spec):
    """c / (n + 2)"""

    type: Literal["harmonic"] = "harmonic"
    c: float = Field(1.0, gt=0, le=1)


class ExplicitTail(_Spec):
    rule: Literal["hold", "geometric"] = "hold"
    ratio: Optional[float] = Field(None, gt=0, lt=1)

    @model_validator(mode="after")
    def _ratio_for_geometric(self) -> "ExplicitTail":
        if self.rule == "geometric" and self.ratio is None:
            raise ValueError("geometric tail needs a ratio")
        return self


class ExplicitSchedule(_Spec):
    type: Literal["explicit"] = "explicit"
    values: list[Annotated[float, Field(gt=0, le=1)]] = Field(..., min_length=1)
    tail: Optional[ExplicitTail] = None


ScheduleSpec = Annotated[
    Union[
        ConstantSchedule,
        GeometricSchedule,
        MonotoneToLimitSchedule,
        DyadicSqrtSchedule,
        DyadicRatioSchedule,
        HarmonicSchedule,
        ExplicitSchedule,
    ],
    Field(discriminator="type"),
]


# Cone restrictions
class WholeSpaceRestriction(_Spec):
    type: Literal["whole_space"] = "whole_space"


class SetRestriction(_Spec):
    type: Literal["set"] = "set"
    set: SetSpec


class BoundaryRestriction(_Spec):
    type: Literal["boundary"] = "boundary"
    set: SetSpec


RestrictionSpec = Annotated[
    Union[WholeSpaceRestriction, SetRestriction, BoundaryRestriction],
    Field(discriminator="type"),
]


def _check_dimensions(expected: int, **parts: int) -> None:
    wrong = {name: dim for name, dim in parts.items() if dim != expected}
    if wrong:
        detail = ", ".join(f"{name} has dimension {dim}" for name, dim in wrong.items())
        raise ValueError(f"expected dimension {expected}: {detail}")


class ExperimentConfig(_Spec):
    """A single solver run."""

    dimension: int = Field(..., ge=1)
    set_a: SetSpec = Field(..., alias="setA")
    set_b: SetSpec = Field(..., alias="setB")
    lambda_: ScheduleSpec = Field(..., alias="lambda")
    mu: ScheduleSpec
    start: Vector
    tie_policy: TiePolicy = TiePolicy.LEX_MIN
    max_iter: int = Field(100_000, ge=1)
    gap_tol: float = Field(1e-10, gt=0)
    record_every: int = Field(1, ge=1)
    seed: Optional[int] = None
    cycle_detect: bool = True

    @model_validator(mode="after")
    def _consistent(self) -> "ExperimentConfig":
        if self.tie_policy == TiePolicy.ALL:
            raise ValueError(
                "tie_policy 'all' enumerates choices and cannot drive a run"
            )
        _check_dimensions(
            self.dimension,
            setA=self.set_a.dimension,
            setB=self.set_b.dimension,
            start=len(self.start),
        )
        return self


class CQQuery(_Spec):
    """CQ-number evaluation at a point."""

    set_a: SetSpec = Field(..., alias="A")
    restriction_a: RestrictionSpec = Field(
        default_factory=WholeSpaceRestriction, alias="A_restriction"
    )
    set_b: SetSpec = Field(..., alias="B")
    restriction_b: RestrictionSpec = Field(
        default_factory=WholeSpaceRestriction, alias="B_restriction"
    )
    center: Vector = Field(..., alias="c")
    delta: float = Field(0.5, gt=0)
    delta_grid: Optional[list[Annotated[float, Field(gt=0)]]] = None
    method: ConeMethod = ConeMethod.EXACT_2D
    samples: int = Field(20_000, ge=1)
    seed: Optional[int] = None

    @model_validator(mode="after")
    def _consistent(self) -> "CQQuery":
        _check_dimensions(
            self.set_a.dimension, B=self.set_b.dimension, c=len(self.center)
        )
        return self


class ProbeQuery(_Spec):
    """Regularity probe of set against restriction near center."""

    set: SetSpec
    restriction: RestrictionSpec = Field(default_factory=WholeSpaceRestriction)
    center: Vector
    delta: float = Field(..., gt=0)
    samples: int = Field(2_000, ge=1)
    seed: Optional[int] = None


class LandmarkQuery(_Spec):
    k_values: list[Annotated[int, Field(ge=1)]] = Field(..., min_length=1)
    k_max: int = Field(60, ge=2)


ExpectationCheck = Literal[
    "status",
    "iterate",
    "constant_iterates",
    "limit",
    "limit_membership",
    "empirical_rate",
    "cycle_period",
    "closed_form_axes",
    "theta_delta",
    "epsilon_lower",
    "landmark",
    "projection_ties",
]


class Expectation(_Spec):
    """One asserted outcome of an example case."""

    check: ExpectationCheck
    value: Union[float, str, bool]
    tolerance: float = Field(0.0, ge=0)
    relation: Literal["approx", "at_least", "at_most"] = "approx"
    provenance: Provenance
    target: Optional[str] = None
    index: Optional[int] = None
    coord: Optional[int] = None
    mode: RateMode = RateMode.ITERATION
    window: int = Field(30, ge=2)
    note: Optional[str] = None


class ExampleCase(_Spec):
    label: str
    config: Optional[ExperimentConfig] = None
    cq: Optional[CQQuery] = None
    probe: Optional[ProbeQuery] = None
    landmarks: Optional[LandmarkQuery] = None
    expectations: list[Expectation] = Field(..., min_length=1)

    @model_validator(mode="after")
    def _one_builder(self) -> "ExampleCase":
        builders = [self.config, self.cq, self.probe, self.landmarks]
        if sum(b is not None for b in builders) != 1:
            raise ValueError("a case needs exactly one of config, cq, probe, landmarks")
        return self


class ExampleSpec(_Spec):
    """A worked example from the catalog, reachable by its id or any alias."""

    id: str = Field(..., pattern=r"^[a-z0-9.\-]+$")
    aliases: list[Annotated[str, Field(pattern=r"^[a-z0-9.\-]+$")]] = Field(
        default_factory=list
    )
    title: str
    topic: str
    cases: list[ExampleCase] = Field(..., min_length=1)


# Reports
class RateCertificate(BaseModel):
    """A computed rate constant with the bound it must respect."""

    kind: CertificateKind
    value: float
    upper_bound: Optional[float] = None
    exactness: Exactness
    horizon: Optional[int] = None
    valid: bool = True
    inputs: dict[str, Any] = Field(default_factory=dict)
    note: Optional[str] = None


class GridPoint(BaseModel):
    delta: float
    theta: float


class CQReport(BaseModel):
    theta_delta: float = Field(..., ge=0, le=1)
    delta: float
    method: ConeMethod
    witness_u: Optional[list[float]] = None
    witness_v: Optional[list[float]] = None
    grid: list[GridPoint] = Field(default_factory=list)
    samples: Optional[int] = None
    seed: Optional[int] = None


class CQConditionReport(BaseModel):
    holds: bool
    theta_bar: float
    margin: float
    trend: Literal["flat", "decreasing", "mixed"]
    grid: list[GridPoint]


class RunSummary(BaseModel):
    status: RunStatus
    iterations: int
    limit: Optional[list[float]] = None
    final_gap: float
    empirical_rate: Optional[float] = None
    rate_mode: RateMode = RateMode.ITERATION
    fit_quality: Optional[float] = None
    exact_convergence: bool = False
    cycle_period: Optional[int] = None


class SweepRow(BaseModel):
    value: float
    status: RunStatus
    iterations: int
    empirical_rate: Optional[float] = None
    limit: Optional[list[float]] = None
