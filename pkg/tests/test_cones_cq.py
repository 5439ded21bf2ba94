"""Tests for restricted normal cones, CQ-numbers and the regularity probe."""

from __future__ import annotations

import math

import numpy as np
import pytest

from marp.commands.cq import sawtooth_query, two_lines_query
from marp.errors import (
    InvalidParameterError,
    NoBasePointsError,
    NoDataError,
    UnsupportedConfigurationError,
)
from marp.models.enums import ConeMethod
from marp.models.schemas import (
    BoundaryRestriction,
    ProbeQuery,
    SawtoothSpec,
    TransformedSpec,
)
from marp.services import cones
from marp.services.angular import Cone2D
from marp.services.geometry import (
    AffineSubspace,
    Ball,
    Box,
    ClosedSet,
    FiniteSet,
    HalfSpace,
    Transformed,
    rotation,
)
from marp.services.sawtooth import Sawtooth2D

ROOT_SEVEN_EIGHTHS = 0.93541434669348533


def _random_pair(rng: np.random.Generator) -> tuple[ClosedSet, ClosedSet]:
    """A ball and a half-plane that both contain the origin."""
    center = rng.uniform(-1.0, 1.0, size=2)
    ball = Ball(center, float(np.linalg.norm(center) + rng.uniform(0.0, 0.5)))
    angle = float(rng.uniform(0.0, 2 * math.pi))
    normal = [math.cos(angle), math.sin(angle)]
    plane = HalfSpace(normal, float(rng.uniform(0.0, 0.5)))
    return ball, plane


def _theta(A: ClosedSet, B: ClosedSet, c, delta: float) -> float:
    whole = cones.WholeSpace()
    return cones.cq_number(A, whole, B, whole, c, delta).theta_delta


@pytest.mark.parametrize("delta", [0.5, 0.1])
def test_sawtooth_pair_exact_cq_number(delta):
    report = cones.evaluate_cq(sawtooth_query().model_copy(update={"delta": delta}))
    assert report.method == ConeMethod.EXACT_2D
    assert report.theta_delta == pytest.approx(ROOT_SEVEN_EIGHTHS, abs=1e-6)
    u, v = np.array(report.witness_u), np.array(report.witness_v)
    assert float(u @ v) == pytest.approx(report.theta_delta, abs=1e-9)


def test_sawtooth_pair_sampled_cq_number():
    query = sawtooth_query().model_copy(
        update={"method": ConeMethod.SAMPLED, "samples": 100_000, "seed": 7}
    )
    report = cones.evaluate_cq(query)
    assert report.theta_delta == pytest.approx(ROOT_SEVEN_EIGHTHS, abs=5e-3)
    assert report.theta_delta <= ROOT_SEVEN_EIGHTHS + 1e-9
    assert (report.samples, report.seed) == (100_000, 7)


def test_sawtooth_cones_are_restricted_by_the_other_boundary():
    query = sawtooth_query()
    assert query.restriction_a.set == query.set_a
    assert query.restriction_b.set == query.set_b
    swapped = query.model_copy(
        update={
            "restriction_a": query.restriction_b,
            "restriction_b": query.restriction_a,
            "method": ConeMethod.SAMPLED,
            "samples": 100_000,
            "seed": 7,
        }
    )
    # Each set's own boundary projects onto itself and spans no normals.
    assert cones.evaluate_cq(swapped).theta_delta == 0.0


def test_sawtooth_fails_superregularity():
    mirror = TransformedSpec(
        inner=SawtoothSpec(), matrix=Sawtooth2D().reflector().tolist()
    )
    probe = ProbeQuery(
        set=SawtoothSpec(),
        restriction=BoundaryRestriction(set=mirror),
        center=[0.0, 0.0],
        delta=0.5,
        seed=7,
    )
    result = cones.evaluate_probe(probe)
    assert result.epsilon_lower > 0.17
    y, b, u = result.witness
    assert float(u @ (y - b)) > 0


def test_two_lines_at_sixty_degrees():
    report = cones.evaluate_cq(two_lines_query(math.pi / 3))
    assert report.theta_delta == pytest.approx(0.5, abs=1e-12)


def test_orthogonal_lines_have_cq_number_zero():
    report = cones.evaluate_cq(two_lines_query(math.pi / 2))
    assert report.theta_delta == 0.0
    assert report.witness_u is None


def test_cq_number_is_monotone_in_delta_and_invariant_under_motions():
    rng = np.random.default_rng(17)
    deltas = [0.2, 0.5, 1.0, 2.0]
    for _ in range(100):
        A, B = _random_pair(rng)
        thetas = [_theta(A, B, [0.0, 0.0], d) for d in deltas]
        assert all(b >= a - 1e-12 for a, b in zip(thetas, thetas[1:]))

        matrix = rotation(float(rng.uniform(0.0, 2 * math.pi)))
        shift = rng.uniform(-3.0, 3.0, size=2)
        moved = _theta(
            Transformed(A, matrix, shift), Transformed(B, matrix, shift), shift, 0.5
        )
        assert moved == pytest.approx(thetas[1], abs=1e-9)


def test_cq_condition_reports_a_flat_trend():
    query = two_lines_query(math.pi / 3)
    line_a = AffineSubspace([0.0, 0.0], [[1.0, 0.0]])
    line_b = AffineSubspace(
        [0.0, 0.0], [[math.cos(math.pi / 3), math.sin(math.pi / 3)]]
    )
    whole = cones.WholeSpace()
    report = cones.cq_condition(
        line_a, whole, line_b, whole, query.center, [1.0, 0.1]
    )
    assert report.holds
    assert report.trend == "flat"
    assert report.theta_bar == pytest.approx(0.5)
    assert [p.delta for p in report.grid] == [1.0, 0.1]

    with pytest.raises(InvalidParameterError):
        cones.cq_condition(line_a, whole, line_b, whole, query.center, [0.1, 1.0])


def test_cq_condition_sees_a_shrinking_cone():
    A = Ball([0.0, 0.6], 1.0)
    B = HalfSpace([0.0, -1.0], 0.0)
    whole = cones.WholeSpace()
    report = cones.cq_condition(A, whole, B, whole, [0.0, 0.0], [2.0, 1.0, 0.1])
    assert report.trend == "decreasing"
    assert report.theta_bar == 0.0
    assert report.holds


def test_exact_method_rejects_sampled_restrictions():
    line = AffineSubspace([0.0, 0.0], [[1.0, 0.0]])
    within = cones.Within(Ball([0.0, 0.0], 1.0))
    with pytest.raises(UnsupportedConfigurationError):
        cones.cq_number(line, within, line, within, [0.0, 0.0], 0.5)


def test_cq_number_needs_base_points_near_c():
    whole = cones.WholeSpace()
    far = Ball([10.0, 0.0], 1.0)
    with pytest.raises(NoBasePointsError):
        cones.cq_number(far, whole, far, whole, [0.0, 0.0], 0.5)
    with pytest.raises(InvalidParameterError):
        cones.cq_number(far, whole, far, whole, [10.0, 0.0], 0.0)


def test_restricted_cone_from_a_finite_restriction():
    lower_half = HalfSpace([0.0, 1.0], 0.0)
    restriction = cones.Within(FiniteSet([[0.0, 1.0], [1.0, 1.0], [0.0, -1.0]]))
    cone = cones.restricted_pn_cone(lower_half, restriction, [0.0, 0.0])
    assert isinstance(cone, Cone2D)
    assert cone.contains(math.pi / 2)
    assert not cone.contains(math.pi / 4)


def test_unrestricted_cone_uses_exact_normals():
    lower_half = HalfSpace([0.0, 1.0], 0.0)
    cone = cones.restricted_pn_cone(lower_half, cones.WholeSpace(), [0, 0])
    assert cone == Cone2D.ray(math.pi / 2)
    with pytest.raises(InvalidParameterError):
        cones.restricted_pn_cone(lower_half, cones.WholeSpace(), [0, 1])


def test_restricted_cone_from_finite_points_in_three_dimensions():
    cube = Box([-1.0, -1.0, -1.0], [1.0, 1.0, 1.0])
    restriction = cones.Within(FiniteSet([[2.0, 0.0, 0.0], [2.0, 1.0, 0.0]]))
    sample = cones.restricted_pn_cone(cube, restriction, [1.0, 0.0, 0.0])
    assert isinstance(sample, cones.ConeSample)
    assert sample.exhaustive
    assert sample.directions.tolist() == [[1.0, 0.0, 0.0]]


def test_theta_estimate_on_orthogonal_axes():
    A = AffineSubspace([0.0, 0.0], [[1.0, 0.0]])
    B = AffineSubspace([0.0, 0.0], [[0.0, 1.0]])
    estimate = cones.theta_estimate(A, B, [0.0, 0.0], 1.0, samples=500, seed=3)
    assert estimate.theta == pytest.approx(0.0, abs=1e-12)
    assert estimate.used == 500

    with pytest.raises(NoDataError):
        cones.theta_estimate(Box.whole_space(2), B, [0.0, 0.0], 1.0, samples=10)
