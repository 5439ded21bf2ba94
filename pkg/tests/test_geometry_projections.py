"""Tests for nearest-point projections and relaxed projection steps."""

from __future__ import annotations

import math

import numpy as np
import pytest

from marp.errors import DimensionMismatchError, InvalidParameterError
from marp.models.enums import TiePolicy
from marp.models.schemas import BoxSpec, FiniteSetSpec, SawtoothSpec, TransformedSpec
from marp.services.geometry import (
    AffineSubspace,
    Ball,
    Box,
    ClosedSet,
    FiniteSet,
    HalfSpace,
    Sphere,
    Transformed,
    build_set,
    membership,
    reflection,
    relaxed_project,
    relaxed_projections,
    rotation,
    select_nearest,
    transform_set,
)
from marp.services.sawtooth import Sawtooth2D
from shared_lib.numerics import as_point

_KINDS = (
    "finite",
    "halfspace",
    "ball",
    "box",
    "affine",
    "sphere",
    "sawtooth",
    "rotated",
)


def _random_set(rng: np.random.Generator, kind: str) -> ClosedSet:
    if kind == "finite":
        return FiniteSet(rng.normal(size=(int(rng.integers(1, 8)), 2)) * 3.0)
    if kind == "halfspace":
        normal = rng.normal(size=2)
        return HalfSpace(normal / np.linalg.norm(normal), float(rng.normal()))
    if kind == "ball":
        return Ball(rng.normal(size=2), float(rng.uniform(0.2, 2.0)))
    if kind == "box":
        lower = rng.normal(size=2)
        return Box(lower, lower + rng.uniform(0.1, 2.0, size=2))
    if kind == "affine":
        angle = float(rng.uniform(0, math.pi))
        return AffineSubspace(rng.normal(size=2), [[math.cos(angle), math.sin(angle)]])
    if kind == "sphere":
        return Sphere(rng.normal(size=2), float(rng.uniform(0.2, 2.0)))
    if kind == "sawtooth":
        return Sawtooth2D(k_max=20)
    matrix = rotation(float(rng.uniform(0, 2 * math.pi)))
    return Transformed(Sawtooth2D(k_max=20), matrix, rng.normal(size=2))


def _query(rng: np.random.Generator, kind: str) -> np.ndarray:
    if kind in ("sawtooth", "rotated"):
        return rng.uniform(-0.5, 1.5, size=2)
    return rng.normal(size=2) * 4.0


def test_relaxed_projection_properties_on_random_triples():
    rng = np.random.default_rng(11)
    for trial in range(1000):
        kind = _KINDS[trial % len(_KINDS)]
        s = _random_set(rng, kind)
        y = _query(rng, kind)
        lam = float(rng.uniform(0.05, 0.95))
        x, a = relaxed_project(s, y, lam)
        d = s.distance(y)
        scale = 1.0 + np.linalg.norm(y)

        # x keeps a as its only nearest point
        again = s.project(x)
        assert len(again.nearest) == 1
        np.testing.assert_allclose(again.nearest[0], a, atol=1e-10 * scale)
        # the step has length lam * d(y) and splits y - a in ratio lam : 1 - lam
        assert abs(np.linalg.norm(x - y) - lam * d) <= 1e-12 * scale
        np.testing.assert_allclose(
            lam * (x - a), (1 - lam) * (y - x), atol=1e-12 * scale
        )


def test_projection_is_idempotent_and_distance_is_nonexpansive():
    rng = np.random.default_rng(12)
    for trial in range(400):
        kind = _KINDS[trial % len(_KINDS)]
        s = _random_set(rng, kind)
        p, q = _query(rng, kind), _query(rng, kind)
        nearest = s.project(p).nearest[0]
        again = s.project(nearest)
        assert again.distance <= 1e-12 * (1.0 + np.linalg.norm(nearest))
        np.testing.assert_allclose(again.nearest[0], nearest, atol=1e-12)
        assert abs(s.distance(p) - s.distance(q)) <= np.linalg.norm(p - q) + 1e-12


def test_project_batch_matches_single_projection():
    rng = np.random.default_rng(13)
    for kind in _KINDS:
        s = _random_set(rng, kind)
        rows = np.array([_query(rng, kind) for _ in range(50)])
        points, distances = s.project_batch(rows)
        for row, point, distance in zip(rows, points, distances):
            single = s.project(row)
            assert distance == pytest.approx(single.distance, abs=1e-12)
            np.testing.assert_allclose(point, single.nearest[0], atol=1e-10)


def test_relaxed_project_picks_the_nearer_of_two_points():
    x, a = relaxed_project(FiniteSet([[-3.0], [6.0]]), [1.0], 0.5)
    assert a.tolist() == [-3.0]
    assert x.tolist() == [-1.0]


def test_finite_set_enumerates_ties_in_lexicographic_order():
    s = FiniteSet([[1.0, 0.0], [-1.0, 0.0], [0.0, 5.0]])
    result = s.project([0.0, 0.0])
    assert [p.tolist() for p in result.nearest] == [[-1.0, 0.0], [1.0, 0.0]]
    assert result.distance == 1.0

    assert select_nearest(result).tolist() == [-1.0, 0.0]
    previous = np.array([2.0, 0.0])
    chosen = select_nearest(result, TiePolicy.NEAREST_TO_PREVIOUS, previous)
    assert chosen.tolist() == [1.0, 0.0]


def test_relaxed_projections_enumerates_every_tie():
    steps = relaxed_projections(FiniteSet([[-1.0], [1.0]]), [0.0], 0.5)
    assert [(x.tolist(), a.tolist()) for x, a in steps] == [
        ([-0.5], [-1.0]),
        ([0.5], [1.0]),
    ]


def test_tie_policy_all_cannot_select_a_single_point():
    result = FiniteSet([[-1.0], [1.0]]).project([0.0])
    with pytest.raises(InvalidParameterError):
        select_nearest(result, TiePolicy.ALL)


@pytest.mark.parametrize("lam", [0.0, -0.1, 1.5])
def test_relaxation_outside_unit_interval_is_rejected(lam):
    with pytest.raises(InvalidParameterError):
        relaxed_project(Ball([0.0, 0.0], 1.0), [2.0, 0.0], lam)


def test_full_relaxation_lands_on_the_nearest_point():
    x, a = relaxed_project(Ball([0.0, 0.0], 1.0), [3.0, 4.0], 1.0)
    np.testing.assert_allclose(x, [0.6, 0.8])
    assert x.tolist() == a.tolist()


def test_dimension_mismatch_is_reported():
    with pytest.raises(DimensionMismatchError):
        Ball([0.0, 0.0], 1.0).project([1.0, 2.0, 3.0])


def test_invalid_set_parameters_are_rejected():
    with pytest.raises(InvalidParameterError):
        AffineSubspace([0.0, 0.0], [[1.0, 1.0]])
    with pytest.raises(InvalidParameterError):
        HalfSpace([2.0, 0.0])
    with pytest.raises(InvalidParameterError):
        Ball([0.0], -1.0)
    with pytest.raises(InvalidParameterError):
        Transformed(Ball([0.0, 0.0], 1.0), [[1.0, 0.5], [0.0, 1.0]])


def test_sphere_projection_from_center_is_not_exhaustive():
    result = Sphere([1.0, 1.0], 2.0).project([1.0, 1.0])
    assert not result.exhaustive
    assert result.distance == 2.0
    np.testing.assert_allclose(result.nearest[0], [-1.0, 1.0])


def test_box_with_open_sides_projects_by_clipping():
    box = build_set(BoxSpec(lower=[0.0, None], upper=[1.0, 2.0]))
    result = box.project([3.0, -10.0])
    assert result.nearest[0].tolist() == [1.0, -10.0]
    assert result.distance == 2.0


def test_whole_space_box_leaves_every_point_in_place():
    space = Box.whole_space(2)
    rng = np.random.default_rng(5)
    for q in rng.normal(scale=100.0, size=(20, 2)):
        result = space.project(q)
        assert result.nearest[0].tolist() == q.tolist()
        assert result.distance == 0.0
    assert membership(space, [1e6, -1e6])


def test_box_with_every_side_open_builds_from_its_spec():
    box = build_set(BoxSpec(lower=[None, None], upper=[None, None]))
    assert box.project([3.0, -4.0]).distance == 0.0
    assert box.to_spec() == BoxSpec(lower=[None, None], upper=[None, None])
    with pytest.raises(InvalidParameterError):
        Box([0.0, math.nan], [1.0, 1.0])


def test_near_equal_distances_count_as_a_tie():
    result = FiniteSet([[1.0], [-1.0 - 1e-10]]).project([0.0])
    assert len(result.nearest) == 2
    assert result.distance == 1.0
    apart = FiniteSet([[1.0], [-1.0 - 1e-6]]).project([0.0])
    assert len(apart.nearest) == 1


def test_malformed_points_raise_marp_errors():
    with pytest.raises(DimensionMismatchError):
        as_point([[1.0, 2.0], [3.0, 4.0]])
    with pytest.raises(InvalidParameterError):
        as_point([1.0, math.inf])
    with pytest.raises(InvalidParameterError):
        as_point(["north"])
    with pytest.raises(InvalidParameterError):
        HalfSpace([math.nan, 1.0])


def test_transformed_set_maps_projections_through_the_orthogonal_map():
    inner = FiniteSet([[1.0, 0.0]])
    turned = Transformed(inner, rotation(math.pi / 2), [0.0, 1.0])
    result = turned.project([0.0, 0.0])
    np.testing.assert_allclose(result.nearest[0], [0.0, 2.0], atol=1e-15)
    assert result.distance == pytest.approx(2.0)


def test_identity_transform_leaves_projections_unchanged():
    inner = Ball([1.0, -2.0], 0.5)
    same = transform_set(inner, np.eye(2))
    rng = np.random.default_rng(5)
    for q in rng.normal(scale=3.0, size=(50, 2)):
        expected = inner.project(q)
        result = same.project(q)
        np.testing.assert_allclose(result.nearest[0], expected.nearest[0], atol=1e-15)
        assert result.distance == pytest.approx(expected.distance, abs=1e-15)


def test_reflection_is_an_involution():
    matrix = reflection(0.3)
    np.testing.assert_allclose(matrix @ matrix, np.eye(2), atol=1e-15)
    assert np.linalg.det(matrix) == pytest.approx(-1.0)


def test_membership_uses_relative_tolerance():
    line = HalfSpace([1.0, 0.0], 0.0)
    assert membership(line, [0.0, 5.0])
    assert membership(line, [1e-10, 0.0])
    assert not membership(line, [1e-6, 0.0])
    assert membership(line, [1e-6, 0.0], tol=1e-5)


def test_build_set_round_trips_through_spec():
    spec = TransformedSpec(
        inner=SawtoothSpec(k_max=12),
        matrix=reflection(0.2).tolist(),
        translation=[0.5, -0.5],
    )
    s = build_set(spec)
    assert isinstance(s, Transformed)
    assert s.to_spec().inner == SawtoothSpec(k_max=12)
    again = build_set(FiniteSetSpec(points=[[1.0, 2.0], [3.0, 4.0]]))
    assert again.to_spec() == FiniteSetSpec(points=[[1.0, 2.0], [3.0, 4.0]])
