"""Tests for the sawtooth hypograph, its mirror image and its landmarks."""

from __future__ import annotations

import math

import numpy as np
import pytest
from scipy.spatial.distance import cdist

from marp.errors import InvalidParameterError
from marp.models.schemas import SawtoothSpec
from marp.services.geometry import build_set, membership
from marp.services.sawtooth import (
    SAWTOOTH_W,
    Sawtooth2D,
    sawtooth_landmarks,
    sawtooth_pair,
)


def _dense_boundary(shape: Sawtooth2D, per_edge: int = 400) -> np.ndarray:
    """Boundary polyline sampled densely, vertices included, plus flat tails."""
    t = np.linspace(0.0, 1.0, per_edge)[:, None]
    pieces = [s + t * (e - s) for s, e in zip(shape.starts, shape.ends)]
    tail = np.linspace(0.0, 1.0, 4000)
    pieces.append(np.column_stack([tail - 1.0, np.zeros_like(tail)]))
    pieces.append(np.column_stack([tail + 1.0, np.zeros_like(tail)]))
    return np.vstack(pieces)


def test_angle_satisfies_cos_4w():
    assert math.cos(4 * SAWTOOTH_W) == pytest.approx(0.75, abs=1e-15)


def test_height_has_peaks_and_valleys():
    shape = Sawtooth2D(k_max=30)
    for k in range(0, 10):
        peak = 2.0**-k
        valley_x, valley_y = shape.valley(k)
        assert shape.height(np.array([peak]))[0] == pytest.approx(0.0, abs=1e-15)
        valley = shape.height(np.array([valley_x]))[0]
        assert valley == pytest.approx(valley_y, rel=1e-12)
        assert valley_y == pytest.approx(-math.tan(SAWTOOTH_W) * 2.0 ** -(k + 2))
    assert shape.height(np.array([-3.0, 5.0])).tolist() == [0.0, 0.0]


def test_points_below_the_graph_are_members():
    shape = Sawtooth2D()
    assert membership(shape, [0.3, -1.0])
    assert membership(shape, [0.0, 0.0])
    assert not membership(shape, [0.3, 0.01])


@pytest.mark.parametrize("k", range(1, 11))
def test_landmark_distances_and_angle(k):
    marks = sawtooth_landmarks(Sawtooth2D(), k)
    d = 2.0 ** -(k + 1)
    assert marks.beta1 == pytest.approx(d * math.sqrt(2.0), abs=1e-12)
    assert marks.beta2 == pytest.approx(d * math.sqrt(2.0), abs=1e-12)
    assert marks.cos_angle == pytest.approx(0.75, abs=1e-12)


@pytest.mark.parametrize("k", range(1, 11))
def test_mirror_peak_projects_onto_two_edge_midpoints(k):
    shape = Sawtooth2D()
    marks = sawtooth_landmarks(shape, k)
    result = shape.project(marks.z_k)
    assert len(result.nearest) == 2
    expected = sorted([marks.h.tolist(), marks.h_prime.tolist()])
    for got, want in zip(result.nearest, expected):
        np.testing.assert_allclose(got, want, atol=1e-9)


def test_mirror_peak_projection_agrees_with_dense_boundary():
    shape = Sawtooth2D(k_max=16)
    boundary = _dense_boundary(shape)
    for k in range(1, 8):
        z = sawtooth_landmarks(shape, k).z_k
        oracle = float(cdist(z[None, :], boundary).min())
        assert shape.distance(z) == pytest.approx(oracle, abs=1e-6 * 2.0**-k)


def test_projection_matches_dense_boundary_on_random_points():
    shape = Sawtooth2D(k_max=16)
    boundary = _dense_boundary(shape, per_edge=500)
    rng = np.random.default_rng(5)
    queries = np.column_stack([rng.uniform(-0.2, 1.2, 200), rng.uniform(0.0, 0.4, 200)])
    oracle = cdist(queries, boundary).min(axis=1)
    _, distances = shape.project_batch(queries)
    outside = queries[:, 1] > shape.height(queries[:, 0])
    np.testing.assert_allclose(distances[outside], oracle[outside], atol=5e-4)
    assert np.all(distances <= oracle + 1e-12)


def test_sawtooth_pair_mirrors_about_the_2w_line():
    a, b = sawtooth_pair()
    point = np.array([0.4, -0.05])
    np.testing.assert_allclose(b.forward(point[None, :])[0], a.reflector() @ point)
    assert membership(b, a.reflector() @ point)


def test_sawtooth_spec_defaults_to_the_standard_angle():
    shape = build_set(SawtoothSpec())
    assert isinstance(shape, Sawtooth2D)
    assert shape.w == SAWTOOTH_W
    assert shape.to_spec() == SawtoothSpec()


def test_invalid_sawtooth_parameters_are_rejected():
    with pytest.raises(InvalidParameterError):
        Sawtooth2D(w=1.0)
    with pytest.raises(InvalidParameterError):
        Sawtooth2D(k_max=1)
    with pytest.raises(InvalidParameterError):
        sawtooth_landmarks(Sawtooth2D(k_max=5), 5)
