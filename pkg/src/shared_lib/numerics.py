"""Tolerances and small vector helpers shared across services."""

import logging
from typing import Iterable, Optional, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from marp.errors import DimensionMismatchError, InvalidParameterError

logger = logging.getLogger(__name__)

FloatArray = NDArray[np.float64]

# Nearest points closer than this (relative) count as ties.
TIE_RTOL = 1e-9
MEMBERSHIP_RTOL = 1e-9
CYCLE_RTOL = 1e-12
# A state repeating with gaps this small (relative) has stalled, not cycled.
STALL_RTOL = 1e-9
ORTHOGONALITY_TOL = 1e-12
DEFAULT_SEED = 20130430


def as_point(values: ArrayLike) -> FloatArray:
    """Convert input to a finite 1-D float array."""
    try:
        point = np.atleast_1d(np.asarray(values, dtype=np.float64))
    except (TypeError, ValueError) as e:
        raise InvalidParameterError(f"Not a numeric point: {e}") from e
    if point.ndim != 1:
        raise DimensionMismatchError(f"Expected a vector, got shape {point.shape}")
    if not np.all(np.isfinite(point)):
        raise InvalidParameterError("Point coordinates must be finite")
    return point


def norm(vector: ArrayLike) -> float:
    return float(np.linalg.norm(vector))


def relative_tol(tol: float, *points: ArrayLike) -> float:
    """Scale an absolute tolerance by 1 + the largest norm among points."""
    scale = max((norm(p) for p in points), default=0.0)
    return tol * (1.0 + scale)


def lex_sorted(points: Iterable[FloatArray]) -> list[FloatArray]:
    return sorted(points, key=lambda p: tuple(float(v) for v in p))


def dedupe_points(points: Sequence[FloatArray], tol: float) -> list[FloatArray]:
    """Drop points within tol of an earlier one, keeping lexicographic order."""
    unique: list[FloatArray] = []
    for point in lex_sorted(points):
        if all(norm(point - kept) > tol for kept in unique):
            unique.append(point)
    return unique


def make_rng(seed: Optional[int]) -> np.random.Generator:
    """Create a seeded generator, falling back to the package default seed."""
    resolved = DEFAULT_SEED if seed is None else seed
    logger.debug("Creating random generator with seed %s", resolved)
    return np.random.default_rng(resolved)


def unit_vectors(rng: np.random.Generator, count: int, dimension: int) -> FloatArray:
    """Uniform directions on the unit sphere."""
    raw = rng.standard_normal((count, dimension))
    lengths = np.linalg.norm(raw, axis=1, keepdims=True)
    lengths[lengths == 0] = 1.0
    return raw / lengths


def uniform_ball(
    rng: np.random.Generator,
    count: int,
    center: FloatArray,
    radius: float,
) -> FloatArray:
    """Uniform samples in the closed ball around center."""
    dimension = center.shape[0]
    directions = unit_vectors(rng, count, dimension)
    radii = radius * rng.random(count) ** (1.0 / dimension)
    return center + directions * radii[:, None]
