"""Closed sets with exact set-valued nearest-point projection."""

import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from numpy.typing import ArrayLike
from scipy.spatial.distance import cdist

from marp.errors import (
    DimensionMismatchError,
    InvalidParameterError,
    UnsupportedConfigurationError,
)
from marp.models.enums import TiePolicy
from marp.models.schemas import (
    AffineSubspaceSpec,
    BallSpec,
    BoxSpec,
    FiniteSetSpec,
    HalfSpaceSpec,
    SetSpec,
    SphereSpec,
    TransformedSpec,
)
from marp.services.angular import Cone2D, direction_angle
from shared_lib.numerics import (
    MEMBERSHIP_RTOL,
    ORTHOGONALITY_TOL,
    TIE_RTOL,
    FloatArray,
    as_point,
    dedupe_points,
    lex_sorted,
    norm,
    relative_tol,
    uniform_ball,
)

logger = logging.getLogger(__name__)

_BATCH_CHUNK = 4096


@dataclass(frozen=True)
class ProjectionResult:
    """Nearest points of a query and their common distance.

    exhaustive is False when the true nearest set is infinite and only a
    canonical representative is listed.
    """

    nearest: tuple[FloatArray, ...]
    distance: float
    exhaustive: bool = True


class ClosedSet(ABC):
    """A nonempty closed subset of R^d."""

    dimension: int

    @abstractmethod
    def _nearest(self, q: FloatArray) -> ProjectionResult:
        """Projection of an already validated query."""

    @abstractmethod
    def to_spec(self) -> SetSpec:
        """JSON-facing description of this set."""

    def project(self, q: ArrayLike) -> ProjectionResult:
        point = self._check(q)
        return self._nearest(point)

    def distance(self, q: ArrayLike) -> float:
        return self.project(q).distance

    def project_batch(self, points: ArrayLike) -> tuple[FloatArray, FloatArray]:
        """One lexicographically smallest nearest point per row, plus distances."""
        rows = np.atleast_2d(np.asarray(points, dtype=np.float64))
        self._check_rows(rows)
        nearest = np.empty_like(rows)
        distances = np.empty(rows.shape[0])
        for start in range(0, rows.shape[0], _BATCH_CHUNK):
            chunk = rows[start : start + _BATCH_CHUNK]
            stop = start + len(chunk)
            nearest[start:stop], distances[start:stop] = self._nearest_batch(chunk)
        return nearest, distances

    def _nearest_batch(self, rows: FloatArray) -> tuple[FloatArray, FloatArray]:
        results = [self._nearest(row) for row in rows]
        return (
            np.array([r.nearest[0] for r in results]),
            np.array([r.distance for r in results]),
        )

    def sample(
        self, rng: np.random.Generator, count: int, center: FloatArray, radius: float
    ) -> FloatArray:
        """Points of the set, concentrated near center."""
        raise UnsupportedConfigurationError(
            f"{type(self).__name__} has no interior sampler"
        )

    def sample_boundary(
        self, rng: np.random.Generator, count: int, center: FloatArray, radius: float
    ) -> FloatArray:
        """Boundary points of the set, concentrated near center."""
        raise UnsupportedConfigurationError(
            f"{type(self).__name__} has no boundary sampler"
        )

    def candidate_points(self, center: FloatArray, radius: float) -> list[FloatArray]:
        """Distinguished points (vertices, corners) within radius of center."""
        return []

    def normal_cone_union(self, center: FloatArray, radius: float) -> Optional[Cone2D]:
        """Union of proximal normal cones over set points within radius of center.

        Returns None when no point of the set lies within radius.
        """
        raise UnsupportedConfigurationError(
            f"{type(self).__name__} has no exact planar normal cones"
        )

    def _check(self, q: ArrayLike) -> FloatArray:
        point = as_point(q)
        if point.shape[0] != self.dimension:
            raise DimensionMismatchError(
                f"Query has dimension {point.shape[0]}, set has {self.dimension}"
            )
        return point

    def _check_rows(self, rows: FloatArray) -> None:
        if rows.ndim != 2 or rows.shape[1] != self.dimension:
            raise DimensionMismatchError(
                f"Queries have shape {rows.shape}, set has dimension {self.dimension}"
            )

    def _require_planar(self) -> None:
        if self.dimension != 2:
            raise UnsupportedConfigurationError("exact cones need dimension 2")


def _ties(
    candidates: FloatArray, distances: FloatArray, q: FloatArray
) -> ProjectionResult:
    best = float(distances.min())
    tol = relative_tol(TIE_RTOL, q)
    chosen = [candidates[i] for i in np.flatnonzero(distances <= best + tol)]
    return ProjectionResult(tuple(dedupe_points(chosen, tol)), best)


class FiniteSet(ClosedSet):
    def __init__(self, points: ArrayLike):
        rows = np.atleast_2d(np.asarray(points, dtype=np.float64))
        if rows.size == 0 or not np.all(np.isfinite(rows)):
            raise InvalidParameterError("FiniteSet needs finite points")
        self.points = rows
        self.dimension = rows.shape[1]

    def _nearest(self, q: FloatArray) -> ProjectionResult:
        distances = cdist(q[None, :], self.points)[0]
        return _ties(self.points, distances, q)

    def _nearest_batch(self, rows: FloatArray) -> tuple[FloatArray, FloatArray]:
        # Lexicographic order first so argmin picks the LexMin tie.
        order = np.lexsort(self.points.T[::-1])
        ordered = self.points[order]
        distances = cdist(rows, ordered)
        idx = distances.argmin(axis=1)
        return ordered[idx], distances[np.arange(len(rows)), idx]

    def sample(
        self, rng: np.random.Generator, count: int, center: FloatArray, radius: float
    ) -> FloatArray:
        near = np.array(self.candidate_points(center, radius))
        if near.size == 0:
            return np.empty((0, self.dimension))
        return near[rng.integers(0, len(near), size=count)]

    sample_boundary = sample

    def candidate_points(self, center: FloatArray, radius: float) -> list[FloatArray]:
        distances = np.linalg.norm(self.points - center, axis=1)
        return [p for p in self.points[distances <= radius]]

    def normal_cone_union(self, center: FloatArray, radius: float) -> Optional[Cone2D]:
        self._require_planar()
        if not self.candidate_points(center, radius):
            return None
        return Cone2D.full()

    def to_spec(self) -> FiniteSetSpec:
        return FiniteSetSpec(points=self.points.tolist())


class AffineSubspace(ClosedSet):
    """base + span of orthonormal basis rows."""

    def __init__(self, base: ArrayLike, basis: ArrayLike = ()):
        self.base = as_point(base)
        self.dimension = self.base.shape[0]
        rows = np.asarray(basis, dtype=np.float64).reshape(-1, self.dimension)
        gram = rows @ rows.T
        if not np.allclose(gram, np.eye(len(rows)), rtol=0, atol=ORTHOGONALITY_TOL):
            raise InvalidParameterError("AffineSubspace basis must be orthonormal")
        self.basis = rows

    def _nearest(self, q: FloatArray) -> ProjectionResult:
        point = self.base + self.basis.T @ (self.basis @ (q - self.base))
        return ProjectionResult((point,), norm(q - point))

    def _nearest_batch(self, rows: FloatArray) -> tuple[FloatArray, FloatArray]:
        offsets = rows - self.base
        points = self.base + (offsets @ self.basis.T) @ self.basis
        return points, np.linalg.norm(rows - points, axis=1)

    def sample(
        self, rng: np.random.Generator, count: int, center: FloatArray, radius: float
    ) -> FloatArray:
        anchor = self._nearest(center).nearest[0]
        coefficients = rng.uniform(-radius, radius, size=(count, len(self.basis)))
        return anchor + coefficients @ self.basis

    def sample_boundary(
        self, rng: np.random.Generator, count: int, center: FloatArray, radius: float
    ) -> FloatArray:
        if len(self.basis) == self.dimension:
            return np.empty((0, self.dimension))
        return self.sample(rng, count, center, radius)

    def candidate_points(self, center: FloatArray, radius: float) -> list[FloatArray]:
        if len(self.basis) == 0 and norm(self.base - center) <= radius:
            return [self.base]
        return []

    def normal_cone_union(self, center: FloatArray, radius: float) -> Optional[Cone2D]:
        self._require_planar()
        if self._nearest(center).distance > radius:
            return None
        if len(self.basis) == 0:
            return Cone2D.full()
        if len(self.basis) == 2:
            return Cone2D.zero()
        normal = np.array([-self.basis[0, 1], self.basis[0, 0]])
        return Cone2D.from_directions([normal, -normal])

    def to_spec(self) -> AffineSubspaceSpec:
        return AffineSubspaceSpec(base=self.base.tolist(), basis=self.basis.tolist())


class HalfSpace(ClosedSet):
    """{x : <normal, x> <= offset}"""

    def __init__(self, normal: ArrayLike, offset: float = 0.0):
        self.normal = as_point(normal)
        if abs(norm(self.normal) - 1.0) > ORTHOGONALITY_TOL:
            raise InvalidParameterError("HalfSpace normal must have unit length")
        self.offset = float(offset)
        self.dimension = self.normal.shape[0]

    def _excess(self, q: FloatArray) -> float:
        return float(self.normal @ q) - self.offset

    def _nearest(self, q: FloatArray) -> ProjectionResult:
        excess = self._excess(q)
        if excess <= 0:
            return ProjectionResult((q.copy(),), 0.0)
        return ProjectionResult((q - excess * self.normal,), excess)

    def _nearest_batch(self, rows: FloatArray) -> tuple[FloatArray, FloatArray]:
        excess = np.maximum(rows @ self.normal - self.offset, 0.0)
        return rows - excess[:, None] * self.normal, excess

    def sample(
        self, rng: np.random.Generator, count: int, center: FloatArray, radius: float
    ) -> FloatArray:
        return self._nearest_batch(uniform_ball(rng, count, center, radius))[0]

    def sample_boundary(
        self, rng: np.random.Generator, count: int, center: FloatArray, radius: float
    ) -> FloatArray:
        raw = uniform_ball(rng, count, center, radius)
        excess = raw @ self.normal - self.offset
        return raw - excess[:, None] * self.normal

    def normal_cone_union(self, center: FloatArray, radius: float) -> Optional[Cone2D]:
        self._require_planar()
        excess = self._excess(center)
        if excess > radius:
            return None
        if abs(excess) <= radius:
            return Cone2D.ray(direction_angle(self.normal))
        return Cone2D.zero()

    def to_spec(self) -> HalfSpaceSpec:
        return HalfSpaceSpec(normal=self.normal.tolist(), offset=self.offset)


class Box(ClosedSet):
    """Coordinate box; infinite bounds are allowed."""

    def __init__(self, lower: ArrayLike, upper: ArrayLike):
        self.lower = np.asarray(lower, dtype=np.float64).ravel()
        self.upper = np.asarray(upper, dtype=np.float64).ravel()
        if self.lower.shape != self.upper.shape or self.lower.size == 0:
            raise InvalidParameterError("Box bounds must have matching nonzero size")
        if np.any(np.isnan(self.lower) | np.isnan(self.upper)):
            raise InvalidParameterError("Box bounds must not be NaN")
        if np.any(self.lower > self.upper):
            raise InvalidParameterError("Box needs lower <= upper")
        self.dimension = self.lower.shape[0]

    @classmethod
    def whole_space(cls, dimension: int) -> "Box":
        return cls(np.full(dimension, -np.inf), np.full(dimension, np.inf))

    def _nearest(self, q: FloatArray) -> ProjectionResult:
        point = np.clip(q, self.lower, self.upper)
        return ProjectionResult((point,), norm(q - point))

    def _nearest_batch(self, rows: FloatArray) -> tuple[FloatArray, FloatArray]:
        points = np.clip(rows, self.lower, self.upper)
        return points, np.linalg.norm(rows - points, axis=1)

    def sample(
        self, rng: np.random.Generator, count: int, center: FloatArray, radius: float
    ) -> FloatArray:
        anchor = np.clip(center, self.lower, self.upper)
        lo = np.maximum(self.lower, anchor - radius)
        hi = np.minimum(self.upper, anchor + radius)
        return rng.uniform(lo, hi, size=(count, self.dimension))

    def sample_boundary(
        self, rng: np.random.Generator, count: int, center: FloatArray, radius: float
    ) -> FloatArray:
        faces = [
            (axis, bound)
            for axis in range(self.dimension)
            for bound in (self.lower[axis], self.upper[axis])
            if np.isfinite(bound)
        ]
        if not faces:
            return np.empty((0, self.dimension))
        points = self.sample(rng, count, center, radius)
        picks = rng.integers(0, len(faces), size=count)
        for row, pick in enumerate(picks):
            axis, bound = faces[pick]
            points[row, axis] = bound
        return points

    def _corners(self) -> list[FloatArray]:
        if not (np.all(np.isfinite(self.lower)) and np.all(np.isfinite(self.upper))):
            return []
        if self.dimension > 3:
            return []
        grids = np.array(
            np.meshgrid(*zip(self.lower, self.upper), indexing="ij")
        ).reshape(self.dimension, -1)
        return [column.copy() for column in grids.T]

    def candidate_points(self, center: FloatArray, radius: float) -> list[FloatArray]:
        return [c for c in self._corners() if norm(c - center) <= radius]

    def normal_cone_union(self, center: FloatArray, radius: float) -> Optional[Cone2D]:
        self._require_planar()
        if self._nearest(center).distance > radius:
            return None
        cone = Cone2D.zero()
        for axis in range(2):
            for bound, sign in ((self.lower[axis], -1.0), (self.upper[axis], 1.0)):
                if not np.isfinite(bound):
                    continue
                face_lo = self.lower.copy()
                face_hi = self.upper.copy()
                face_lo[axis] = face_hi[axis] = bound
                if norm(center - np.clip(center, face_lo, face_hi)) <= radius:
                    direction = np.zeros(2)
                    direction[axis] = sign
                    cone = cone.union(Cone2D.ray(direction_angle(direction)))
        for corner in self.candidate_points(center, radius):
            # Corner cone spans the two adjacent outward face normals.
            horizontal = 0.0 if corner[0] == self.upper[0] else math.pi
            vertical = math.pi / 2 if corner[1] == self.upper[1] else 3 * math.pi / 2
            start, end = sorted((horizontal, vertical))
            if end - start > math.pi:
                start, end = end, start
            cone = cone.union(Cone2D.between(start, end))
        return cone

    def to_spec(self) -> BoxSpec:
        def _bound(values: FloatArray) -> list[Optional[float]]:
            return [float(v) if np.isfinite(v) else None for v in values]

        return BoxSpec(lower=_bound(self.lower), upper=_bound(self.upper))


class Ball(ClosedSet):
    """Closed solid ball."""

    def __init__(self, center: ArrayLike, radius: float):
        self.center = as_point(center)
        if not radius > 0:
            raise InvalidParameterError("Ball radius must be positive")
        self.radius = float(radius)
        self.dimension = self.center.shape[0]

    def _nearest(self, q: FloatArray) -> ProjectionResult:
        offset = q - self.center
        length = norm(offset)
        if length <= self.radius:
            return ProjectionResult((q.copy(),), 0.0)
        point = self.center + offset * (self.radius / length)
        return ProjectionResult((point,), length - self.radius)

    def _nearest_batch(self, rows: FloatArray) -> tuple[FloatArray, FloatArray]:
        offsets = rows - self.center
        lengths = np.linalg.norm(offsets, axis=1)
        scale = np.minimum(1.0, self.radius / np.maximum(lengths, 1e-300))
        return self.center + offsets * scale[:, None], np.maximum(
            lengths - self.radius, 0.0
        )

    def sample(
        self, rng: np.random.Generator, count: int, center: FloatArray, radius: float
    ) -> FloatArray:
        return self._nearest_batch(uniform_ball(rng, count, center, radius))[0]

    def sample_boundary(
        self, rng: np.random.Generator, count: int, center: FloatArray, radius: float
    ) -> FloatArray:
        return _radial_sphere_samples(
            rng, count, center, radius, self.center, self.radius
        )

    def normal_cone_union(self, center: FloatArray, radius: float) -> Optional[Cone2D]:
        self._require_planar()
        if norm(center - self.center) > self.radius + radius:
            return None
        return _circle_arc(center, radius, self.center, self.radius)

    def to_spec(self) -> BallSpec:
        return BallSpec(center=self.center.tolist(), radius=self.radius)


class Sphere(ClosedSet):
    """Sphere of a given radius; nonconvex, projection is singular at the center."""

    def __init__(self, center: ArrayLike, radius: float):
        self.center = as_point(center)
        if not radius > 0:
            raise InvalidParameterError("Sphere radius must be positive")
        self.radius = float(radius)
        self.dimension = self.center.shape[0]

    def _nearest(self, q: FloatArray) -> ProjectionResult:
        offset = q - self.center
        length = norm(offset)
        if length == 0.0:
            representative = self.center.copy()
            representative[0] -= self.radius
            return ProjectionResult((representative,), self.radius, exhaustive=False)
        point = self.center + offset * (self.radius / length)
        return ProjectionResult((point,), abs(length - self.radius))

    def sample(
        self, rng: np.random.Generator, count: int, center: FloatArray, radius: float
    ) -> FloatArray:
        return _radial_sphere_samples(
            rng, count, center, radius, self.center, self.radius
        )

    sample_boundary = sample

    def normal_cone_union(self, center: FloatArray, radius: float) -> Optional[Cone2D]:
        self._require_planar()
        gap = norm(center - self.center)
        if gap > self.radius + radius or gap < self.radius - radius:
            return None
        arc = _circle_arc(center, radius, self.center, self.radius)
        # Points between the center and p also project to p.
        return arc.union(arc.negated())

    def to_spec(self) -> SphereSpec:
        return SphereSpec(center=self.center.tolist(), radius=self.radius)


def _radial_sphere_samples(
    rng: np.random.Generator,
    count: int,
    center: FloatArray,
    radius: float,
    sphere_center: FloatArray,
    sphere_radius: float,
) -> FloatArray:
    raw = uniform_ball(rng, count, center, radius) - sphere_center
    lengths = np.linalg.norm(raw, axis=1)
    raw = raw[lengths > 0]
    return sphere_center + raw * (sphere_radius / lengths[lengths > 0])[:, None]


def _circle_arc(
    center: FloatArray, radius: float, circle_center: FloatArray, circle_radius: float
) -> Cone2D:
    """Outward normal directions of circle points within radius of center."""
    offset = center - circle_center
    gap = norm(offset)
    if gap == 0.0:
        return Cone2D.full() if circle_radius <= radius else Cone2D.zero()
    cosine = (gap**2 + circle_radius**2 - radius**2) / (2 * circle_radius * gap)
    if cosine > 1.0:
        return Cone2D.zero()
    if cosine <= -1.0:
        return Cone2D.full()
    half_width = math.acos(cosine)
    mid = direction_angle(offset)
    return Cone2D.between(mid - half_width, mid + half_width)


class Transformed(ClosedSet):
    """Image of an inner set under x -> Q x + t with Q orthogonal."""

    def __init__(
        self, inner: ClosedSet, matrix: ArrayLike, translation: ArrayLike = ()
    ):
        q_matrix = np.asarray(matrix, dtype=np.float64)
        dimension = inner.dimension
        if q_matrix.shape != (dimension, dimension):
            raise DimensionMismatchError(
                f"Matrix shape {q_matrix.shape} does not match dimension {dimension}"
            )
        defect = np.abs(q_matrix.T @ q_matrix - np.eye(dimension)).max()
        if defect > ORTHOGONALITY_TOL:
            raise InvalidParameterError(
                f"Matrix is not orthogonal (defect {defect:.3e})"
            )
        shift = np.asarray(translation, dtype=np.float64).ravel()
        self.translation = shift if shift.size else np.zeros(dimension)
        if self.translation.shape != (dimension,):
            raise DimensionMismatchError("Translation does not match dimension")
        self.inner = inner
        self.matrix = q_matrix
        self.dimension = dimension

    def forward(self, points: FloatArray) -> FloatArray:
        return points @ self.matrix.T + self.translation

    def backward(self, points: FloatArray) -> FloatArray:
        return (points - self.translation) @ self.matrix

    def _nearest(self, q: FloatArray) -> ProjectionResult:
        inner = self.inner._nearest(self.backward(q))
        mapped = [self.forward(p) for p in inner.nearest]
        return ProjectionResult(
            tuple(lex_sorted(mapped)), inner.distance, inner.exhaustive
        )

    def _nearest_batch(self, rows: FloatArray) -> tuple[FloatArray, FloatArray]:
        points, distances = self.inner._nearest_batch(self.backward(rows))
        return self.forward(points), distances

    def sample(
        self, rng: np.random.Generator, count: int, center: FloatArray, radius: float
    ) -> FloatArray:
        inner = self.inner.sample(rng, count, self.backward(center), radius)
        return self.forward(inner)

    def sample_boundary(
        self, rng: np.random.Generator, count: int, center: FloatArray, radius: float
    ) -> FloatArray:
        return self.forward(
            self.inner.sample_boundary(rng, count, self.backward(center), radius)
        )

    def candidate_points(self, center: FloatArray, radius: float) -> list[FloatArray]:
        inner = self.inner.candidate_points(self.backward(center), radius)
        return [self.forward(p) for p in inner]

    def normal_cone_union(self, center: FloatArray, radius: float) -> Optional[Cone2D]:
        self._require_planar()
        cone = self.inner.normal_cone_union(self.backward(center), radius)
        return None if cone is None else cone.transformed(self.matrix)

    def to_spec(self) -> TransformedSpec:
        return TransformedSpec(
            inner=self.inner.to_spec(),
            matrix=self.matrix.tolist(),
            translation=self.translation.tolist(),
        )


def rotation(angle: float) -> FloatArray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s], [s, c]])


def reflection(angle: float) -> FloatArray:
    """Reflector about the line through the origin at the given angle."""
    c, s = math.cos(2 * angle), math.sin(2 * angle)
    return np.array([[c, s], [s, -c]])


def transform_set(
    inner: ClosedSet, matrix: ArrayLike, translation: ArrayLike = ()
) -> ClosedSet:
    return Transformed(inner, matrix, translation)


def membership(s: ClosedSet, q: ArrayLike, tol: float = MEMBERSHIP_RTOL) -> bool:
    """True iff d_S(q) <= tol * (1 + |q|)."""
    if tol < 0:
        raise InvalidParameterError("tol must be nonnegative")
    point = as_point(q)
    return s.distance(point) <= relative_tol(tol, point)


def project(s: ClosedSet, q: ArrayLike) -> ProjectionResult:
    return s.project(q)


def select_nearest(
    result: ProjectionResult,
    policy: TiePolicy = TiePolicy.LEX_MIN,
    previous: Optional[FloatArray] = None,
) -> FloatArray:
    """Pick one nearest point according to the tie policy."""
    if policy == TiePolicy.ALL:
        raise InvalidParameterError("TiePolicy.ALL enumerates; use relaxed_projections")
    if policy == TiePolicy.NEAREST_TO_PREVIOUS and previous is not None:
        return min(result.nearest, key=lambda p: norm(p - previous))
    return result.nearest[0]


def _relax(y: FloatArray, a: FloatArray, lam: float) -> FloatArray:
    if lam == 1.0:
        return a.copy()
    return (1.0 - lam) * y + lam * a


def _check_lambda(lam: float) -> None:
    if not 0.0 < lam <= 1.0:
        raise InvalidParameterError(f"relaxation parameter {lam} is outside (0, 1]")


def relaxed_project(
    s: ClosedSet,
    y: ArrayLike,
    lam: float,
    policy: TiePolicy = TiePolicy.LEX_MIN,
    previous: Optional[FloatArray] = None,
) -> tuple[FloatArray, FloatArray]:
    """Return (x, a) with a a nearest point of y and x = (1 - lam) y + lam a."""
    _check_lambda(lam)
    point = s._check(y)
    a = select_nearest(s._nearest(point), policy, previous)
    return _relax(point, a, lam), a


def relaxed_projections(
    s: ClosedSet, y: ArrayLike, lam: float
) -> list[tuple[FloatArray, FloatArray]]:
    """Every relaxed projection of y, one per enumerated nearest point."""
    _check_lambda(lam)
    point = s._check(y)
    return [(_relax(point, a, lam), a) for a in s._nearest(point).nearest]


def build_set(spec: SetSpec) -> ClosedSet:
    """Instantiate a closed set from its JSON description."""
    builder = _BUILDERS.get(spec.type)
    if builder is None:
        raise UnsupportedConfigurationError(f"Unknown set type {spec.type!r}")
    return builder(spec)


def _build_box(spec: BoxSpec) -> Box:
    lower = [-np.inf if v is None else v for v in spec.lower]
    upper = [np.inf if v is None else v for v in spec.upper]
    return Box(lower, upper)


def _build_sawtooth(spec: SetSpec) -> ClosedSet:
    from marp.services.sawtooth import Sawtooth2D

    return Sawtooth2D.from_spec(spec)  # type: ignore[arg-type]


_BUILDERS: dict[str, Callable[..., ClosedSet]] = {
    "finite": lambda spec: FiniteSet(spec.points),
    "affine": lambda spec: AffineSubspace(spec.base, spec.basis),
    "halfspace": lambda spec: HalfSpace(spec.normal, spec.offset),
    "box": _build_box,
    "ball": lambda spec: Ball(spec.center, spec.radius),
    "sphere": lambda spec: Sphere(spec.center, spec.radius),
    "sawtooth": _build_sawtooth,
    "transformed": lambda spec: transform_set(
        build_set(spec.inner), spec.matrix, spec.translation or ()
    ),
}


def common_dimension(sets: Sequence[ClosedSet]) -> int:
    dims = {s.dimension for s in sets}
    if len(dims) != 1:
        raise DimensionMismatchError(f"Sets have mixed dimensions {sorted(dims)}")
    return dims.pop()
