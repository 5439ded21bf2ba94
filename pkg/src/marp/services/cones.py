"""Restricted proximal normal cones, CQ-numbers and regularity probes."""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
from numpy.typing import ArrayLike

from marp.errors import (
    InvalidParameterError,
    NoBasePointsError,
    NoDataError,
    UnsupportedConfigurationError,
)
from marp.models.enums import ConeMethod
from marp.models.schemas import (
    BoundaryRestriction,
    CQConditionReport,
    CQQuery,
    CQReport,
    GridPoint,
    ProbeQuery,
    RestrictionSpec,
    SetRestriction,
    WholeSpaceRestriction,
)
from marp.services.angular import TWO_PI, Cone2D, unit
from marp.services.geometry import (
    ClosedSet,
    FiniteSet,
    Transformed,
    build_set,
    membership,
)
from marp.services.sawtooth import Sawtooth2D
from shared_lib.numerics import (
    FloatArray,
    as_point,
    make_rng,
    norm,
    uniform_ball,
)

logger = logging.getLogger(__name__)

PREIMAGE_RTOL = 1e-9
_MAX_PAIRWISE = 2000
_CHUNK = 256


@dataclass(frozen=True)
class WholeSpace:
    pass


@dataclass(frozen=True)
class Within:
    set: ClosedSet


@dataclass(frozen=True)
class BoundaryOf:
    set: ClosedSet


Restriction = Union[WholeSpace, Within, BoundaryOf]


def build_restriction(spec: RestrictionSpec) -> Restriction:
    if isinstance(spec, WholeSpaceRestriction):
        return WholeSpace()
    if isinstance(spec, SetRestriction):
        return Within(build_set(spec.set))
    if isinstance(spec, BoundaryRestriction):
        return BoundaryOf(build_set(spec.set))
    raise UnsupportedConfigurationError(f"Unknown restriction {spec!r}")


@dataclass(frozen=True)
class ConeSample:
    """Unit directions drawn from a cone; no rows means the zero cone."""

    directions: FloatArray
    count: int
    seed: Optional[int] = None
    exhaustive: bool = False

    @property
    def is_zero(self) -> bool:
        return len(self.directions) == 0


def _normalized(vectors: FloatArray) -> FloatArray:
    lengths = np.linalg.norm(vectors, axis=1)
    keep = lengths > 0
    return vectors[keep] / lengths[keep, None]


def _restriction_points(
    restriction: Restriction,
    rng: np.random.Generator,
    count: int,
    center: FloatArray,
    radius: float,
) -> FloatArray:
    """Points of the restricting set near center, distinguished points included."""
    if isinstance(restriction, WholeSpace):
        return uniform_ball(rng, count, center, radius)
    inner = restriction.set
    if isinstance(restriction, Within):
        drawn = inner.sample(rng, count, center, radius)
    else:
        drawn = inner.sample_boundary(rng, count, center, radius)
    extra = inner.candidate_points(center, radius)
    if extra:
        drawn = np.vstack([drawn, np.array(extra)])
    return drawn


def _preimage_mask(s: ClosedSet, points: FloatArray, base: FloatArray) -> np.ndarray:
    """Rows b with base in P_S(b), tested as d_S(b) >= |b - base| - tol."""
    _, distances = s.project_batch(points)
    gaps = np.linalg.norm(points - base, axis=1)
    tol = PREIMAGE_RTOL * (1.0 + np.linalg.norm(points, axis=1))
    return distances >= gaps - tol


def restricted_pn_cone(
    A: ClosedSet,
    restriction: Restriction,
    a: ArrayLike,
    samples: int = 2000,
    seed: Optional[int] = None,
    reach: float = 1.0,
) -> Union[Cone2D, ConeSample]:
    """Cone generated by (R intersect P_A^{-1}(a)) - a for the restricting set R.

    Finite restrictions are tested exhaustively. In the plane an unrestricted
    cone comes from the set's own normal-cone arithmetic when available;
    everything else is sampled within reach of a.
    """
    base = as_point(a)
    if not membership(A, base):
        raise InvalidParameterError("base point is not in the set")
    planar = A.dimension == 2

    if isinstance(restriction, Within) and isinstance(restriction.set, FiniteSet):
        points = restriction.set.points
        mask = _preimage_mask(A, points, base)
        directions = _normalized(points[mask] - base)
        if planar:
            return Cone2D.from_directions(directions)
        return ConeSample(directions, count=len(points), exhaustive=True)

    if planar and isinstance(restriction, WholeSpace):
        try:
            cone = A.normal_cone_union(base, PREIMAGE_RTOL * (1.0 + norm(base)))
        except UnsupportedConfigurationError:
            cone = None
        if cone is not None:
            return cone

    rng = make_rng(seed)
    logger.debug("Sampling restricted cone with %d samples, seed %s", samples, seed)
    points = _restriction_points(restriction, rng, samples, base, reach)
    mask = _preimage_mask(A, points, base)
    directions = _normalized(points[mask] - base)
    if planar:
        return Cone2D.from_directions(directions)
    return ConeSample(directions, count=samples, seed=seed)


def _sawtooth_based(s: ClosedSet) -> bool:
    while isinstance(s, Transformed):
        s = s.inner
    return isinstance(s, Sawtooth2D)


def _exact_cone(
    S: ClosedSet, restriction: Restriction, c: FloatArray, delta: float
) -> Cone2D:
    """Union of restricted cones over base points of S within delta of c."""
    S._require_planar()
    if S.distance(c) > delta:
        raise NoBasePointsError(f"no point of {type(S).__name__} within {delta} of c")
    if isinstance(restriction, Within) and isinstance(restriction.set, FiniteSet):
        directions = []
        for r in restriction.set.points:
            for a in S.project(r).nearest:
                if norm(a - c) <= delta and norm(r - a) > 0:
                    directions.append(r - a)
        return Cone2D.from_directions(directions)
    if isinstance(restriction, WholeSpace) or (
        isinstance(restriction, BoundaryOf) and _sawtooth_based(S)
    ):
        cone = S.normal_cone_union(c, delta)
        if cone is None:
            raise NoBasePointsError("no base points within delta")
        return cone
    raise UnsupportedConfigurationError(
        f"exact cones for {type(S).__name__} under {type(restriction).__name__}"
    )


def _exact_theta(
    A: ClosedSet,
    A_restriction: Restriction,
    B: ClosedSet,
    B_restriction: Restriction,
    c: FloatArray,
    delta: float,
) -> tuple[float, Optional[FloatArray], Optional[FloatArray]]:
    u_cone = _exact_cone(A, B_restriction, c, delta)
    v_cone = _exact_cone(B, A_restriction, c, delta).negated()
    gap = u_cone.min_gap(v_cone)
    if gap is None:
        return 0.0, None, None
    angle, u_angle, v_angle = gap
    theta = math.cos(angle)
    # cos(pi/2) is not exactly zero in floating point
    if theta <= 1e-15:
        return 0.0, None, None
    return min(theta, 1.0), unit(u_angle), unit(v_angle)


@dataclass(frozen=True)
class _SideSample:
    directions: FloatArray
    base_offsets: np.ndarray


def _sample_side(
    S: ClosedSet,
    restriction: Restriction,
    c: FloatArray,
    delta: float,
    rng: np.random.Generator,
    count: int,
) -> _SideSample:
    points = _restriction_points(restriction, rng, count, c, 2.0 * delta)
    nearest, distances = S.project_batch(points)
    keep = distances > 0
    offsets = np.linalg.norm(nearest[keep] - c, axis=1)
    directions = (points[keep] - nearest[keep]) / distances[keep, None]
    return _SideSample(directions, offsets)


def _best_pair(u: FloatArray, v: FloatArray) -> tuple[float, int, int]:
    """max <u_i, v_j> over unit rows."""
    if u.shape[1] == 2:
        u_angles = np.mod(np.arctan2(u[:, 1], u[:, 0]), TWO_PI)
        v_angles = np.mod(np.arctan2(v[:, 1], v[:, 0]), TWO_PI)
        order = np.argsort(v_angles)
        sorted_v = v_angles[order]
        slots = np.searchsorted(sorted_v, u_angles)
        best = (-math.inf, 0, 0)
        for offset in (-1, 0):
            idx = (slots + offset) % len(sorted_v)
            diff = np.abs(u_angles - sorted_v[idx])
            diff = np.minimum(diff, TWO_PI - diff)
            i = int(np.argmin(diff))
            value = math.cos(float(diff[i]))
            if value > best[0]:
                best = (value, i, int(order[idx[i]]))
        return best
    best = (-math.inf, 0, 0)
    for start in range(0, len(u), _CHUNK):
        block = u[start : start + _CHUNK] @ v.T
        i, j = np.unravel_index(int(np.argmax(block)), block.shape)
        if block[i, j] > best[0]:
            best = (float(block[i, j]), start + int(i), int(j))
    return best


def _thin(rows: FloatArray, rng: np.random.Generator) -> FloatArray:
    if len(rows) <= _MAX_PAIRWISE:
        return rows
    return rows[rng.choice(len(rows), size=_MAX_PAIRWISE, replace=False)]


def _sampled_grid(
    A: ClosedSet,
    A_restriction: Restriction,
    B: ClosedSet,
    B_restriction: Restriction,
    c: FloatArray,
    deltas: list[float],
    samples: int,
    seed: Optional[int],
) -> list[tuple[float, Optional[FloatArray], Optional[FloatArray]]]:
    """Lower estimates of theta for each delta from one shared draw."""
    rng = make_rng(seed)
    logger.debug("Sampling CQ-number with %d samples, seed %s", samples, seed)
    widest = max(deltas)
    u_side = _sample_side(A, B_restriction, c, widest, rng, samples)
    v_side = _sample_side(B, A_restriction, c, widest, rng, samples)

    results = []
    for delta in deltas:
        if A.distance(c) > delta or B.distance(c) > delta:
            raise NoBasePointsError(f"no base points within {delta} of c")
        u = u_side.directions[u_side.base_offsets <= delta]
        v = -v_side.directions[v_side.base_offsets <= delta]
        if len(u) == 0 or len(v) == 0:
            results.append((0.0, None, None))
            continue
        if u.shape[1] == 2:
            u = np.unique(np.round(u, 14), axis=0)
            v = np.unique(np.round(v, 14), axis=0)
        else:
            u, v = _thin(u, rng), _thin(v, rng)
        value, i, j = _best_pair(u, v)
        if value <= 0.0:
            results.append((0.0, None, None))
        else:
            results.append((min(value, 1.0), u[i], v[j]))
    return results


def cq_number(
    A: ClosedSet,
    A_restriction: Restriction,
    B: ClosedSet,
    B_restriction: Restriction,
    c: ArrayLike,
    delta: float,
    method: ConeMethod = ConeMethod.EXACT_2D,
    samples: int = 20_000,
    seed: Optional[int] = None,
    delta_grid: Optional[list[float]] = None,
) -> CQReport:
    """sup <u, v> over unit-capped u in pn_A^{B~}(a), v in -pn_B^{A~}(b) with
    a, b within delta of c.

    The A-cones are restricted by B~ and the B-cones by A~. Exact2D returns
    max(0, cos) of the smallest angle between the two cone unions; Sampled
    returns a lower estimate together with its witness pair.
    """
    center = as_point(c)
    if not delta > 0:
        raise InvalidParameterError("delta must be positive")
    deltas = sorted(set([delta] + list(delta_grid or [])))
    if any(d <= 0 for d in deltas):
        raise InvalidParameterError("grid deltas must be positive")

    if method == ConeMethod.EXACT_2D:
        values = [
            _exact_theta(A, A_restriction, B, B_restriction, center, d) for d in deltas
        ]
    else:
        values = _sampled_grid(
            A, A_restriction, B, B_restriction, center, deltas, samples, seed
        )
    by_delta = dict(zip(deltas, values))
    theta, u, v = by_delta[delta]
    return CQReport(
        theta_delta=theta,
        delta=delta,
        method=method,
        witness_u=None if u is None else u.tolist(),
        witness_v=None if v is None else v.tolist(),
        grid=[GridPoint(delta=d, theta=t) for d, (t, _, _) in zip(deltas, values)]
        if delta_grid
        else [],
        samples=samples if method == ConeMethod.SAMPLED else None,
        seed=seed if method == ConeMethod.SAMPLED else None,
    )


def cq_condition(
    A: ClosedSet,
    A_restriction: Restriction,
    B: ClosedSet,
    B_restriction: Restriction,
    c: ArrayLike,
    delta_grid: list[float],
    method: ConeMethod = ConeMethod.EXACT_2D,
    margin: float = 1e-6,
    samples: int = 20_000,
    seed: Optional[int] = None,
) -> CQConditionReport:
    """CQ condition from a decreasing delta grid.

    The limiting value is read off at the smallest delta; the trend across the
    grid is reported without extrapolation.
    """
    if not delta_grid:
        raise InvalidParameterError("delta grid is empty")
    if any(later >= earlier for earlier, later in zip(delta_grid, delta_grid[1:])):
        raise InvalidParameterError("delta grid must be strictly decreasing")
    report = cq_number(
        A,
        A_restriction,
        B,
        B_restriction,
        c,
        delta_grid[-1],
        method=method,
        samples=samples,
        seed=seed,
        delta_grid=delta_grid,
    )
    # Grid in the order given: largest delta first.
    grid = sorted(report.grid, key=lambda p: -p.delta)
    thetas = [p.theta for p in grid]
    if max(thetas) - min(thetas) <= 1e-12:
        trend = "flat"
    elif all(later <= earlier + 1e-12 for earlier, later in zip(thetas, thetas[1:])):
        trend = "decreasing"
    else:
        trend = "mixed"
    theta_bar = thetas[-1]
    return CQConditionReport(
        holds=theta_bar < 1.0 - margin,
        theta_bar=theta_bar,
        margin=margin,
        trend=trend,
        grid=grid,
    )


def evaluate_cq(query: CQQuery) -> CQReport:
    return cq_number(
        build_set(query.set_a),
        build_restriction(query.restriction_a),
        build_set(query.set_b),
        build_restriction(query.restriction_b),
        query.center,
        query.delta,
        method=query.method,
        samples=query.samples,
        seed=query.seed,
        delta_grid=query.delta_grid,
    )


@dataclass(frozen=True)
class ProbeResult:
    """Lower bound on eps with the (y, b, u) triple attaining it."""

    epsilon_lower: float
    witness: Optional[tuple[FloatArray, FloatArray, FloatArray]] = None
    pairs: int = 0


def regularity_probe(
    B: ClosedSet,
    restriction: Restriction,
    c: ArrayLike,
    delta: float,
    samples: int = 2000,
    seed: Optional[int] = None,
) -> ProbeResult:
    """sup of <u, y - b> / (|u| |y - b|) over y, b in B near c and u in pn_B^R(b).

    Any eps for which B is (R, eps, delta)-regular at c is at least the result.
    """
    center = as_point(c)
    if not delta > 0:
        raise InvalidParameterError("delta must be positive")
    if not membership(B, center):
        raise InvalidParameterError("c must lie in the probed set")
    rng = make_rng(seed)
    logger.debug("Regularity probe with %d samples, seed %s", samples, seed)

    sources = _restriction_points(restriction, rng, samples, center, 2.0 * delta)
    bases, distances = B.project_batch(sources)
    keep = (distances > 0) & (np.linalg.norm(bases - center, axis=1) <= delta)
    bases = bases[keep]
    normals = (sources[keep] - bases) / distances[keep, None]

    ys = B.sample(rng, samples, center, delta)
    extra = B.candidate_points(center, delta)
    if extra:
        ys = np.vstack([ys, np.array(extra)])
    ys = ys[np.linalg.norm(ys - center, axis=1) <= delta]
    if len(bases) == 0 or len(ys) == 0:
        return ProbeResult(0.0)
    if len(bases) > _MAX_PAIRWISE:
        pick = rng.choice(len(bases), size=_MAX_PAIRWISE, replace=False)
        bases, normals = bases[pick], normals[pick]

    best, witness = 0.0, None
    for start in range(0, len(bases), _CHUNK):
        b = bases[start : start + _CHUNK]
        u = normals[start : start + _CHUNK]
        steps = ys[None, :, :] - b[:, None, :]
        lengths = np.linalg.norm(steps, axis=2)
        inner = np.einsum("ijk,ik->ij", steps, u)
        safe = np.where(lengths > 0, lengths, 1.0)
        ratio = np.where(lengths > 0, inner / safe, -np.inf)
        i, j = np.unravel_index(int(np.argmax(ratio)), ratio.shape)
        if ratio[i, j] > best:
            best = float(ratio[i, j])
            witness = (ys[j].copy(), b[i].copy(), u[i].copy())
    return ProbeResult(min(best, 1.0), witness, pairs=len(bases) * len(ys))


def evaluate_probe(query: ProbeQuery) -> ProbeResult:
    return regularity_probe(
        build_set(query.set),
        build_restriction(query.restriction),
        query.center,
        query.delta,
        samples=query.samples,
        seed=query.seed,
    )


@dataclass(frozen=True)
class ThetaEstimate:
    theta: float
    witness: FloatArray
    used: int


def theta_estimate(
    A: ClosedSet,
    B: ClosedSet,
    center: ArrayLike,
    radius: float,
    samples: int = 20_000,
    seed: Optional[int] = None,
) -> ThetaEstimate:
    """Largest observed <a - x, x - b> / (|a - x| |x - b|) over x near center.

    The raw maximum is reported, so it can be negative.
    """
    if not radius > 0:
        raise InvalidParameterError("radius must be positive")
    rng = make_rng(seed)
    logger.debug("Theta estimate with %d samples, seed %s", samples, seed)
    xs = uniform_ball(rng, samples, as_point(center), radius)
    a, d_a = A.project_batch(xs)
    b, d_b = B.project_batch(xs)
    usable = (d_a > 0) & (d_b > 0)
    if not np.any(usable):
        raise NoDataError("every sample lies in A or B")
    to_a = a[usable] - xs[usable]
    from_b = xs[usable] - b[usable]
    ratios = np.einsum("ij,ij->i", to_a, from_b) / (d_a[usable] * d_b[usable])
    best = int(np.argmax(ratios))
    return ThetaEstimate(
        theta=float(np.clip(ratios[best], -1.0, 1.0)),
        witness=xs[usable][best].copy(),
        used=int(usable.sum()),
    )
