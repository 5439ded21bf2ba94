"""Sawtooth hypograph in the plane and its reflected twin.

The boundary is the graph of f with f = 0 for x <= 0 and x > 1, and on each
tooth ]2^-(k+1), 2^-k] a falling edge of slope -tan(w) followed by a rising
edge of slope tan(w) back to the peak s_k = (2^-k, 0). Teeth accumulate at the
origin; teeth beyond k_max are flattened.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from marp.errors import InvalidParameterError
from marp.models.schemas import SawtoothSpec
from marp.services.angular import Cone2D
from marp.services.geometry import (
    ClosedSet,
    ProjectionResult,
    Transformed,
    reflection,
)
from shared_lib.numerics import (
    TIE_RTOL,
    FloatArray,
    dedupe_points,
    norm,
    relative_tol,
)

logger = logging.getLogger(__name__)

# cos(4w) = 3/4
SAWTOOTH_W = math.acos(0.75) / 4.0


def _segment_feet(
    q: FloatArray, starts: FloatArray, ends: FloatArray
) -> tuple[FloatArray, FloatArray]:
    """Closest point on each segment [start, end] to q, with distances."""
    edges = ends - starts
    lengths_sq = np.einsum("ij,ij->i", edges, edges)
    t = np.einsum("ij,ij->i", q - starts, edges) / lengths_sq
    feet = starts + np.clip(t, 0.0, 1.0)[:, None] * edges
    return feet, np.linalg.norm(feet - q, axis=1)


class Sawtooth2D(ClosedSet):
    """Closed hypograph {(x, y) : y <= f(x)}."""

    def __init__(self, w: float = SAWTOOTH_W, k_max: int = 60):
        if not 0.0 < w <= math.pi / 8:
            raise InvalidParameterError("sawtooth angle w must lie in (0, pi/8]")
        if k_max < 2:
            raise InvalidParameterError("k_max must be at least 2")
        self.w = float(w)
        self.k_max = int(k_max)
        self.tan_w = math.tan(self.w)
        self.dimension = 2
        self.flat_until = 2.0 ** -(self.k_max + 1)

        # Vertices from the origin to s_0, left to right.
        vertices = [(0.0, 0.0), (self.flat_until, 0.0)]
        kinds = ["flat", "peak"]
        for k in range(self.k_max, -1, -1):
            vertices.append(self.valley(k))
            kinds.append("valley")
            vertices.append((2.0**-k, 0.0))
            kinds.append("peak")
        self.vertices = np.array(vertices)
        self.vertex_kinds = tuple(kinds)
        self.starts = self.vertices[:-1]
        self.ends = self.vertices[1:]
        edges = self.ends - self.starts
        # Outward normal of a left-to-right edge with the set below it.
        self.edge_normals = np.arctan2(edges[:, 0], -edges[:, 1])

    @classmethod
    def from_spec(cls, spec: SawtoothSpec) -> "Sawtooth2D":
        return cls(SAWTOOTH_W if spec.w is None else spec.w, spec.k_max)

    def to_spec(self) -> SawtoothSpec:
        w = None if self.w == SAWTOOTH_W else self.w
        return SawtoothSpec(w=w, k_max=self.k_max)

    def valley(self, k: int) -> tuple[float, float]:
        """Lowest point of tooth k, between s_{k+1} and s_k."""
        quarter = 2.0 ** -(k + 2)
        return (3.0 * quarter, -self.tan_w * quarter)

    def height(self, x: FloatArray) -> FloatArray:
        """Vectorized f."""
        xs = np.asarray(x, dtype=np.float64)
        out = np.zeros_like(xs)
        teeth = (xs > self.flat_until) & (xs <= 1.0)
        if np.any(teeth):
            mantissa, exponent = np.frexp(xs[teeth])
            k = -exponent + (mantissa == 0.5)
            peak = np.ldexp(1.0, -k)
            half = 0.5 * peak
            falling = xs[teeth] <= 1.5 * half
            out[teeth] = np.where(
                falling,
                -self.tan_w * (xs[teeth] - half),
                self.tan_w * (xs[teeth] - peak),
            )
        return out

    def _nearest(self, q: FloatArray) -> ProjectionResult:
        surface = float(self.height(np.array([q[0]]))[0])
        if q[1] <= surface:
            return ProjectionResult((q.copy(),), 0.0)

        # The vertical drop to the graph bounds the distance.
        reach = q[1] - surface
        window = (self.ends[:, 0] >= q[0] - reach) & (self.starts[:, 0] <= q[0] + reach)
        feet, distances = _segment_feet(q, self.starts[window], self.ends[window])
        tails = np.array([[min(q[0], 0.0), 0.0], [max(q[0], 1.0), 0.0]])
        candidates = np.vstack([feet, tails])
        distances = np.concatenate([distances, np.linalg.norm(tails - q, axis=1)])

        best = float(distances.min())
        tol = relative_tol(TIE_RTOL, q)
        chosen = [candidates[i] for i in np.flatnonzero(distances <= best + tol)]
        return ProjectionResult(tuple(dedupe_points(chosen, tol)), best)

    def _nearest_batch(self, rows: FloatArray) -> tuple[FloatArray, FloatArray]:
        nearest = rows.copy()
        distances = np.zeros(len(rows))
        outside = rows[:, 1] > self.height(rows[:, 0])
        if not np.any(outside):
            return nearest, distances
        q = rows[outside]
        edges = self.ends - self.starts
        lengths_sq = np.einsum("ij,ij->i", edges, edges)
        rel = q[:, None, :] - self.starts[None, :, :]
        t = np.clip(np.einsum("mij,ij->mi", rel, edges) / lengths_sq, 0.0, 1.0)
        feet = self.starts[None, :, :] + t[:, :, None] * edges[None, :, :]
        tails = np.stack(
            [
                np.column_stack([np.minimum(q[:, 0], 0.0), np.zeros(len(q))]),
                np.column_stack([np.maximum(q[:, 0], 1.0), np.zeros(len(q))]),
            ],
            axis=1,
        )
        candidates = np.concatenate([feet, tails], axis=1)
        gaps = np.linalg.norm(candidates - q[:, None, :], axis=2)
        idx = gaps.argmin(axis=1)
        nearest[outside] = candidates[np.arange(len(q)), idx]
        distances[outside] = gaps[np.arange(len(q)), idx]
        return nearest, distances

    def _sample_x(
        self, rng: np.random.Generator, count: int, center: FloatArray, radius: float
    ) -> FloatArray:
        lo, hi = center[0] - radius, center[0] + radius
        xs = rng.uniform(lo, hi, size=count)
        # Half the draws are log-uniform so small teeth near the origin are hit.
        finest = 2.0**-self.k_max
        upper = min(hi, 1.0)
        lower = max(lo, finest)
        if upper > lower:
            half = count // 2
            xs[:half] = np.exp(rng.uniform(math.log(lower), math.log(upper), size=half))
        return xs

    def sample(
        self, rng: np.random.Generator, count: int, center: FloatArray, radius: float
    ) -> FloatArray:
        xs = self._sample_x(rng, count, center, radius)
        depth = radius * rng.random(count)
        return np.column_stack([xs, self.height(xs) - depth])

    def sample_boundary(
        self, rng: np.random.Generator, count: int, center: FloatArray, radius: float
    ) -> FloatArray:
        xs = self._sample_x(rng, count, center, radius)
        return np.column_stack([xs, self.height(xs)])

    def candidate_points(self, center: FloatArray, radius: float) -> list[FloatArray]:
        close = np.linalg.norm(self.vertices - center, axis=1) <= radius
        return [v.copy() for v in self.vertices[close]]

    def _vertex_cone(self, index: int) -> Cone2D:
        incoming = self.edge_normals[index - 1] if index > 0 else math.pi / 2
        outgoing = (
            self.edge_normals[index] if index < len(self.starts) else math.pi / 2
        )
        if self.vertex_kinds[index] == "valley":
            return Cone2D.zero()
        if math.isclose(incoming, outgoing, abs_tol=1e-15):
            return Cone2D.ray(incoming)
        return Cone2D.between(outgoing, incoming)

    def normal_cone_union(self, center: FloatArray, radius: float) -> Optional[Cone2D]:
        if self._nearest(center).distance > radius:
            return None
        cone = Cone2D.zero()
        _, distances = _segment_feet(center, self.starts, self.ends)
        for normal in self.edge_normals[distances <= radius]:
            cone = cone.union(Cone2D.ray(float(normal)))
        left_tail = norm(center - np.array([min(center[0], 0.0), 0.0]))
        right_tail = norm(center - np.array([max(center[0], 1.0), 0.0]))
        if min(left_tail, right_tail) <= radius:
            cone = cone.union(Cone2D.ray(math.pi / 2))
        close = np.linalg.norm(self.vertices - center, axis=1) <= radius
        for index in np.flatnonzero(close):
            cone = cone.union(self._vertex_cone(int(index)))
        return cone

    def reflector(self) -> FloatArray:
        """Reflection about the line through the origin at angle 2w."""
        return reflection(2.0 * self.w)


def sawtooth_pair(
    k_max: int = 60, w: float = SAWTOOTH_W
) -> tuple[Sawtooth2D, Transformed]:
    """The sawtooth A and its mirror image B."""
    a = Sawtooth2D(w, k_max)
    return a, Transformed(a, a.reflector())


@dataclass(frozen=True)
class SawtoothLandmarks:
    k: int
    s_k: FloatArray
    s_next: FloatArray
    valley: FloatArray
    z_k: FloatArray
    h: FloatArray
    h_prime: FloatArray
    beta1: float
    beta2: float
    cos_angle: float


def sawtooth_landmarks(shape: Sawtooth2D, k: int) -> SawtoothLandmarks:
    """Peak s_k, its mirror image z_k, and the two nearest points of z_k.

    h and h' are the midpoints of the rising edge [s, s_k] and the falling
    edge [s, s_{k+1}] around the valley s.
    """
    if not 1 <= k <= shape.k_max - 1:
        raise InvalidParameterError(f"k={k} outside 1..{shape.k_max - 1}")
    s_k = np.array([2.0**-k, 0.0])
    s_next = np.array([2.0 ** -(k + 1), 0.0])
    valley = np.array(shape.valley(k))
    z_k = shape.reflector() @ s_k
    to_next = s_next - z_k
    to_peak = s_k - z_k
    beta1 = norm(to_next)
    beta2 = norm(to_peak)
    return SawtoothLandmarks(
        k=k,
        s_k=s_k,
        s_next=s_next,
        valley=valley,
        z_k=z_k,
        h=0.5 * (valley + s_k),
        h_prime=0.5 * (valley + s_next),
        beta1=beta1,
        beta2=beta2,
        cos_angle=float(to_next @ to_peak) / (beta1 * beta2),
    )
