"""Angular-interval cones in the plane."""

import math
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from shared_lib.numerics import FloatArray

TWO_PI = 2.0 * math.pi
_ANGLE_EPS = 1e-15


def wrap(angle: float) -> float:
    """Map an angle into [0, 2pi)."""
    wrapped = math.fmod(angle, TWO_PI)
    if wrapped < 0:
        wrapped += TWO_PI
    return 0.0 if wrapped >= TWO_PI else wrapped


def circular_distance(a: float, b: float) -> float:
    diff = abs(wrap(a) - wrap(b))
    return min(diff, TWO_PI - diff)


def direction_angle(vector: FloatArray) -> float:
    return wrap(math.atan2(float(vector[1]), float(vector[0])))


def unit(angle: float) -> FloatArray:
    return np.array([math.cos(angle), math.sin(angle)])


@dataclass(frozen=True)
class Arc:
    """Counterclockwise arc from start covering length radians."""

    start: float
    length: float

    @property
    def end(self) -> float:
        return self.start + self.length

    def contains(self, angle: float) -> bool:
        return wrap(angle - self.start) <= self.length + _ANGLE_EPS

    def closest(self, angle: float) -> tuple[float, float]:
        """Return (distance, closest angle of the arc) for a direction."""
        if self.contains(angle):
            return 0.0, wrap(angle)
        to_start = circular_distance(angle, self.start)
        to_end = circular_distance(angle, self.end)
        if to_start <= to_end:
            return to_start, wrap(self.start)
        return to_end, wrap(self.end)


def _merge(arcs: Iterable[Arc]) -> tuple[Arc, ...]:
    items = sorted((wrap(a.start), a.length) for a in arcs)
    if not items:
        return ()
    if any(length >= TWO_PI - _ANGLE_EPS for _, length in items):
        return (Arc(0.0, TWO_PI),)

    merged: list[list[float]] = []
    for start, length in items:
        if merged and start <= merged[-1][0] + merged[-1][1] + _ANGLE_EPS:
            prev_start, prev_length = merged[-1]
            merged[-1][1] = max(prev_length, start + length - prev_start)
        else:
            merged.append([start, length])

    # Arcs running past 2pi may swallow arcs at the start of the circle.
    while len(merged) > 1:
        last_start, last_length = merged[-1]
        first_start, first_length = merged[0]
        if last_start + last_length + _ANGLE_EPS < first_start + TWO_PI:
            break
        wrapped = first_start + TWO_PI + first_length - last_start
        merged[-1][1] = max(last_length, wrapped)
        merged.pop(0)

    if any(length >= TWO_PI - _ANGLE_EPS for _, length in merged):
        return (Arc(0.0, TWO_PI),)
    return tuple(Arc(start, length) for start, length in merged)


@dataclass(frozen=True)
class Cone2D:
    """A closed cone in the plane as a union of angular intervals.

    No arcs means the zero cone {0}. The zero vector is a member of every cone.
    """

    arcs: tuple[Arc, ...] = ()

    @classmethod
    def zero(cls) -> "Cone2D":
        return cls(())

    @classmethod
    def full(cls) -> "Cone2D":
        return cls((Arc(0.0, TWO_PI),))

    @classmethod
    def ray(cls, angle: float) -> "Cone2D":
        return cls((Arc(wrap(angle), 0.0),))

    @classmethod
    def between(cls, start: float, end: float) -> "Cone2D":
        """Counterclockwise sweep from start to end."""
        return cls(_merge([Arc(start, wrap(end - start))]))

    @classmethod
    def from_directions(cls, vectors: Iterable[FloatArray]) -> "Cone2D":
        arcs = [
            Arc(direction_angle(v), 0.0)
            for v in vectors
            if float(np.hypot(v[0], v[1])) > 0.0
        ]
        return cls(_merge(arcs))

    @property
    def is_zero(self) -> bool:
        return not self.arcs

    @property
    def is_full(self) -> bool:
        return len(self.arcs) == 1 and self.arcs[0].length >= TWO_PI - _ANGLE_EPS

    def contains(self, angle: float) -> bool:
        return any(arc.contains(angle) for arc in self.arcs)

    def union(self, other: "Cone2D") -> "Cone2D":
        return Cone2D(_merge(self.arcs + other.arcs))

    def negated(self) -> "Cone2D":
        return Cone2D(_merge(Arc(a.start + math.pi, a.length) for a in self.arcs))

    def transformed(self, matrix: FloatArray) -> "Cone2D":
        """Image under an orthogonal 2x2 matrix."""
        if np.linalg.det(matrix) > 0:
            shift = math.atan2(float(matrix[1, 0]), float(matrix[0, 0]))
            return Cone2D(_merge(Arc(a.start + shift, a.length) for a in self.arcs))
        # Reflection about the line at angle alpha maps t to 2*alpha - t.
        double_alpha = math.atan2(float(matrix[1, 0]), float(matrix[0, 0]))
        return Cone2D(
            _merge(Arc(double_alpha - a.end, a.length) for a in self.arcs)
        )

    def min_gap(self, other: "Cone2D") -> Optional[tuple[float, float, float]]:
        """Smallest angle between nonzero members of the two cones.

        Returns (gap, angle in self, angle in other), or None if either cone
        is the zero cone.
        """
        if self.is_zero or other.is_zero:
            return None
        best: Optional[tuple[float, float, float]] = None
        for mine in self.arcs:
            for theirs in other.arcs:
                for angle in (mine.start, mine.end):
                    dist, hit = theirs.closest(angle)
                    if best is None or dist < best[0]:
                        best = (dist, wrap(angle), hit)
                for angle in (theirs.start, theirs.end):
                    dist, hit = mine.closest(angle)
                    if best is None or dist < best[0]:
                        best = (dist, hit, wrap(angle))
        return best
