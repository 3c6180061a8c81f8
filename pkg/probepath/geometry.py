"""
probepath.geometry

Point/vector primitives and the small geometric kernels the planner is built on.

All functions are pure and accept anything numpy can turn into a length-3 array,
so Point3/UnitVec3 tuples and raw arrays can be mixed freely.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import List, NamedTuple, Union

import numpy as np

from .errors import SceneError

UNIT_TOL = 1e-9
ZERO_TOL = 1e-9
# normals count as opposite when the angle between them exceeds 179.9 degrees
OPPOSITE_ANGLE_DEG = 179.9
OPPOSITE_TOL = 2.0 * math.sin(math.radians((180.0 - OPPOSITE_ANGLE_DEG) / 2.0))


class Point3(NamedTuple):
    """A position in mm."""

    x: float
    y: float
    z: float

    @classmethod
    def of(cls, values) -> "Point3":
        x, y, z = (float(v) for v in values)
        if not all(math.isfinite(v) for v in (x, y, z)):
            raise SceneError(f"non-finite coordinate in {values!r}")
        return cls(x, y, z)


class UnitVec3(NamedTuple):
    """A unit direction (i, j, k)."""

    i: float
    j: float
    k: float

    @classmethod
    def normalized(cls, values) -> "UnitVec3":
        """Normalize `values`; raises ValueError on a zero or non-finite vector."""
        v = np.asarray(values, dtype=float)
        norm = float(np.linalg.norm(v))
        if not math.isfinite(norm) or norm < ZERO_TOL:
            raise ValueError(f"cannot normalize {values!r}")
        v = v / norm
        return cls(float(v[0]), float(v[1]), float(v[2]))

    def __neg__(self) -> "UnitVec3":
        return UnitVec3(-self.i, -self.j, -self.k)


class Opposite(enum.Enum):
    """Marker returned by normal_sum_direction for anti-parallel normals."""

    FLAG = "opposite"


OPPOSITE = Opposite.FLAG


@dataclass(frozen=True)
class MeasurementPoint:
    """A feature to inspect: id, surface position and outward unit normal."""

    id: str
    position: Point3
    normal: UnitVec3

    def __post_init__(self):
        norm = math.sqrt(sum(c * c for c in self.normal))
        if abs(norm - 1.0) > UNIT_TOL:
            raise SceneError(f"MP {self.id}: normal {tuple(self.normal)} is not unit length")


def as_array(p) -> np.ndarray:
    return np.asarray(p, dtype=float)


def approach_point(mp: MeasurementPoint, d: float) -> Point3:
    """AP of `mp`: its position moved `d` mm along the normal."""
    if not d > 0:
        raise ValueError(f"safety distance must be > 0, got {d}")
    q = as_array(mp.position) + d * as_array(mp.normal)
    return Point3(float(q[0]), float(q[1]), float(q[2]))


def segment_distances(points: np.ndarray, a, b) -> np.ndarray:
    """Distances from each row of `points` (n, 3) to the closed segment [a, b].

    A degenerate segment (a == b) yields plain point distances.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    a = as_array(a)
    ab = as_array(b) - a
    ap = pts - a
    ab2 = float(ab @ ab)
    if ab2 == 0.0:
        return np.linalg.norm(ap, axis=1)
    t = np.clip(ap @ ab / ab2, 0.0, 1.0)
    closest = a + t[:, None] * ab
    return np.linalg.norm(pts - closest, axis=1)


def point_segment_distance(p, a, b) -> float:
    """Euclidean distance from `p` to the closest point of segment [a, b]."""
    return float(segment_distances(as_array(p)[None, :], a, b)[0])


def sum_direction(n_i, n_j) -> Union[UnitVec3, Opposite]:
    s = as_array(n_i) + as_array(n_j)
    if float(np.linalg.norm(s)) < OPPOSITE_TOL:
        return OPPOSITE
    return UnitVec3.normalized(s)


def normal_sum_direction(mp_i: MeasurementPoint, mp_j: MeasurementPoint) -> Union[UnitVec3, Opposite]:
    """Normalized sum of both normals, or OPPOSITE when they (nearly) cancel."""
    return sum_direction(mp_i.normal, mp_j.normal)


def perpendicular_directions(n) -> List[UnitVec3]:
    """Up to six unit directions perpendicular to `n`.

    The candidates are (-J,I,0), (-K,0,I), (0,-K,J), (J,-I,0), (K,0,-I), (0,K,-J)
    in that order; zero vectors (axis-aligned normals) are dropped.
    """
    i, j, k = (float(c) for c in n)
    candidates = [
        (-j, i, 0.0),
        (-k, 0.0, i),
        (0.0, -k, j),
        (j, -i, 0.0),
        (k, 0.0, -i),
        (0.0, k, -j),
    ]
    out = []
    for c in candidates:
        if math.sqrt(c[0] ** 2 + c[1] ** 2 + c[2] ** 2) < ZERO_TOL:
            continue
        out.append(UnitVec3.normalized(c))
    return out


def angle_between(u, v) -> float:
    """Angle in degrees, in [0, 180], between two unit vectors."""
    dot = float(np.clip(as_array(u) @ as_array(v), -1.0, 1.0))
    return math.degrees(math.acos(dot))


def polyline_length(points) -> float:
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    if len(pts) < 2:
        return 0.0
    return float(np.linalg.norm(np.diff(pts, axis=0), axis=1).sum())


__all__ = [
    "Point3",
    "UnitVec3",
    "MeasurementPoint",
    "Opposite",
    "OPPOSITE",
    "OPPOSITE_TOL",
    "approach_point",
    "segment_distances",
    "point_segment_distance",
    "sum_direction",
    "normal_sum_direction",
    "perpendicular_directions",
    "angle_between",
    "polyline_length",
]
