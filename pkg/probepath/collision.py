"""
probepath.collision

Dynamic-searching-volume collision detection for straight probe moves.

A move a -> b is tested only against the nodes inside its searching volume, the
axis-aligned box spanned by a and b inflated by eps on every side. The move collides
when the closest of those nodes lies within the clearance d0 of the segment.
With eps >= d0 the filter is exact: any node within d0 of the segment lies inside the box.

The detector sees only sampled nodes; a surface between nodes can be missed by up to
l/sqrt(2), so keep the element size l <= d0.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from .geometry import Point3, as_array, segment_distances
from .scene import NodeCloud


@dataclass(frozen=True)
class CollisionResult:
    collides: bool
    min_distance: float
    nearest_node: Optional[Point3]
    nodes_checked: int


def _volume_indices(cloud: NodeCloud, a, b, eps: float) -> np.ndarray:
    if eps < 0:
        raise ValueError(f"search margin must be >= 0, got {eps}")
    a, b = as_array(a), as_array(b)
    return cloud.box_indices(np.minimum(a, b) - eps, np.maximum(a, b) + eps)


def searching_volume(cloud: NodeCloud, a, b, eps: float) -> np.ndarray:
    """Nodes (k, 3) with min(a,b) - eps <= node <= max(a,b) + eps on every axis."""
    return cloud.nodes[_volume_indices(cloud, a, b, eps)]


def segment_collides(cloud: NodeCloud, a, b, eps: float, d0: float) -> CollisionResult:
    """Test the straight move a -> b against the nodes of its searching volume."""
    if not d0 > 0:
        raise ValueError(f"clearance must be > 0, got {d0}")
    if eps < d0:
        raise ValueError(f"search margin {eps} is smaller than clearance {d0}")
    nodes = searching_volume(cloud, a, b, eps)
    if len(nodes) == 0:
        return CollisionResult(False, math.inf, None, 0)
    dist = segment_distances(nodes, a, b)
    k = int(np.argmin(dist))
    d_min = float(dist[k])
    return CollisionResult(d_min <= d0, d_min, Point3.of(nodes[k]), len(nodes))


def polyline_collides(cloud: NodeCloud, waypoints: Sequence, eps: float, d0: float) -> List[CollisionResult]:
    """One CollisionResult per segment (waypoints[i], waypoints[i + 1])."""
    if len(waypoints) < 2:
        raise ValueError("a polyline needs at least 2 waypoints")
    return [segment_collides(cloud, waypoints[i], waypoints[i + 1], eps, d0) for i in range(len(waypoints) - 1)]


def polyline_clear(cloud: NodeCloud, waypoints: Sequence, eps: float, d0: float) -> bool:
    """True when no segment of the polyline collides; stops at the first collision."""
    for i in range(len(waypoints) - 1):
        if segment_collides(cloud, waypoints[i], waypoints[i + 1], eps, d0).collides:
            return False
    return True


__all__ = [
    "CollisionResult",
    "searching_volume",
    "segment_collides",
    "polyline_collides",
    "polyline_clear",
]
