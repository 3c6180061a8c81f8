"""Shared fixtures: small hand-built scenes and synthetic time matrices."""
from __future__ import annotations

import numpy as np
import pytest

from probepath.geometry import MeasurementPoint, Point3, UnitVec3
from probepath.scene import NodeCloud
from probepath.timing import TimeMatrix


def _grid(lo: float, hi: float, spacing: float) -> np.ndarray:
    n = int(round((hi - lo) / spacing))
    return lo + spacing * np.arange(n + 1, dtype=float)


@pytest.fixture
def make_mp():
    def factory(mp_id, position, normal):
        return MeasurementPoint(mp_id, Point3.of(position), UnitVec3.normalized(normal))
    return factory


@pytest.fixture
def plate_nodes():
    """Nodes on the plane x = `x`, y in [y0, y1], z in [z0, z1], square grid `spacing`."""
    def factory(x, y_range, z_range, spacing=4.0):
        ys, zs = _grid(*y_range, spacing), _grid(*z_range, spacing)
        yy, zz = np.meshgrid(ys, zs, indexing="ij")
        return np.column_stack([np.full(yy.size, float(x)), yy.ravel(), zz.ravel()])
    return factory


@pytest.fixture
def floor_nodes():
    """Nodes on the plane z = `z`, x in [x0, x1], y in [y0, y1]."""
    def factory(z, x_range, y_range, spacing=4.0):
        xs, ys = _grid(*x_range, spacing), _grid(*y_range, spacing)
        xx, yy = np.meshgrid(xs, ys, indexing="ij")
        return np.column_stack([xx.ravel(), yy.ravel(), np.full(xx.size, float(z))])
    return factory


@pytest.fixture
def far_cloud():
    """A cloud whose single node is far away from everything the tests plan."""
    return NodeCloud([[1000.0, 1000.0, 1000.0]])


@pytest.fixture
def matrix_from_values():
    def factory(values, a_inf=1e6):
        values = np.array(values, dtype=float)
        return TimeMatrix(values, [str(k) for k in range(1, len(values))], a_inf)
    return factory


@pytest.fixture
def euclidean_matrix():
    """Depot + m random points in a 100 mm cube, times = distance / 85."""
    def factory(m, seed):
        pts = np.random.default_rng(seed).uniform(0.0, 100.0, size=(m + 1, 3))
        values = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=2) / 85.0
        return TimeMatrix(values, [str(k) for k in range(1, m + 1)], 1e6)
    return factory
