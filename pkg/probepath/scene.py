"""
probepath.scene

Node clouds and measurement points: file ingestion plus a synthetic scene generator
that stands in for meshed CAD data.

Features:
  - NodeCloud: immutable (n, 3) node array with a uniform-grid index
    (cell size = max(element size, clearance)) answering axis-aligned box queries
  - load_nodes / load_mps: CSV or JSON ingestion with line-numbered errors
  - SceneSpec: flat panels, walls with rectangular holes, cylindrical patches and
    hollow boxes, each sampled on a square grid of spacing l
  - generate_scene: deterministic (spec, seed) -> (NodeCloud, MPs)

File formats:
  - nodes CSV: one `x,y,z` per line, mm, no header
  - MPs CSV:   one `id,x,y,z,I,J,K` per line, no header
  - JSON uses the same field names (see docs/file_formats.md)
"""
from __future__ import annotations

import csv
import itertools
import json
import logging
import math
import os
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .errors import SceneError
from .geometry import MeasurementPoint, Point3, UnitVec3

logger = logging.getLogger(__name__)

# accepted deviation of an imported normal from unit length before re-normalizing
NORMAL_TOL = 1e-3


class NodeCloud:
    """Discretized surface nodes with a uniform-grid spatial index."""

    def __init__(self, nodes, element_size: float = 4.0, clearance: Optional[float] = None):
        pts = np.array(nodes, dtype=float).reshape(-1, 3)
        if not np.all(np.isfinite(pts)):
            raise SceneError("node cloud contains non-finite coordinates")
        if element_size <= 0:
            raise SceneError(f"element size must be > 0, got {element_size}")
        if clearance and element_size > clearance:
            logger.warning("element size %.3g mm exceeds clearance %.3g mm: gaps between nodes may hide surface",
                           element_size, clearance)
        pts.setflags(write=False)
        self.nodes = pts
        self.element_size = float(element_size)
        self.cell_size = max(self.element_size, float(clearance) if clearance else 0.0)
        self._build_index()

    def _build_index(self) -> None:
        if len(self.nodes) == 0:
            self._origin = np.zeros(3)
            self._cell_keys = np.empty((0, 3), dtype=np.int64)
            self._cell_start = np.empty(0, dtype=np.int64)
            self._cell_count = np.empty(0, dtype=np.int64)
            self._order = np.empty(0, dtype=np.int64)
            self._cells = {}
            self._key_lo = self._key_hi = np.zeros(3, dtype=np.int64)
            return
        self._origin = self.nodes.min(axis=0)
        keys = self._cell_of(self.nodes)
        order = np.lexsort((keys[:, 2], keys[:, 1], keys[:, 0]))
        uniq, start, count = np.unique(keys[order], axis=0, return_index=True, return_counts=True)
        self._order = order
        self._cell_keys = uniq
        self._cell_start = start
        self._cell_count = count
        # cell key -> (start, count) into _order
        self._cells = {tuple(k): (s, c) for k, s, c in zip(uniq.tolist(), start.tolist(), count.tolist())}
        self._key_lo, self._key_hi = uniq.min(axis=0), uniq.max(axis=0)
        logger.debug("indexed %d nodes into %d cells of %.3f mm", len(self.nodes), len(uniq), self.cell_size)

    def _cell_of(self, pts: np.ndarray) -> np.ndarray:
        return np.floor((pts - self._origin) / self.cell_size).astype(np.int64)

    def __len__(self) -> int:
        return len(self.nodes)

    def box_indices(self, lo, hi) -> np.ndarray:
        """Sorted indices of nodes with lo <= node <= hi on every axis."""
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        if len(self.nodes) == 0 or np.any(lo > hi):
            return np.empty(0, dtype=np.int64)
        lo_k = np.maximum(self._cell_of(lo[None, :])[0], self._key_lo)
        hi_k = np.minimum(self._cell_of(hi[None, :])[0], self._key_hi)
        if np.any(lo_k > hi_k):
            return np.empty(0, dtype=np.int64)
        if int(np.prod(hi_k - lo_k + 1)) <= len(self._cells):
            ranges = [range(a, b + 1) for a, b in zip(lo_k.tolist(), hi_k.tolist())]
            spans = [self._cells[key] for key in itertools.product(*ranges) if key in self._cells]
        else:
            # box covers more cells than are occupied
            mask = np.all((self._cell_keys >= lo_k) & (self._cell_keys <= hi_k), axis=1)
            spans = list(zip(self._cell_start[mask].tolist(), self._cell_count[mask].tolist()))
        if not spans:
            return np.empty(0, dtype=np.int64)
        chunks = [self._order[s:s + c] for s, c in spans]
        idx = np.concatenate(chunks)
        pts = self.nodes[idx]
        inside = np.all((pts >= lo) & (pts <= hi), axis=1)
        return np.sort(idx[inside])

    def box_query(self, lo, hi) -> np.ndarray:
        return self.nodes[self.box_indices(lo, hi)]


# ---------------------------------------------------------------------------
# ingestion
# ---------------------------------------------------------------------------

def _detect_format(path: str, fmt: Optional[str]) -> str:
    if fmt:
        fmt = fmt.lower()
    else:
        fmt = os.path.splitext(path)[1].lstrip(".").lower()
    if fmt not in ("csv", "json"):
        raise SceneError(f"{path}: unsupported format {fmt!r} (expected csv or json)")
    return fmt


def _floats(values: Sequence, where: str, expected: int) -> List[float]:
    """Parse `expected` finite floats; `where` is the "path:line" used in messages."""
    if len(values) != expected:
        raise SceneError(f"{where}: expected {expected} values, got {len(values)}")
    try:
        out = [float(v) for v in values]
    except (TypeError, ValueError):
        raise SceneError(f"{where}: not a number in {','.join(str(v) for v in values)!r}") from None
    if not all(math.isfinite(v) for v in out):
        raise SceneError(f"{where}: non-finite value")
    return out


def _csv_rows(path: str) -> Iterable[Tuple[int, List[str]]]:
    try:
        with open(path, newline="", encoding="utf-8") as f:
            reader = csv.reader(f)
            for row in reader:
                if not row or all(not cell.strip() for cell in row):
                    continue
                yield reader.line_num, [cell.strip() for cell in row]
    except OSError as e:
        raise SceneError(f"cannot read {path}: {e}") from e


def _load_json(path: str):
    try:
        with open(path, encoding="utf-8") as f:
            text = f.read()
    except OSError as e:
        raise SceneError(f"cannot read {path}: {e}") from e
    if not text.strip():
        return None
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise SceneError(f"{path}:{e.lineno}: invalid JSON ({e.msg})") from e


def load_nodes(path: str, fmt: Optional[str] = None, element_size: float = 4.0,
               clearance: Optional[float] = None) -> NodeCloud:
    """Read a node cloud from CSV (`x,y,z` lines) or JSON.

    JSON is either a list of nodes or {"element_size": l, "nodes": [...]}, each node being
    {"x": .., "y": .., "z": ..} or [x, y, z].
    """
    fmt = _detect_format(path, fmt)
    rows: List[List[float]] = []
    if fmt == "csv":
        for line, values in _csv_rows(path):
            rows.append(_floats(values, f"{path}:{line}", 3))
    else:
        doc = _load_json(path)
        records = doc
        if isinstance(doc, dict):
            element_size = float(doc.get("element_size", element_size))
            records = doc.get("nodes", [])
        if doc is not None and not isinstance(records, list):
            raise SceneError(f"{path}: expected a list of nodes")
        for n, rec in enumerate(records or [], start=1):
            if isinstance(rec, dict):
                try:
                    values = [rec["x"], rec["y"], rec["z"]]
                except KeyError as e:
                    raise SceneError(f"{path}: node {n} is missing field {e}") from None
            else:
                values = rec
            rows.append(_floats(list(values), f"{path}: node {n}", 3))
    if not rows:
        raise SceneError(f"{path}: node cloud is empty")
    logger.info("loaded %d nodes from %s", len(rows), path)
    return NodeCloud(rows, element_size=element_size, clearance=clearance)


def _make_mp(mp_id: str, values: Sequence[float], where: str) -> MeasurementPoint:
    x, y, z, i, j, k = values
    norm = math.sqrt(i * i + j * j + k * k)
    if abs(norm - 1.0) > NORMAL_TOL:
        raise SceneError(f"{where}: normal of {mp_id} has length {norm:.6g}, expected 1")
    return MeasurementPoint(mp_id, Point3(x, y, z), UnitVec3.normalized((i, j, k)))


def _check_unique(mps: Sequence[MeasurementPoint], where: str) -> None:
    seen = set()
    for mp in mps:
        if mp.id in seen:
            raise SceneError(f"{where}: duplicate MP id {mp.id!r}")
        seen.add(mp.id)


def _mp_from_record(rec: Dict, where: str) -> MeasurementPoint:
    if not isinstance(rec, dict):
        raise SceneError(f"{where}: expected an object with id,x,y,z,I,J,K")
    try:
        values = [rec[key] for key in ("x", "y", "z", "I", "J", "K")]
        mp_id = str(rec["id"])
    except KeyError as e:
        raise SceneError(f"{where}: missing field {e}") from None
    return _make_mp(mp_id, _floats(values, where, 6), where)


def load_mps(path: str, fmt: Optional[str] = None) -> List[MeasurementPoint]:
    """Read measurement points from CSV (`id,x,y,z,I,J,K`) or a JSON list of records."""
    fmt = _detect_format(path, fmt)
    mps: List[MeasurementPoint] = []
    if fmt == "csv":
        for line, values in _csv_rows(path):
            if len(values) != 7:
                raise SceneError(f"{path}:{line}: expected 7 values, got {len(values)}")
            where = f"{path}:{line}"
            mps.append(_make_mp(values[0], _floats(values[1:], where, 6), where))
    else:
        doc = _load_json(path) or []
        if not isinstance(doc, list):
            raise SceneError(f"{path}: expected a list of MPs")
        for n, rec in enumerate(doc, start=1):
            mps.append(_mp_from_record(rec, f"{path}:{n}"))
    if not mps:
        raise SceneError(f"{path}: no measurement points")
    _check_unique(mps, path)
    logger.info("loaded %d measurement points from %s", len(mps), path)
    return mps


def save_nodes_csv(cloud: NodeCloud, path: str) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        for x, y, z in cloud.nodes.tolist():
            writer.writerow([repr(x), repr(y), repr(z)])


def save_mps_csv(mps: Sequence[MeasurementPoint], path: str) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        for mp in mps:
            writer.writerow([mp.id, *(repr(float(v)) for v in (*mp.position, *mp.normal))])


# ---------------------------------------------------------------------------
# synthetic scenes
# ---------------------------------------------------------------------------

MP_SIDES = ("front", "back", "both")


def _unit(v, what: str) -> np.ndarray:
    a = np.asarray(v, dtype=float)
    n = float(np.linalg.norm(a))
    if a.shape != (3,) or not n > 0:
        raise SceneError(f"{what} must be a non-zero 3-vector, got {v!r}")
    return a / n


def _axis_samples(extent: float, spacing: float) -> np.ndarray:
    """0, l, 2l, ... up to extent, with the far edge always included."""
    n = int(math.floor(extent / spacing + 1e-9))
    values = np.arange(n + 1, dtype=float) * spacing
    if extent - values[-1] > 1e-9:
        values = np.append(values, extent)
    else:
        values[-1] = extent
    return values


@dataclass
class Primitive:
    """Common fields of every SceneSpec primitive."""

    name: str
    origin: Tuple[float, float, float]
    spacing: float
    mp_count: int = 0
    mp_side: str = "front"

    def validate(self) -> None:
        if not self.spacing > 0:
            raise SceneError(f"{self.name}: spacing must be > 0")
        if self.mp_count < 0:
            raise SceneError(f"{self.name}: mp_count must be >= 0")
        if self.mp_side not in MP_SIDES:
            raise SceneError(f"{self.name}: mp_side must be one of {MP_SIDES}")

    def sample(self) -> Tuple[np.ndarray, np.ndarray]:
        """Return (nodes, outward normals) as two (n, 3) arrays."""
        raise NotImplementedError


@dataclass
class Panel(Primitive):
    """Rectangular patch origin + a*u + b*v, 0<=a<=width, 0<=b<=height; normal u x v.

    `holes` are closed rectangles (a0, b0, a1, b1) in the panel's (a, b) coordinates.
    """

    u_axis: Tuple[float, float, float] = (1.0, 0.0, 0.0)
    v_axis: Tuple[float, float, float] = (0.0, 1.0, 0.0)
    width: float = 0.0
    height: float = 0.0
    holes: List[Tuple[float, float, float, float]] = field(default_factory=list)

    def validate(self) -> None:
        super().validate()
        if not (self.width > 0 and self.height > 0):
            raise SceneError(f"{self.name}: extents must be > 0")
        u, v = _unit(self.u_axis, "u_axis"), _unit(self.v_axis, "v_axis")
        if abs(float(u @ v)) > 1e-9:
            raise SceneError(f"{self.name}: u_axis and v_axis must be perpendicular")
        for hole in self.holes:
            if len(hole) != 4 or hole[0] >= hole[2] or hole[1] >= hole[3]:
                raise SceneError(f"{self.name}: bad hole {hole!r}")

    def sample(self):
        u, v = _unit(self.u_axis, "u_axis"), _unit(self.v_axis, "v_axis")
        a_vals = _axis_samples(self.width, self.spacing)
        b_vals = _axis_samples(self.height, self.spacing)
        aa, bb = np.meshgrid(a_vals, b_vals, indexing="ij")
        aa, bb = aa.ravel(), bb.ravel()
        keep = np.ones(len(aa), dtype=bool)
        for a0, b0, a1, b1 in self.holes:
            keep &= ~((aa >= a0) & (aa <= a1) & (bb >= b0) & (bb <= b1))
        aa, bb = aa[keep], bb[keep]
        nodes = np.asarray(self.origin, dtype=float) + aa[:, None] * u + bb[:, None] * v
        normal = np.cross(u, v)
        return nodes, np.tile(normal, (len(nodes), 1))


@dataclass
class Wall(Panel):
    """A Panel standing upright: default plane x = origin.x with normal +x."""

    u_axis: Tuple[float, float, float] = (0.0, 1.0, 0.0)
    v_axis: Tuple[float, float, float] = (0.0, 0.0, 1.0)


@dataclass
class CylinderPatch(Primitive):
    """Part of a cylinder around `axis` through `origin`, angles measured from `ref_dir`."""

    axis: Tuple[float, float, float] = (0.0, 1.0, 0.0)
    ref_dir: Tuple[float, float, float] = (1.0, 0.0, 0.0)
    radius: float = 0.0
    length: float = 0.0
    start_angle: float = 0.0
    end_angle: float = 90.0

    def validate(self) -> None:
        super().validate()
        if not (self.radius > 0 and self.length > 0 and self.end_angle > self.start_angle):
            raise SceneError(f"{self.name}: extents must be > 0")

    def sample(self):
        a = _unit(self.axis, "axis")
        r = np.asarray(self.ref_dir, dtype=float)
        r = _unit(r - (r @ a) * a, "ref_dir")
        b = np.cross(a, r)
        arc = self.radius * math.radians(self.end_angle - self.start_angle)
        thetas = math.radians(self.start_angle) + _axis_samples(arc, self.spacing) / self.radius
        ts = _axis_samples(self.length, self.spacing)
        th, tt = np.meshgrid(thetas, ts, indexing="ij")
        th, tt = th.ravel(), tt.ravel()
        normals = np.cos(th)[:, None] * r + np.sin(th)[:, None] * b
        nodes = np.asarray(self.origin, dtype=float) + tt[:, None] * a + self.radius * normals
        return nodes, normals


@dataclass
class Box(Primitive):
    """Hollow axis-aligned box from `origin` (min corner) spanning `size`; normals point out."""

    size: Tuple[float, float, float] = (0.0, 0.0, 0.0)

    def validate(self) -> None:
        super().validate()
        if len(self.size) != 3 or not all(s > 0 for s in self.size):
            raise SceneError(f"{self.name}: extents must be > 0")

    def sample(self):
        o = np.asarray(self.origin, dtype=float)
        sx, sy, sz = (float(s) for s in self.size)
        faces = []
        e = np.eye(3)
        for axis, (w_ax, h_ax) in enumerate(((1, 2), (0, 2), (0, 1))):
            extents = (sx, sy, sz)
            for offset, sign in ((0.0, -1.0), (extents[axis], 1.0)):
                face = Panel(self.name, tuple(o + offset * e[axis]), self.spacing,
                             u_axis=tuple(e[w_ax]), v_axis=tuple(e[h_ax]),
                             width=extents[w_ax], height=extents[h_ax])
                pts, _ = face.sample()
                faces.append((pts, np.tile(sign * e[axis], (len(pts), 1))))
        nodes = np.concatenate([f[0] for f in faces])
        normals = np.concatenate([f[1] for f in faces])
        # shared edges appear on two or three faces
        _, first = np.unique(nodes, axis=0, return_index=True)
        first = np.sort(first)
        return nodes[first], normals[first]


_PRIMITIVES = {"panel": Panel, "wall": Wall, "cylinder": CylinderPatch, "box": Box}


@dataclass
class SceneSpec:
    """Named primitive list plus optional explicit MPs."""

    primitives: List[Primitive] = field(default_factory=list)
    mps: List[MeasurementPoint] = field(default_factory=list)
    name: str = "scene"

    def validate(self) -> None:
        if not self.primitives:
            raise SceneError(f"{self.name}: scene has no primitives")
        names = [p.name for p in self.primitives]
        if len(set(names)) != len(names):
            raise SceneError(f"{self.name}: primitive names must be unique")
        for p in self.primitives:
            p.validate()
        _check_unique(self.mps, self.name)

    @classmethod
    def from_dict(cls, doc: Dict) -> "SceneSpec":
        if not isinstance(doc, dict):
            raise SceneError("scene spec must be a JSON object")
        prims: List[Primitive] = []
        for n, raw in enumerate(doc.get("primitives", [])):
            raw = dict(raw)
            kind = raw.pop("type", None)
            if kind not in _PRIMITIVES:
                raise SceneError(f"primitive {n}: unknown type {kind!r}")
            raw.setdefault("name", f"{kind}{n}")
            if "size" in raw and kind in ("panel", "wall"):
                raw["width"], raw["height"] = raw.pop("size")
            for key in ("origin", "u_axis", "v_axis", "axis", "ref_dir", "size"):
                if key in raw:
                    raw[key] = tuple(float(v) for v in raw[key])
            if "holes" in raw:
                raw["holes"] = [tuple(float(v) for v in h) for h in raw["holes"]]
            try:
                prims.append(_PRIMITIVES[kind](**raw))
            except TypeError as e:
                raise SceneError(f"primitive {n} ({kind}): {e}") from None
        mps = [_mp_from_record(rec, f"scene:mp {n}") for n, rec in enumerate(doc.get("mps", []), start=1)]
        spec = cls(prims, mps, str(doc.get("name", "scene")))
        spec.validate()
        return spec


def load_scene_spec(path: str) -> SceneSpec:
    doc = _load_json(path)
    if doc is None:
        raise SceneError(f"{path}: scene spec is empty")
    return SceneSpec.from_dict(doc)


def generate_scene(spec: SceneSpec, seed: int = 0,
                   clearance: Optional[float] = None) -> Tuple[NodeCloud, List[MeasurementPoint]]:
    """Sample every primitive and place its MPs on randomly chosen surface nodes.

    Deterministic for a fixed (spec, seed): each primitive draws from its own generator
    seeded with (seed, primitive index).
    """
    spec.validate()
    if seed < 0:
        raise SceneError(f"seed must be >= 0, got {seed}")
    all_nodes = []
    mps = list(spec.mps)
    for index, prim in enumerate(spec.primitives):
        nodes, normals = prim.sample()
        all_nodes.append(nodes)
        if prim.mp_count == 0:
            continue
        if prim.mp_count > len(nodes):
            raise SceneError(f"{prim.name}: mp_count {prim.mp_count} exceeds {len(nodes)} nodes")
        rng = np.random.default_rng([seed, index])
        chosen = rng.choice(len(nodes), size=prim.mp_count, replace=False)
        flips = rng.random(prim.mp_count) < 0.5
        for k, (node_index, flip) in enumerate(zip(chosen.tolist(), flips.tolist())):
            n = normals[node_index]
            if prim.mp_side == "back" or (prim.mp_side == "both" and flip):
                n = -n
            mps.append(MeasurementPoint(f"{prim.name}-{k + 1}", Point3.of(nodes[node_index]),
                                        UnitVec3.normalized(n)))
    _check_unique(mps, spec.name)
    element_size = min(p.spacing for p in spec.primitives)
    cloud = NodeCloud(np.concatenate(all_nodes), element_size=element_size, clearance=clearance)
    logger.info("generated scene %r: %d nodes, %d MPs", spec.name, len(cloud), len(mps))
    return cloud, mps


__all__ = [
    "NodeCloud",
    "load_nodes",
    "load_mps",
    "save_nodes_csv",
    "save_mps_csv",
    "Primitive",
    "Panel",
    "Wall",
    "CylinderPatch",
    "Box",
    "SceneSpec",
    "load_scene_spec",
    "generate_scene",
]
