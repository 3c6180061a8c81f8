"""
probepath.timing

Inspection-time model and the symmetric time matrix.

  - transition_time: polyline length / v, or a_inf for an inaccessible path
  - required_orientation: (A, B) head angles addressing an MP along -normal, snapped to
    the 7.5 degree index grid; A is the tilt from straight down, B the azimuth, so the
    stylus points along (sinA cosB, sinA sinB, -cosA)
  - rotation_time: 0 inside the theta_max cone, else (|dA| + |dB|) / omega + t_s
  - build_time_matrix: T[i][q] for the depot (index 0) and every MP pair, capped at
    local_time_cap, symmetrized by keeping the cheaper travel direction ("path inversion")
  - tour_time: depot -> tour -> depot cost

Matrix CSV: m + 1 rows of m + 1 comma separated values, a_inf written as `inf`.
"""
from __future__ import annotations

import csv
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from .config import PlanConfig
from .errors import MatrixFormatError, OrientationInfeasible
from .geometry import MeasurementPoint, UnitVec3, angle_between, as_array, polyline_length
from .localpath import LocalPath, plan_from_point, plan_local_path
from .scene import NodeCloud

logger = logging.getLogger(__name__)

INDEX_STEP_DEG = 7.5
A_MAX_DEG = 105.0
DEPOT_ID = "origin"


def _wrap_deg(angle: float) -> float:
    """Wrap to (-180, 180]."""
    wrapped = math.fmod(angle, 360.0)
    if wrapped <= -180.0:
        wrapped += 360.0
    elif wrapped > 180.0:
        wrapped -= 360.0
    return wrapped


@dataclass(frozen=True)
class StylusOrientation:
    a: float  # tilt, deg
    b: float  # swivel, deg

    @property
    def direction(self) -> UnitVec3:
        ra, rb = math.radians(self.a), math.radians(self.b)
        return UnitVec3(math.sin(ra) * math.cos(rb), math.sin(ra) * math.sin(rb), -math.cos(ra))


def transition_time(path: LocalPath, v: float, a_inf: float = 1e6) -> float:
    if not v > 0:
        raise ValueError(f"velocity must be > 0, got {v}")
    if not path.feasible:
        return a_inf
    return polyline_length(path.positions) / v


def required_orientation(mp: MeasurementPoint, theta_max: float = 30.0) -> StylusOrientation:
    """Index-grid orientation whose stylus points along -mp.normal."""
    i, j, k = mp.normal
    a = math.degrees(math.acos(max(-1.0, min(1.0, k))))
    b = math.degrees(math.atan2(-j, -i)) if math.hypot(i, j) > 1e-12 else 0.0
    a = round(a / INDEX_STEP_DEG) * INDEX_STEP_DEG
    b = _wrap_deg(round(b / INDEX_STEP_DEG) * INDEX_STEP_DEG)
    if a == 0.0:
        b = 0.0
    if a > A_MAX_DEG:
        raise OrientationInfeasible(f"MP {mp.id}: tilt {a:g} deg exceeds the {A_MAX_DEG:g} deg head envelope")
    orientation = StylusOrientation(a, b)
    if angle_between(orientation.direction, -mp.normal) > theta_max:
        raise OrientationInfeasible(f"MP {mp.id}: no index position within {theta_max:g} deg of its normal")
    return orientation


def rotation_angle(from_: StylusOrientation, to: StylusOrientation) -> float:
    """theta^{A+B}: both axes move one after the other."""
    return abs(to.a - from_.a) + abs(_wrap_deg(to.b - from_.b))


def rotation_time(from_: StylusOrientation, to: StylusOrientation, mp_to_normal, cfg: PlanConfig) -> float:
    if angle_between(from_.direction, -as_array(mp_to_normal)) <= cfg.theta_max:
        return 0.0
    return rotation_angle(from_, to) / cfg.angular_speed + cfg.pause_time


@dataclass(frozen=True)
class MatrixLeg:
    """Provenance of one symmetric entry, the path oriented from the lower index."""

    path: LocalPath
    transition: float
    rotation: float

    @property
    def total(self) -> float:
        return self.transition + self.rotation


@dataclass
class TimeMatrix:
    values: np.ndarray
    ids: List[str]
    a_inf: float
    legs: Dict[Tuple[int, int], MatrixLeg] = field(default_factory=dict)

    @property
    def m(self) -> int:
        return len(self.values) - 1

    def is_inf(self, i: int, q: int) -> bool:
        return bool(self.values[i, q] >= self.a_inf)

    def leg(self, i: int, q: int) -> Tuple[LocalPath, float, float]:
        """(path oriented i -> q, transition s, rotation s)."""
        entry = self.legs[(min(i, q), max(i, q))]
        path = entry.path if i < q else entry.path.reversed()
        return path, entry.transition, entry.rotation

    def id_of(self, index: int) -> str:
        return DEPOT_ID if index == 0 else self.ids[index - 1]

    def reduced(self, keep: Sequence[int]) -> "TimeMatrix":
        """Sub-matrix over the depot plus MP indices `keep` (1-based, in the given order)."""
        rows = [0, *keep]
        values = self.values[np.ix_(rows, rows)].copy()
        legs = {}
        for new_i, old_i in enumerate(rows):
            for new_q in range(new_i + 1, len(rows)):
                old_q = rows[new_q]
                key = (min(old_i, old_q), max(old_i, old_q))
                if key not in self.legs:
                    continue
                entry = self.legs[key]
                path = entry.path if old_i < old_q else entry.path.reversed()
                legs[(new_i, new_q)] = MatrixLeg(path, entry.transition, entry.rotation)
        return TimeMatrix(values, [self.ids[k - 1] for k in keep], self.a_inf, legs)


class TourCost(NamedTuple):
    total: float
    tainted: bool


def tour_time(order: Sequence[int], T: TimeMatrix) -> TourCost:
    """T[0][o1] + sum T[o_k][o_k+1] + T[o_m][0]; tainted when any leg is a_inf."""
    if sorted(order) != list(range(1, T.m + 1)):
        raise ValueError(f"tour {list(order)} is not a permutation of 1..{T.m}")
    seq = [0, *order, 0]
    total = 0.0
    tainted = False
    for a, b in zip(seq, seq[1:]):
        total += float(T.values[a, b])
        tainted = tainted or T.is_inf(a, b)
    return TourCost(total, tainted)


# ---------------------------------------------------------------------------
# matrix construction
# ---------------------------------------------------------------------------

def _orientations(mps: Sequence[MeasurementPoint], cfg: PlanConfig) -> List[Optional[StylusOrientation]]:
    out: List[Optional[StylusOrientation]] = []
    for mp in mps:
        try:
            out.append(required_orientation(mp, cfg.theta_max))
        except OrientationInfeasible as e:
            logger.info("%s", e)
            out.append(None)
    return out


def _capped(path: LocalPath, rotation: float, cfg: PlanConfig) -> float:
    if not path.feasible:
        return cfg.a_inf
    total = path.transition_time + rotation
    return cfg.a_inf if total > cfg.local_time_cap else total


def build_time_matrix(mps: Sequence[MeasurementPoint], cloud: NodeCloud, cfg: PlanConfig) -> TimeMatrix:
    """Plan every pair in both directions and keep the cheaper one for both entries."""
    if not mps:
        raise ValueError("a time matrix needs at least one MP")
    started = time.perf_counter()
    orient = _orientations(mps, cfg)
    m = len(mps)

    def entry(pair: Tuple[int, int]) -> Tuple[float, MatrixLeg]:
        i, q = pair
        mp_q, o_q = mps[q - 1], orient[q - 1]
        if i == 0:
            forward = plan_from_point(cfg.origin, DEPOT_ID, mp_q, cloud, cfg, towards=True)
            backward = plan_from_point(cfg.origin, DEPOT_ID, mp_q, cloud, cfg, towards=False)
            rot_f = rot_b = 0.0
            reachable = o_q is not None
        else:
            mp_i, o_i = mps[i - 1], orient[i - 1]
            forward = plan_local_path(mp_i, mp_q, cloud, cfg)
            backward = plan_local_path(mp_q, mp_i, cloud, cfg)
            reachable = o_i is not None and o_q is not None
            rot_f = rotation_time(o_i, o_q, mp_q.normal, cfg) if reachable else 0.0
            rot_b = rotation_time(o_q, o_i, mp_i.normal, cfg) if reachable else 0.0
        t_f = _capped(forward, rot_f, cfg) if reachable else cfg.a_inf
        t_b = _capped(backward, rot_b, cfg) if reachable else cfg.a_inf
        if t_b < t_f:
            return t_b, MatrixLeg(backward.reversed(), backward.transition_time, rot_b)
        return t_f, MatrixLeg(forward, forward.transition_time, rot_f)

    pairs = [(i, q) for i in range(m + 1) for q in range(i + 1, m + 1)]
    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(entry, pairs))
    else:
        results = [entry(p) for p in pairs]

    values = np.zeros((m + 1, m + 1))
    legs: Dict[Tuple[int, int], MatrixLeg] = {}
    for (i, q), (value, leg) in zip(pairs, results):
        values[i, q] = values[q, i] = value
        legs[(i, q)] = leg
    T = TimeMatrix(values, [mp.id for mp in mps], cfg.a_inf, legs)
    n_inf = int(np.count_nonzero(values[np.triu_indices(m + 1, 1)] >= cfg.a_inf))
    logger.info("time matrix for %d MPs built in %.2f s (%d of %d entries inaccessible)",
                m, time.perf_counter() - started, n_inf, len(pairs))
    return T


# ---------------------------------------------------------------------------
# CSV interchange
# ---------------------------------------------------------------------------

def save_matrix_csv(T: TimeMatrix, path: str) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        for row in T.values.tolist():
            writer.writerow(["inf" if v >= T.a_inf else repr(v) for v in row])


def load_matrix_csv(path: str, a_inf: float = 1e6) -> TimeMatrix:
    rows: List[List[float]] = []
    try:
        with open(path, newline="", encoding="utf-8") as f:
            reader = csv.reader(f)
            for row in reader:
                if not row:
                    continue
                try:
                    rows.append([a_inf if cell.strip() == "inf" else float(cell) for cell in row])
                except ValueError:
                    raise MatrixFormatError(f"{path}:{reader.line_num}: not a number in {row!r}") from None
                if len(rows[-1]) != len(rows[0]):
                    raise MatrixFormatError(f"{path}:{reader.line_num}: expected {len(rows[0])} columns")
    except OSError as e:
        raise MatrixFormatError(f"cannot read {path}: {e}") from e
    if len(rows) < 2 or len(rows) != len(rows[0]):
        raise MatrixFormatError(f"{path}: expected a square matrix with at least 2 rows")
    values = np.array(rows, dtype=float)
    if np.any(np.diag(values) != 0.0) or np.any(values < 0):
        raise MatrixFormatError(f"{path}: diagonal must be 0 and entries >= 0")
    values[values >= a_inf] = a_inf
    return TimeMatrix(values, [str(k) for k in range(1, len(values))], a_inf)


__all__ = [
    "INDEX_STEP_DEG",
    "A_MAX_DEG",
    "DEPOT_ID",
    "StylusOrientation",
    "transition_time",
    "required_orientation",
    "rotation_angle",
    "rotation_time",
    "MatrixLeg",
    "TimeMatrix",
    "TourCost",
    "tour_time",
    "build_time_matrix",
    "save_matrix_csv",
    "load_matrix_csv",
]
