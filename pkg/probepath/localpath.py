"""
probepath.localpath

Collision-free local paths between the approach points (APs) of two measurement points.

When the straight move Q_i -> Q_j collides, spatial movement points (SMPs, "dummy
points") are inserted:

  - normals not opposite (scenario 1), both rules are tried:
      Rule 1: one SMP starting at the midpoint of Q_i, Q_j, stepped by h along the
              normalized sum of both normals;
      Rule 2: two SMPs starting at Q_i and Q_j, stepped alternately (P_i first) by h
              along the same direction;
  - normals opposite (scenario 2): for each direction perpendicular to n_i, two SMPs
    starting at Q_i and Q_j are stepped together by h.

Every rule or direction gets at most k0 steps. The fastest feasible candidate wins.
Only AP-to-AP moves are collision-checked; the slow AP <-> MP dips are not.
"""
from __future__ import annotations

import enum
import logging
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence, Tuple

import numpy as np

from .collision import polyline_clear
from .config import PlanConfig
from .geometry import (
    OPPOSITE,
    MeasurementPoint,
    Point3,
    UnitVec3,
    approach_point,
    as_array,
    normal_sum_direction,
    perpendicular_directions,
    polyline_length,
    sum_direction,
)
from .scene import NodeCloud

logger = logging.getLogger(__name__)


class WaypointKind(str, enum.Enum):
    AP = "AP"
    SMP = "SMP"


class Rule(str, enum.Enum):
    DIRECT = "Direct"
    RULE1 = "Rule1"
    RULE2 = "Rule2"
    SCENARIO2 = "Scenario2"
    NONE = "None"


@dataclass(frozen=True)
class Waypoint:
    position: Point3
    kind: WaypointKind


@dataclass(frozen=True)
class LocalPath:
    """AP-to-AP path; infeasible paths carry transition_time = a_inf and no SMPs."""

    from_mp: str
    to_mp: str
    waypoints: Tuple[Waypoint, ...]
    feasible: bool
    rule_used: Rule
    transition_time: float
    iterations_used: int
    direction: Optional[UnitVec3] = None
    direction_index: Optional[int] = None

    @property
    def smp_count(self) -> int:
        return len(self.waypoints) - 2

    @property
    def positions(self) -> np.ndarray:
        return np.array([w.position for w in self.waypoints], dtype=float)

    @property
    def length(self) -> float:
        return polyline_length(self.positions)

    def reversed(self) -> "LocalPath":
        return LocalPath(self.to_mp, self.from_mp, tuple(reversed(self.waypoints)), self.feasible,
                         self.rule_used, self.transition_time, self.iterations_used,
                         self.direction, self.direction_index)


class _Leg(NamedTuple):
    from_id: str
    to_id: str
    q_i: np.ndarray
    q_j: np.ndarray
    n_i: UnitVec3
    n_j: UnitVec3


def _leg(mp_i: MeasurementPoint, mp_j: MeasurementPoint, cfg: PlanConfig) -> _Leg:
    if mp_i.id == mp_j.id:
        raise ValueError(f"local path needs two distinct MPs, got {mp_i.id} twice")
    return _Leg(mp_i.id, mp_j.id,
                as_array(approach_point(mp_i, cfg.safety_distance)),
                as_array(approach_point(mp_j, cfg.safety_distance)),
                mp_i.normal, mp_j.normal)


def _point(p) -> Point3:
    return Point3(float(p[0]), float(p[1]), float(p[2]))


def _make_path(leg: _Leg, smps: Sequence[np.ndarray], rule: Rule, k: int, cfg: PlanConfig,
               direction: Optional[UnitVec3] = None, direction_index: Optional[int] = None) -> LocalPath:
    # SMPs still sitting on their AP would add zero-length moves
    kept = [p for p in smps if not (np.array_equal(p, leg.q_i) or np.array_equal(p, leg.q_j))]
    if not kept and rule is not Rule.DIRECT:
        rule = Rule.DIRECT
    waypoints = (Waypoint(_point(leg.q_i), WaypointKind.AP),
                 *(Waypoint(_point(p), WaypointKind.SMP) for p in kept),
                 Waypoint(_point(leg.q_j), WaypointKind.AP))
    length = polyline_length([leg.q_i, *kept, leg.q_j])
    return LocalPath(leg.from_id, leg.to_id, waypoints, True, rule, length / cfg.velocity, k,
                     direction, direction_index)


def _infeasible(leg: _Leg, cfg: PlanConfig) -> LocalPath:
    waypoints = (Waypoint(_point(leg.q_i), WaypointKind.AP), Waypoint(_point(leg.q_j), WaypointKind.AP))
    return LocalPath(leg.from_id, leg.to_id, waypoints, False, Rule.NONE, cfg.a_inf, cfg.max_steps)


def _clear(cloud: NodeCloud, pts: Sequence[np.ndarray], cfg: PlanConfig) -> bool:
    return polyline_clear(cloud, pts, cfg.eps, cfg.clearance)


def _scenario1_direction(leg: _Leg) -> np.ndarray:
    direction = sum_direction(leg.n_i, leg.n_j)
    if direction is OPPOSITE:
        raise ValueError(f"{leg.from_id} -> {leg.to_id}: normals are opposite, use scenario 2")
    return as_array(direction)


def _rule1(leg: _Leg, cloud: NodeCloud, cfg: PlanConfig) -> LocalPath:
    u = _scenario1_direction(leg)
    mid = (leg.q_i + leg.q_j) / 2.0
    for k in range(cfg.max_steps + 1):
        p = mid + (k * cfg.step) * u
        if _clear(cloud, [leg.q_i, p, leg.q_j], cfg):
            return _make_path(leg, [p], Rule.RULE1, k, cfg)
    return _infeasible(leg, cfg)


def _rule2(leg: _Leg, cloud: NodeCloud, cfg: PlanConfig) -> LocalPath:
    u = _scenario1_direction(leg)
    a = b = 0
    while True:
        p_i = leg.q_i + (a * cfg.step) * u
        p_j = leg.q_j + (b * cfg.step) * u
        if _clear(cloud, [leg.q_i, p_i, p_j, leg.q_j], cfg):
            return _make_path(leg, [p_i, p_j], Rule.RULE2, max(a, b), cfg)
        if a >= cfg.max_steps and b >= cfg.max_steps:
            return _infeasible(leg, cfg)
        if a <= b:
            a += 1
        else:
            b += 1


def _scenario2(leg: _Leg, cloud: NodeCloud, cfg: PlanConfig) -> LocalPath:
    best: Optional[LocalPath] = None
    for index, u_vec in enumerate(perpendicular_directions(leg.n_i), start=1):
        u = as_array(u_vec)
        for k in range(1, cfg.max_steps + 1):
            offset = (k * cfg.step) * u
            p_i, p_j = leg.q_i + offset, leg.q_j + offset
            if _clear(cloud, [leg.q_i, p_i, p_j, leg.q_j], cfg):
                path = _make_path(leg, [p_i, p_j], Rule.SCENARIO2, k, cfg, u_vec, index)
                if best is None or path.transition_time < best.transition_time:
                    best = path
                break
    return best if best is not None else _infeasible(leg, cfg)


def _plan(leg: _Leg, cloud: NodeCloud, cfg: PlanConfig) -> LocalPath:
    if _clear(cloud, [leg.q_i, leg.q_j], cfg):
        return _make_path(leg, [], Rule.DIRECT, 0, cfg)
    if sum_direction(leg.n_i, leg.n_j) is OPPOSITE:
        candidates = [_scenario2(leg, cloud, cfg)]
    else:
        candidates = [_rule1(leg, cloud, cfg), _rule2(leg, cloud, cfg)]
    best: Optional[LocalPath] = None
    for path in candidates:
        if path.feasible and (best is None or path.transition_time < best.transition_time):
            best = path
    if best is None:
        logger.debug("%s -> %s: no feasible local path", leg.from_id, leg.to_id)
        return _infeasible(leg, cfg)
    logger.debug("%s -> %s: %s, %d SMPs, %.3f s", leg.from_id, leg.to_id, best.rule_used.value,
                 best.smp_count, best.transition_time)
    return best


def plan_local_path(mp_i: MeasurementPoint, mp_j: MeasurementPoint, cloud: NodeCloud,
                    cfg: PlanConfig) -> LocalPath:
    """Fastest collision-free path Q_i -> Q_j (Direct, Rule 1/2 or scenario 2)."""
    return _plan(_leg(mp_i, mp_j, cfg), cloud, cfg)


def plan_from_point(start, start_id: str, mp: MeasurementPoint, cloud: NodeCloud,
                    cfg: PlanConfig, towards: bool = True) -> LocalPath:
    """Path between a bare point (the probe's park position) and the AP of `mp`.

    The bare point borrows the MP's normal, so detours lift away from that surface.
    """
    q = as_array(approach_point(mp, cfg.safety_distance))
    p = as_array(start)
    if towards:
        leg = _Leg(start_id, mp.id, p, q, mp.normal, mp.normal)
    else:
        leg = _Leg(mp.id, start_id, q, p, mp.normal, mp.normal)
    return _plan(leg, cloud, cfg)


def rule1_scenario1(mp_i: MeasurementPoint, mp_j: MeasurementPoint, cloud: NodeCloud,
                    cfg: PlanConfig) -> LocalPath:
    """One SMP lifted from the midpoint of the APs."""
    return _rule1(_leg(mp_i, mp_j, cfg), cloud, cfg)


def rule2_scenario1(mp_i: MeasurementPoint, mp_j: MeasurementPoint, cloud: NodeCloud,
                    cfg: PlanConfig) -> LocalPath:
    """Two SMPs lifted alternately from the APs."""
    return _rule2(_leg(mp_i, mp_j, cfg), cloud, cfg)


def scenario2(mp_i: MeasurementPoint, mp_j: MeasurementPoint, cloud: NodeCloud,
              cfg: PlanConfig) -> LocalPath:
    """Two SMPs moved together sideways, for MPs with opposite normals."""
    if normal_sum_direction(mp_i, mp_j) is not OPPOSITE:
        raise ValueError(f"{mp_i.id} -> {mp_j.id}: normals are not opposite")
    return _scenario2(_leg(mp_i, mp_j, cfg), cloud, cfg)


__all__ = [
    "WaypointKind",
    "Rule",
    "Waypoint",
    "LocalPath",
    "plan_local_path",
    "plan_from_point",
    "rule1_scenario1",
    "rule2_scenario1",
    "scenario2",
]
