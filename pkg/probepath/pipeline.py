"""
probepath.pipeline

End-to-end planning: scene + MPs + settings -> time matrix -> tour -> waypoint program.

Features:
  - load_inputs: node/MP files or a SceneSpec (generated scene, optional MP file override)
  - run_plan: matrix build, inaccessible-MP handling, solve, program expansion, re-verification
  - the program expands each leg to Q_i -> M_i -> Q_i -> [ROTATE] -> [SMPs] -> Q_i+1
  - verify_program: every AP/SMP/origin translation re-passes collision checking and every
    MP is touched within theta_max of its normal
  - export_plan: report JSON, program CSV, trajectory OBJ; load_report reads the JSON back
  - compare_solvers: best / median / wall time per solver over a seed set
"""
from __future__ import annotations

import csv
import dataclasses
import json
import logging
import statistics
import time
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .collision import segment_collides
from .config import PlanConfig, Settings, SolverParams
from .errors import InputError, InvariantViolation, OrientationInfeasible
from .geometry import MeasurementPoint, Point3, angle_between, as_array
from .scene import NodeCloud, generate_scene, load_mps, load_nodes, load_scene_spec
from .timing import StylusOrientation, TimeMatrix, build_time_matrix, required_orientation
from .tsp import Tour, nearest_neighbor, solve, solve_accessible

logger = logging.getLogger(__name__)

STEP_KINDS = ("ORIGIN", "AP", "MP", "SMP", "ROTATE")
EXPORT_FORMATS = ("json", "csv", "obj")
CSV_COLUMNS = ["index", "kind", "x", "y", "z", "A", "B", "cumulative_time"]


@dataclass(frozen=True)
class ProgramStep:
    kind: str
    position: Point3
    cumulative_time: float
    mp_id: Optional[str] = None
    a: Optional[float] = None
    b: Optional[float] = None
    leg: int = -1  # index into PlanReport.legs; -1 for the starting ORIGIN


@dataclass(frozen=True)
class LegSummary:
    from_id: str
    to_id: str
    rule: str
    smp_count: int
    transition: float
    rotation: float
    feasible: bool
    inaccessible: bool  # the matrix entry is A_inf

    @property
    def category(self) -> str:
        base = "smp" if self.smp_count else "direct"
        return f"{base}+rotation" if self.rotation > 0 else base


@dataclass(frozen=True)
class ComparisonRow:
    solver: str
    best: float
    median: float
    wall_time: float
    runs: int


@dataclass
class PlanReport:
    tour: Tour
    tour_ids: List[str]
    program: List[ProgramStep]
    legs: List[LegSummary]
    transition_time: float
    rotation_time: float
    total_time: float
    inaccessible: List[str]
    baseline_time: float
    improvement_rate: float
    config: Dict[str, Any]
    timings: Dict[str, float] = field(default_factory=dict)
    comparison: List[ComparisonRow] = field(default_factory=list)

    @property
    def smp_count(self) -> int:
        return sum(1 for s in self.program if s.kind == "SMP")

    @property
    def rotation_count(self) -> int:
        return sum(1 for s in self.program if s.kind == "ROTATE")

    @property
    def segment_count(self) -> int:
        return max(0, sum(1 for s in self.program if s.kind != "ROTATE") - 1)

    @property
    def probe_directions(self) -> int:
        return len({(s.a, s.b) for s in self.program if s.kind == "MP"})

    @property
    def leg_categories(self) -> Dict[str, int]:
        counts = {"direct": 0, "direct+rotation": 0, "smp": 0, "smp+rotation": 0}
        for leg in self.legs:
            counts[leg.category] += 1
        return counts

    def to_dict(self) -> Dict[str, Any]:
        return {
            "tour": {**dataclasses.asdict(self.tour), "order": list(self.tour.order),
                     "history": list(self.tour.history)},
            "tour_ids": list(self.tour_ids),
            "totals": {"transition": self.transition_time, "rotation": self.rotation_time,
                       "total": self.total_time},
            "counts": {"smps": self.smp_count, "rotations": self.rotation_count,
                       "segments": self.segment_count, "probe_directions": self.probe_directions,
                       "leg_categories": self.leg_categories},
            "inaccessible": list(self.inaccessible),
            "baseline": {"total": self.baseline_time, "improvement_rate": self.improvement_rate},
            "config": self.config,
            "timings": dict(self.timings),
            "comparison": [dataclasses.asdict(row) for row in self.comparison],
            "legs": [dataclasses.asdict(leg) for leg in self.legs],
            "program": [{**dataclasses.asdict(s), "position": list(s.position)} for s in self.program],
        }

    @classmethod
    def from_dict(cls, doc: Dict[str, Any]) -> "PlanReport":
        try:
            tour_doc = dict(doc["tour"])
            tour_doc["order"] = tuple(tour_doc["order"])
            tour_doc["history"] = tuple(tour_doc.get("history", ()))
            program = [ProgramStep(**{**s, "position": Point3.of(s["position"])}) for s in doc["program"]]
            return cls(
                tour=Tour(**tour_doc),
                tour_ids=list(doc["tour_ids"]),
                program=program,
                legs=[LegSummary(**leg) for leg in doc["legs"]],
                transition_time=doc["totals"]["transition"],
                rotation_time=doc["totals"]["rotation"],
                total_time=doc["totals"]["total"],
                inaccessible=list(doc["inaccessible"]),
                baseline_time=doc["baseline"]["total"],
                improvement_rate=doc["baseline"]["improvement_rate"],
                config=doc.get("config", {}),
                timings=doc.get("timings", {}),
                comparison=[ComparisonRow(**row) for row in doc.get("comparison", [])],
            )
        except (KeyError, TypeError) as e:
            raise InputError(f"not a plan report: {e}") from None


# ---------------------------------------------------------------------------
# inputs
# ---------------------------------------------------------------------------

def load_inputs(cfg: PlanConfig, nodes_path: Optional[str] = None, mps_path: Optional[str] = None,
                scene_path: Optional[str] = None) -> Tuple[NodeCloud, List[MeasurementPoint]]:
    """Node cloud and MPs from files, or from a generated SceneSpec (MP file overrides its MPs)."""
    if scene_path:
        cloud, mps = generate_scene(load_scene_spec(scene_path), seed=cfg.seed, clearance=cfg.clearance)
    elif nodes_path:
        cloud = load_nodes(nodes_path, element_size=cfg.element_size, clearance=cfg.clearance)
        mps = []
    else:
        raise InputError("either a node file or a scene spec is required")
    if mps_path:
        mps = load_mps(mps_path)
    if not mps:
        raise InputError("no measurement points given")
    return cloud, mps


# ---------------------------------------------------------------------------
# program expansion
# ---------------------------------------------------------------------------

def _orientation_of(mp: MeasurementPoint, cfg: PlanConfig) -> Optional[StylusOrientation]:
    try:
        return required_orientation(mp, cfg.theta_max)
    except OrientationInfeasible:
        return None


def build_program(tour: Tour, T: TimeMatrix, mps: Sequence[MeasurementPoint],
                  cfg: PlanConfig) -> Tuple[List[ProgramStep], List[LegSummary]]:
    by_id = {mp.id: mp for mp in mps}
    origin = Point3.of(cfg.origin)
    steps = [ProgramStep("ORIGIN", origin, 0.0)]
    legs: List[LegSummary] = []
    if not tour.order:
        return steps, legs

    elapsed = 0.0
    seq = [0, *tour.order, 0]
    for leg_index, (i, q) in enumerate(zip(seq, seq[1:])):
        path, transition, rotation = T.leg(i, q)
        inaccessible = T.is_inf(i, q)
        if inaccessible:
            transition, rotation = float(T.values[i, q]), 0.0
        arriving = by_id[T.id_of(q)] if q else None
        target = _orientation_of(arriving, cfg) if arriving else None
        legs.append(LegSummary(T.id_of(i), T.id_of(q), path.rule_used.value, path.smp_count,
                               transition, rotation, path.feasible, inaccessible))

        here = path.waypoints[0].position
        if rotation > 0 and target is not None:
            steps.append(ProgramStep("ROTATE", here, elapsed + rotation, a=target.a, b=target.b, leg=leg_index))
        travelled = 0.0
        previous = as_array(here)
        for wp in path.waypoints[1:-1]:
            travelled += float(np.linalg.norm(as_array(wp.position) - previous))
            previous = as_array(wp.position)
            at = elapsed + rotation + travelled / cfg.velocity
            steps.append(ProgramStep("SMP", wp.position, at, leg=leg_index))
        elapsed += float(T.values[i, q])
        end = path.waypoints[-1].position
        if arriving is None:
            steps.append(ProgramStep("ORIGIN", end, elapsed, leg=leg_index))
            continue
        # touched in its own index position, the orientation the next leg is priced from
        a, b = (target.a, target.b) if target is not None else (None, None)
        steps.append(ProgramStep("AP", end, elapsed, arriving.id, leg=leg_index))
        steps.append(ProgramStep("MP", arriving.position, elapsed, arriving.id, a, b, leg=leg_index))
        steps.append(ProgramStep("AP", end, elapsed, arriving.id, leg=leg_index))
    return steps, legs


def verify_program(report: PlanReport, cloud: NodeCloud, cfg: PlanConfig,
                   mps: Sequence[MeasurementPoint] = ()) -> int:
    """Re-check every AP/SMP/origin translation of feasible legs; returns the segment count.

    With `mps` given, every MP step must also hold the stylus within `theta_max` of -normal.
    """
    normals = {mp.id: mp.normal for mp in mps}
    for s in report.program:
        if s.kind != "MP" or s.mp_id not in normals or s.a is None:
            continue
        off = angle_between(StylusOrientation(s.a, s.b).direction, -as_array(normals[s.mp_id]))
        if off > cfg.theta_max + 1e-9:
            raise InvariantViolation(
                f"MP {s.mp_id} touched at A={s.a:g} B={s.b:g}, {off:.1f} deg off its normal "
                f"(limit {cfg.theta_max:g} deg)")
    moves = [s for s in report.program if s.kind != "ROTATE"]
    checked = 0
    for s1, s2 in zip(moves, moves[1:]):
        if s1.kind == "MP" or s2.kind == "MP" or s1.position == s2.position:
            continue
        if not report.legs[s2.leg].feasible:
            continue
        result = segment_collides(cloud, s1.position, s2.position, cfg.eps, cfg.clearance)
        if result.collides:
            raise InvariantViolation(
                f"program segment {tuple(s1.position)} -> {tuple(s2.position)} passes "
                f"{result.min_distance:.3f} mm from node {tuple(result.nearest_node)}")
        checked += 1
    return checked


# ---------------------------------------------------------------------------
# orchestration
# ---------------------------------------------------------------------------

def compare_solvers(T: TimeMatrix, params: SolverParams, seeds: Sequence[int],
                    solvers: Sequence[str] = ("sa", "ga", "aco")) -> List[ComparisonRow]:
    """Best / median tour time and total wall time per solver, sorted by best."""
    if not seeds:
        raise ValueError("compare_solvers needs at least one seed")
    rows = []
    for name in solvers:
        costs = []
        started = time.perf_counter()
        for seed in seeds:
            costs.append(solve(T, name, dataclasses.replace(params, seed=seed)).total_time)
        rows.append(ComparisonRow(name, min(costs), float(statistics.median(costs)),
                                  time.perf_counter() - started, len(costs)))
    return sorted(rows, key=lambda r: (r.best, r.solver))


def run_plan(cloud: NodeCloud, mps: Sequence[MeasurementPoint], settings: Settings = Settings(),
             solver: str = "sa", compare_seeds: Optional[Sequence[int]] = None) -> PlanReport:
    cfg, params = settings.plan, settings.solver
    timings: Dict[str, float] = {}

    started = time.perf_counter()
    T = build_time_matrix(mps, cloud, cfg)
    timings["matrix"] = time.perf_counter() - started

    started = time.perf_counter()
    solution = solve_accessible(T, solver, params)
    baseline = nearest_neighbor(solution.matrix)
    timings["solve"] = time.perf_counter() - started
    tour, R = solution.tour, solution.matrix
    if tour.tainted:
        logger.warning("tour still uses A_inf legs: %s", tour.total_time)

    program, legs = build_program(tour, R, mps, cfg)
    rate = (baseline.total_time - tour.total_time) / baseline.total_time if baseline.total_time > 0 else 0.0
    report = PlanReport(
        tour=tour,
        tour_ids=tour.ids(R),
        program=program,
        legs=legs,
        transition_time=sum(leg.transition for leg in legs),
        rotation_time=sum(leg.rotation for leg in legs),
        total_time=tour.total_time,
        inaccessible=list(solution.excluded),
        baseline_time=baseline.total_time,
        improvement_rate=rate,
        config={**cfg.to_dict(), "solver": params.to_dict(), "solver_name": solver},
        timings=timings,
    )

    started = time.perf_counter()
    checked = verify_program(report, cloud, cfg, mps)
    timings["verify"] = time.perf_counter() - started
    logger.info("program verified: %d translation segments clear", checked)

    if compare_seeds:
        report.comparison = compare_solvers(R, params, compare_seeds)
    logger.info("plan: %d MPs toured, %d inaccessible, %.3f s total (NN baseline %.3f s)",
                len(tour.order), len(report.inaccessible), report.total_time, report.baseline_time)
    return report


# ---------------------------------------------------------------------------
# export
# ---------------------------------------------------------------------------

def _fmt(value: Optional[float]) -> str:
    return "" if value is None else repr(value)


def export_plan(report: PlanReport, fmt: str, path: str) -> None:
    if fmt not in EXPORT_FORMATS:
        raise InputError(f"unknown export format {fmt!r}; choose from {', '.join(EXPORT_FORMATS)}")
    with open(path, "w", newline="", encoding="utf-8") as f:
        if fmt == "json":
            json.dump(report.to_dict(), f, indent=2)
            f.write("\n")
        elif fmt == "csv":
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(CSV_COLUMNS)
            for index, s in enumerate(report.program):
                writer.writerow([index, s.kind, *(repr(c) for c in s.position),
                                 _fmt(s.a), _fmt(s.b), repr(s.cumulative_time)])
        else:
            vertices = [s for s in report.program if s.kind != "ROTATE"]
            f.write("# probe trajectory\no trajectory\n")
            for s in vertices:
                f.write("v {} {} {}\n".format(*s.position))
            if len(vertices) > 1:
                f.write("l " + " ".join(str(k) for k in range(1, len(vertices) + 1)) + "\n")
    logger.info("wrote %s report to %s", fmt, path)


def load_report(path: str) -> PlanReport:
    try:
        with open(path, encoding="utf-8") as f:
            doc = json.load(f)
    except OSError as e:
        raise InputError(f"cannot read {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise InputError(f"{path}:{e.lineno}: invalid JSON ({e.msg})") from e
    return PlanReport.from_dict(doc)


__all__ = [
    "STEP_KINDS",
    "EXPORT_FORMATS",
    "ProgramStep",
    "LegSummary",
    "ComparisonRow",
    "PlanReport",
    "load_inputs",
    "build_program",
    "verify_program",
    "compare_solvers",
    "run_plan",
    "export_plan",
    "load_report",
]
