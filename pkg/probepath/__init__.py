from .config import PlanConfig, Settings, SolverParams, load_settings
from .geometry import MeasurementPoint, Point3, UnitVec3
from .localpath import LocalPath, plan_local_path
from .pipeline import PlanReport, export_plan, load_report, run_plan
from .scene import NodeCloud, SceneSpec, generate_scene, load_mps, load_nodes
from .timing import TimeMatrix, build_time_matrix
from .tsp import Tour, solve, solve_accessible

__all__ = [
    "PlanConfig",
    "Settings",
    "SolverParams",
    "load_settings",
    "MeasurementPoint",
    "Point3",
    "UnitVec3",
    "LocalPath",
    "plan_local_path",
    "PlanReport",
    "export_plan",
    "load_report",
    "run_plan",
    "NodeCloud",
    "SceneSpec",
    "generate_scene",
    "load_mps",
    "load_nodes",
    "TimeMatrix",
    "build_time_matrix",
    "Tour",
    "solve",
    "solve_accessible",
]
