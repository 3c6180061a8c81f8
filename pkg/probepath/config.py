"""
probepath.config

Planner and solver parameters.

Defaults describe a desk-scale CMM: l = D0 = 4 mm, d = 5 mm, h = 10 mm,
k0 = 10, omega = 1 deg/s, t_s = 0.3 s, v = 85 mm/s, local time cap 200 s.

Resolution order for the CLI:
  1) command line flags (--config, --seed, --workers)
  2) environment / .env: PROBEPATH_CONFIG, PROBEPATH_SEED, PROBEPATH_WORKERS
  3) values from the config JSON
  4) the defaults below
"""
from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Tuple

from dotenv import find_dotenv, load_dotenv

from .errors import ConfigError


@dataclass(frozen=True)
class PlanConfig:
    element_size: float = 4.0       # l, mm
    clearance: float = 4.0          # D0, mm
    safety_distance: float = 5.0    # d, mm
    step: float = 10.0              # h, mm
    max_steps: int = 10             # k0
    angular_speed: float = 1.0      # omega, deg/s
    pause_time: float = 0.3         # t_s, s
    velocity: float = 85.0          # v, mm/s
    search_margin: Optional[float] = None  # eps, mm; None -> max(clearance, element_size)
    a_inf: float = 1e6              # s
    theta_max: float = 30.0         # deg
    local_time_cap: float = 200.0   # s
    origin: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        for name in ("element_size", "clearance", "safety_distance", "step",
                     "angular_speed", "pause_time", "velocity", "local_time_cap"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be > 0, got {getattr(self, name)}")
        if not isinstance(self.max_steps, int) or self.max_steps < 1:
            raise ConfigError(f"max_steps must be a positive integer, got {self.max_steps}")
        if self.search_margin is not None and self.search_margin < self.clearance:
            raise ConfigError(f"search_margin ({self.search_margin}) must be >= clearance ({self.clearance})")
        if not self.a_inf > self.local_time_cap:
            raise ConfigError("a_inf must exceed local_time_cap")
        if not 0 < self.theta_max <= 90:
            raise ConfigError(f"theta_max must be in (0, 90], got {self.theta_max}")
        if len(self.origin) != 3:
            raise ConfigError("origin must have three coordinates")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        object.__setattr__(self, "origin", tuple(float(c) for c in self.origin))

    @property
    def eps(self) -> float:
        if self.search_margin is not None:
            return self.search_margin
        return max(self.clearance, self.element_size)

    def to_dict(self) -> Dict[str, Any]:
        d = dataclasses.asdict(self)
        d["origin"] = list(self.origin)
        return d


@dataclass(frozen=True)
class SolverParams:
    """Parameters for the SA, GA and ACO solvers; None means "derive from the matrix"."""

    seed: int = 0
    # simulated annealing
    sa_initial_temperature: Optional[float] = None   # mean finite entry * m
    sa_cooling_rate: float = 0.995
    sa_iterations_per_temperature: Optional[int] = None   # 100 * m
    sa_final_temperature_ratio: float = 1e-6
    sa_max_temperatures: Optional[int] = None
    # genetic algorithm
    ga_population: int = 60
    ga_generations: int = 200
    ga_crossover_rate: float = 0.9
    ga_mutation_rate: float = 0.2
    ga_tournament: int = 3
    # ant colony
    aco_ants: int = 20
    aco_iterations: int = 100
    aco_evaporation: float = 0.3
    aco_alpha: float = 1.0
    aco_beta: float = 3.0
    aco_deposit: float = 1.0

    def __post_init__(self):
        for name in ("sa_cooling_rate", "ga_crossover_rate", "ga_mutation_rate", "aco_evaporation"):
            value = getattr(self, name)
            if not 0 < value < 1:
                raise ConfigError(f"{name} must be in (0, 1), got {value}")
        if not 0 < self.sa_final_temperature_ratio < 1:
            raise ConfigError("sa_final_temperature_ratio must be in (0, 1)")
        for name in ("ga_population", "ga_tournament", "aco_ants", "aco_iterations"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.ga_generations < 0:
            raise ConfigError("ga_generations must be >= 0")
        for name in ("sa_initial_temperature", "sa_iterations_per_temperature", "sa_max_temperatures"):
            value = getattr(self, name)
            if value is not None and value < 0:
                raise ConfigError(f"{name} must be >= 0")

    def to_dict(self) -> Dict[str, Any]:
        return dataclasses.asdict(self)


def _build(cls, values: Dict[str, Any], where: str):
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(values) - known)
    if unknown:
        raise ConfigError(f"{where}: unknown keys {', '.join(unknown)}")
    try:
        return cls(**values)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"{where}: {e}") from None


@dataclass(frozen=True)
class Settings:
    plan: PlanConfig = field(default_factory=PlanConfig)
    solver: SolverParams = field(default_factory=SolverParams)


def settings_from_dict(doc: Dict[str, Any], where: str = "config") -> Settings:
    if not isinstance(doc, dict):
        raise ConfigError(f"{where}: expected a JSON object")
    doc = dict(doc)
    solver_doc = doc.pop("solver", {}) or {}
    if not isinstance(solver_doc, dict):
        raise ConfigError(f"{where}: 'solver' must be an object")
    return Settings(_build(PlanConfig, doc, where), _build(SolverParams, solver_doc, f"{where}.solver"))


def load_settings(path: Optional[str] = None, seed: Optional[int] = None,
                  workers: Optional[int] = None) -> Settings:
    """Load settings, applying .env / environment and explicit overrides."""
    load_dotenv(find_dotenv(usecwd=True))
    path = path or os.getenv("PROBEPATH_CONFIG")
    doc: Dict[str, Any] = {}
    if path:
        try:
            with open(path, encoding="utf-8") as f:
                doc = json.load(f)
        except OSError as e:
            raise ConfigError(f"cannot read config {path}: {e}") from e
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path}:{e.lineno}: invalid JSON ({e.msg})") from e
    settings = settings_from_dict(doc, path or "config")

    try:
        if seed is None and os.getenv("PROBEPATH_SEED"):
            seed = int(os.environ["PROBEPATH_SEED"])
        if workers is None and os.getenv("PROBEPATH_WORKERS"):
            workers = int(os.environ["PROBEPATH_WORKERS"])
    except ValueError:
        raise ConfigError("PROBEPATH_SEED / PROBEPATH_WORKERS must be integers") from None

    plan, solver = settings.plan, settings.solver
    if seed is not None:
        plan = dataclasses.replace(plan, seed=seed)
        solver = dataclasses.replace(solver, seed=seed)
    if workers is not None:
        plan = dataclasses.replace(plan, workers=workers)
    return Settings(plan, solver)


__all__ = ["PlanConfig", "SolverParams", "Settings", "settings_from_dict", "load_settings"]
