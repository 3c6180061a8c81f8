"""Tests for settings loading: defaults, JSON config, environment and .env overrides."""
import json

import pytest

from probepath.config import PlanConfig, SolverParams, load_settings, settings_from_dict
from probepath.errors import ConfigError

ENV_VARS = ("PROBEPATH_CONFIG", "PROBEPATH_SEED", "PROBEPATH_WORKERS")


@pytest.fixture
def clean_env(monkeypatch):
    # set-then-delete registers a teardown that also removes values a .env file loads later
    for name in ENV_VARS:
        monkeypatch.setenv(name, "")
        monkeypatch.delenv(name)
    return monkeypatch


def test_defaults():
    cfg = PlanConfig()
    assert (cfg.element_size, cfg.clearance, cfg.safety_distance, cfg.step, cfg.max_steps) == (4, 4, 5, 10, 10)
    assert (cfg.angular_speed, cfg.pause_time, cfg.velocity, cfg.local_time_cap) == (1, 0.3, 85, 200)
    assert cfg.eps == 4.0
    assert PlanConfig(element_size=6.0).eps == 6.0
    assert PlanConfig(search_margin=9.0).eps == 9.0


@pytest.mark.parametrize(
    "kwargs",
    [
        {"clearance": 0},
        {"velocity": -1},
        {"max_steps": 0},
        {"search_margin": 2.0},
        {"a_inf": 100.0},
        {"theta_max": 0},
        {"workers": 0},
    ],
)
def test_invalid_plan_config(kwargs):
    with pytest.raises(ConfigError):
        PlanConfig(**kwargs)


@pytest.mark.parametrize(
    "kwargs",
    [{"sa_cooling_rate": 1.0}, {"ga_population": 0}, {"aco_evaporation": 0}, {"sa_iterations_per_temperature": -1}],
)
def test_invalid_solver_params(kwargs):
    with pytest.raises(ConfigError):
        SolverParams(**kwargs)


def test_settings_from_dict():
    settings = settings_from_dict({"velocity": 100, "origin": [0, 0, 50], "solver": {"ga_population": 10}})
    assert settings.plan.velocity == 100
    assert settings.plan.origin == (0.0, 0.0, 50.0)
    assert settings.solver.ga_population == 10


@pytest.mark.parametrize("doc", [{"speed": 1}, {"solver": {"temperature": 5}}, {"solver": 3}, []])
def test_settings_from_dict_rejects(doc):
    with pytest.raises(ConfigError):
        settings_from_dict(doc)


@pytest.mark.parametrize("origin", [["x", 0, 0], [None, 0, 0], 5])
def test_unusable_origin_is_a_config_error(origin):
    with pytest.raises(ConfigError, match=r"^cfg\.json: "):
        settings_from_dict({"origin": origin}, where="cfg.json")


class TestLoadSettings:
    def test_no_sources(self, clean_env, tmp_path):
        clean_env.chdir(tmp_path)
        settings = load_settings()
        assert settings.plan == PlanConfig()
        assert settings.solver == SolverParams()

    def test_config_file_and_overrides(self, clean_env, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"seed": 3, "workers": 2, "solver": {"seed": 3}}), encoding="utf-8")
        settings = load_settings(str(path))
        assert (settings.plan.seed, settings.plan.workers, settings.solver.seed) == (3, 2, 3)
        settings = load_settings(str(path), seed=9, workers=1)
        assert (settings.plan.seed, settings.plan.workers, settings.solver.seed) == (9, 1, 9)

    def test_environment(self, clean_env, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"velocity": 50}), encoding="utf-8")
        clean_env.setenv("PROBEPATH_CONFIG", str(path))
        clean_env.setenv("PROBEPATH_SEED", "17")
        settings = load_settings()
        assert settings.plan.velocity == 50
        assert settings.plan.seed == settings.solver.seed == 17
        assert load_settings(seed=4).plan.seed == 4

    def test_dotenv_file(self, clean_env, tmp_path):
        (tmp_path / ".env").write_text("PROBEPATH_SEED=5\nPROBEPATH_WORKERS=4\n", encoding="utf-8")
        clean_env.chdir(tmp_path)
        settings = load_settings()
        assert settings.plan.seed == 5
        assert settings.plan.workers == 4

    def test_non_integer_environment(self, clean_env, tmp_path):
        clean_env.chdir(tmp_path)
        clean_env.setenv("PROBEPATH_WORKERS", "many")
        with pytest.raises(ConfigError, match="integers"):
            load_settings()

    def test_missing_config(self, clean_env, tmp_path):
        with pytest.raises(ConfigError, match="cannot read"):
            load_settings(str(tmp_path / "none.json"))

    def test_invalid_json_cites_line(self, clean_env, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text('{\n  "velocity": ,\n}', encoding="utf-8")
        with pytest.raises(ConfigError, match=r"cfg\.json:2:"):
            load_settings(str(path))
