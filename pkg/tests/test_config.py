from pathlib import Path

import pytest

from bslab import LogConfig
from bslab.config import (
    ENV_LOG_AUDIT_ENABLED,
    ENV_LOG_DIR,
    ENV_LOG_ENCODING,
    ENV_LOG_LEVEL,
    ENV_LOG_RETENTION,
    ENV_LOG_ROTATION,
    ENV_THREADS,
    GridConfig,
    NumericsConfig,
    RunConfig,
    TaskConfig,
    get_default_log_dir,
    resolve_threads,
)
from bslab.errors import ConfigError

SAMPLE_INI = """
[potential]
profile = gaussian
g_re = 1.0
g_im = 0.5

[numerics]
quad_n = 64
T_max = 12.5
threads = 2

[grid]
k_list = 1+1i, 2+0.5i, 3i

[task]
identities = tr12, trj:1, tre1@2i
"""


def test_get_default_log_dir_includes_app_name():
    log_dir = get_default_log_dir("demo-app")

    assert "demo-app" in str(log_dir)
    assert "logs" in str(log_dir)


def test_log_config_from_env(monkeypatch, tmp_path: Path):
    monkeypatch.setenv(ENV_LOG_LEVEL, "DEBUG")
    monkeypatch.setenv(ENV_LOG_DIR, str(tmp_path))
    monkeypatch.setenv(ENV_LOG_ROTATION, "5 MB")
    monkeypatch.setenv(ENV_LOG_RETENTION, "14 days")
    monkeypatch.setenv(ENV_LOG_ENCODING, "utf-16")
    monkeypatch.setenv(ENV_LOG_AUDIT_ENABLED, "0")

    config = LogConfig.from_env(app_name="demo")

    assert config.app_name == "demo"
    assert config.log_dir == tmp_path
    assert config.level == "DEBUG"
    assert config.rotation == "5 MB"
    assert config.retention == "14 days"
    assert config.encoding == "utf-16"
    assert config.audit_enabled is False


def test_log_config_ensure_log_dirs_falls_back(monkeypatch, tmp_path: Path):
    invalid_dir = tmp_path / "invalid" / "logs"
    config = LogConfig(app_name="demo", log_dir=invalid_dir)

    original_mkdir = Path.mkdir

    def fake_mkdir(self, *args, **kwargs):
        if self == invalid_dir:
            raise PermissionError("denied")
        return original_mkdir(self, *args, **kwargs)

    monkeypatch.setattr(Path, "mkdir", fake_mkdir)

    config.ensure_log_dirs()

    assert Path(config.log_dir).exists()
    assert "logs" in str(config.log_dir)


def test_resolve_threads_prefers_explicit_then_env(monkeypatch):
    monkeypatch.setenv(ENV_THREADS, "3")

    assert resolve_threads(5) == 5
    assert resolve_threads() == 3
    assert NumericsConfig().resolved_threads == 3


@pytest.mark.parametrize("raw", ["zero", "0", "-2"])
def test_resolve_threads_rejects_bad_env(monkeypatch, raw):
    monkeypatch.setenv(ENV_THREADS, raw)

    with pytest.raises(ConfigError):
        resolve_threads()


@pytest.mark.parametrize(
    "kwargs",
    [
        {"ell_eps": 0.0},
        {"tol_zero": -1e-10},
        {"quad_n": 1},
        {"boundary_points": 101},
        {"threads": 0},
    ],
)
def test_numerics_config_rejects_invalid_values(kwargs):
    with pytest.raises(ConfigError):
        NumericsConfig(**kwargs)


def test_task_config_rejects_rect_touching_real_axis():
    with pytest.raises(ConfigError):
        TaskConfig(rect=(-1.0, 1.0, 0.0, 2.0))


def test_grid_k_values_iterate_real_part_fastest():
    grid = GridConfig(k_re=(-1.0, 1.0, 3.0), k_im=(0.5, 1.5, 2.0))

    assert grid.k_values() == [
        complex(-1, 0.5), complex(0, 0.5), complex(1, 0.5),
        complex(-1, 1.5), complex(0, 1.5), complex(1, 1.5),
    ]


def test_grid_explicit_list_wins():
    grid = GridConfig(k_list=(1 + 1j, 3j))

    assert grid.k_values() == [1 + 1j, 3j]


def test_run_config_parses_complex_literals_with_i():
    config = RunConfig.from_string(SAMPLE_INI)

    assert config.grid.k_list == (1 + 1j, 2 + 0.5j, 3j)
    assert config.task.identities == ("tr12", "trj:1", "tre1@2i")
    assert config.numerics.quad_n == 64
    assert config.numerics.threads == 2
    assert config.potential["g_im"] == "0.5"


def test_run_config_round_trip_is_lossless():
    config = RunConfig.from_string(SAMPLE_INI)

    assert RunConfig.from_string(config.to_ini()) == config
    assert RunConfig.from_string(RunConfig().to_ini()) == RunConfig()


def test_run_config_from_file(tmp_path: Path):
    path = tmp_path / "run.ini"
    path.write_text(SAMPLE_INI, encoding="utf-8")

    assert RunConfig.from_file(path) == RunConfig.from_string(SAMPLE_INI)


def test_run_config_overrides():
    config = RunConfig.from_string(SAMPLE_INI).with_overrides(
        ["numerics.quad_n=80", "task.C2 = 2.5", "potential.g_re=2"]
    )

    assert config.numerics.quad_n == 80
    assert config.task.C2 == 2.5
    assert config.potential["g_re"] == "2"


@pytest.mark.parametrize(
    "override",
    ["numerics.quad_n", "nosection.key=1", "numerics.unknown=1", "numerics.quad_n=abc"],
)
def test_run_config_bad_overrides_raise_config_error(override):
    with pytest.raises(ConfigError):
        RunConfig().with_overrides([override])


def test_run_config_rejects_unknown_section():
    with pytest.raises(ConfigError, match="unknown config section"):
        RunConfig.from_string(SAMPLE_INI + "\n[extra]\nkey = 1\n")


def test_run_config_requires_potential_section():
    with pytest.raises(ConfigError):
        RunConfig.from_string("[numerics]\nquad_n = 10\n")


def test_run_config_missing_file_is_config_error(tmp_path: Path):
    with pytest.raises(ConfigError):
        RunConfig.from_file(tmp_path / "missing.ini")


def test_params_hash_ignores_output_paths_and_threads():
    base = RunConfig.from_string(SAMPLE_INI)
    moved = base.with_overrides(["output.directory=/elsewhere", "numerics.threads=7"])
    changed = base.with_overrides(["numerics.quad_n=65"])

    assert len(base.params_hash) == 16
    assert moved.params_hash == base.params_hash
    assert changed.params_hash != base.params_hash
