"""
Configuration objects for BSLab.

Two kinds of configuration live here: :class:`LogConfig` resolves the logging
runtime (as in a plain application), and :class:`RunConfig` captures every
parameter of a computation. ``RunConfig`` is read from and written to a
sectioned INI file so that a run can be reproduced from its ``params_hash``.
"""

from __future__ import annotations

import cmath
import configparser
import hashlib
import io
import json
import math
import os
import platform
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any

from .errors import ConfigError

# Environment variable names
ENV_LOG_LEVEL = "BSLAB_LOG_LEVEL"
ENV_LOG_DIR = "BSLAB_LOG_DIR"
ENV_LOG_ROTATION = "BSLAB_LOG_ROTATION"
ENV_LOG_RETENTION = "BSLAB_LOG_RETENTION"
ENV_LOG_ENCODING = "BSLAB_LOG_ENCODING"
ENV_LOG_AUDIT_ENABLED = "BSLAB_LOG_AUDIT_ENABLED"
ENV_THREADS = "BSLAB_THREADS"

# Default values
DEFAULT_LEVEL = "INFO"
DEFAULT_ROTATION = "10 MB"
DEFAULT_RETENTION = "7 days"
DEFAULT_ENCODING = "utf-8"
DEFAULT_APP_NAME = "bslab"

_TRUE_VALUES = {"1", "true", "yes", "on"}
_FALSE_VALUES = {"0", "false", "no", "off"}


def parse_env_bool(value: str | None, default: bool) -> bool:
    """Parse a boolean environment variable."""
    if value is None:
        return default

    normalized = value.strip().lower()
    if normalized in _TRUE_VALUES:
        return True
    if normalized in _FALSE_VALUES:
        return False
    return default


def get_default_log_dir(app_name: str = DEFAULT_APP_NAME) -> Path:
    """
    Return the default log directory for the current platform.

    Paths:
    - Windows: %APPDATA%\\{app_name}\\logs
    - macOS: ~/Library/Application Support/{app_name}/logs
    - Linux/Unix: ~/.local/share/{app_name}/logs
    """
    system = platform.system()

    if system == "Windows":
        appdata = os.environ.get("APPDATA")
        if appdata:
            return Path(appdata) / app_name / "logs"
        return Path.home() / "AppData" / "Roaming" / app_name / "logs"

    if system == "Darwin":
        return Path.home() / "Library" / "Application Support" / app_name / "logs"

    xdg_data_home = os.environ.get("XDG_DATA_HOME")
    if xdg_data_home:
        return Path(xdg_data_home) / app_name / "logs"
    return Path.home() / ".local" / "share" / app_name / "logs"


def resolve_threads(value: int | None = None) -> int:
    """
    Return the worker cap for parallel sections.

    An explicit value wins, then ``BSLAB_THREADS``, then the CPU count.
    """
    if value is not None:
        if value < 1:
            raise ConfigError(f"threads must be >= 1, got {value}")
        return value

    raw = os.environ.get(ENV_THREADS)
    if raw is not None and raw.strip():
        try:
            threads = int(raw)
        except ValueError as exc:
            raise ConfigError(f"{ENV_THREADS} must be an integer, got {raw!r}") from exc
        if threads < 1:
            raise ConfigError(f"{ENV_THREADS} must be >= 1, got {threads}")
        return threads

    return os.cpu_count() or 1


@dataclass(slots=True)
class LogConfig:
    """Resolved logging configuration used by the runtime."""

    app_name: str = DEFAULT_APP_NAME
    log_dir: Path | str | None = None
    level: str = DEFAULT_LEVEL
    rotation: str = DEFAULT_ROTATION
    retention: str = DEFAULT_RETENTION
    encoding: str = DEFAULT_ENCODING
    console_output: bool = True
    file_output: bool = True
    audit_enabled: bool = True

    def __post_init__(self) -> None:
        if self.log_dir is None:
            self.log_dir = get_default_log_dir(self.app_name)
        else:
            self.log_dir = Path(os.path.normpath(os.fspath(self.log_dir)))

        self.level = self.level.upper()

    @property
    def audit_log_dir(self) -> Path:
        return Path(self.log_dir) / "audit"

    def to_dict(self) -> dict[str, Any]:
        return {
            "app_name": self.app_name,
            "log_dir": str(self.log_dir),
            "level": self.level,
            "rotation": self.rotation,
            "retention": self.retention,
            "encoding": self.encoding,
            "console_output": self.console_output,
            "file_output": self.file_output,
            "audit_enabled": self.audit_enabled,
        }

    def ensure_log_dirs(self) -> None:
        """
        Ensure the configured log directory exists.

        If directory creation fails, fall back to the system temporary directory.
        """
        log_dir = Path(self.log_dir)
        try:
            log_dir.mkdir(parents=True, exist_ok=True)
            if self.audit_enabled:
                self.audit_log_dir.mkdir(parents=True, exist_ok=True)
        except Exception:
            import tempfile

            fallback = Path(tempfile.gettempdir()) / self.app_name / "logs"
            fallback.mkdir(parents=True, exist_ok=True)
            object.__setattr__(self, "log_dir", fallback)
            if self.audit_enabled:
                self.audit_log_dir.mkdir(parents=True, exist_ok=True)

    @classmethod
    def from_env(cls, app_name: str | None = None) -> LogConfig:
        """Build a configuration object from environment variables."""
        resolved_app_name = app_name or DEFAULT_APP_NAME

        log_dir_env = os.environ.get(ENV_LOG_DIR)
        log_dir: Path | str | None
        if log_dir_env:
            log_dir = Path(os.path.normpath(log_dir_env))
        else:
            log_dir = get_default_log_dir(resolved_app_name)

        return cls(
            app_name=resolved_app_name,
            log_dir=log_dir,
            level=os.environ.get(ENV_LOG_LEVEL, DEFAULT_LEVEL),
            rotation=os.environ.get(ENV_LOG_ROTATION, DEFAULT_ROTATION),
            retention=os.environ.get(ENV_LOG_RETENTION, DEFAULT_RETENTION),
            encoding=os.environ.get(ENV_LOG_ENCODING, DEFAULT_ENCODING),
            audit_enabled=parse_env_bool(
                os.environ.get(ENV_LOG_AUDIT_ENABLED), True
            ),
        )


# ---------------------------------------------------------------------------
# Run configuration
# ---------------------------------------------------------------------------


def _kind(kind: str) -> dict[str, str]:
    return {"kind": kind}


def _parse_complex(text: str) -> complex:
    cleaned = text.strip().replace(" ", "").replace("i", "j")
    if not cleaned:
        raise ValueError("empty complex literal")
    return complex(cleaned)


def _split(text: str) -> list[str]:
    return [item.strip() for item in text.split(",") if item.strip()]


def _parse_value(kind: str, text: str) -> Any:
    text = text.strip()
    if kind == "int":
        return int(text)
    if kind == "optint":
        return None if text.lower() in {"", "none", "auto"} else int(text)
    if kind == "float":
        return float(text)
    if kind == "str":
        return text
    if kind == "floats":
        return tuple(float(item) for item in _split(text))
    if kind == "complexes":
        return tuple(_parse_complex(item) for item in _split(text))
    if kind == "strs":
        return tuple(_split(text))
    raise ConfigError(f"unknown value kind {kind!r}")


def _format_value(kind: str, value: Any) -> str:
    if kind == "optint":
        return "auto" if value is None else str(value)
    if kind in {"int", "str"}:
        return str(value)
    if kind == "float":
        return repr(float(value))
    if kind == "floats":
        return ", ".join(repr(float(item)) for item in value)
    if kind == "complexes":
        return ", ".join(repr(complex(item)) for item in value)
    if kind == "strs":
        return ", ".join(value)
    raise ConfigError(f"unknown value kind {kind!r}")


def _jsonable(kind: str, value: Any) -> Any:
    if kind == "complexes":
        return [[item.real, item.imag] for item in value]
    if kind in {"floats", "strs"}:
        return list(value)
    return value


class _Section:
    """Mixin giving a dataclass a typed INI section representation."""

    def to_section(self) -> dict[str, str]:
        return {
            item.name: _format_value(item.metadata["kind"], getattr(self, item.name))
            for item in fields(self)  # type: ignore[arg-type]
        }

    def to_dict(self) -> dict[str, Any]:
        return {
            item.name: _jsonable(item.metadata["kind"], getattr(self, item.name))
            for item in fields(self)  # type: ignore[arg-type]
        }

    @classmethod
    def from_section(cls, section: Mapping[str, str], name: str) -> Any:
        known = {item.name: item for item in fields(cls)}  # type: ignore[arg-type]
        values: dict[str, Any] = {}
        for key, text in section.items():
            if key not in known:
                raise ConfigError(f"unknown key {name}.{key}")
            try:
                values[key] = _parse_value(known[key].metadata["kind"], text)
            except ValueError as exc:
                raise ConfigError(f"cannot parse {name}.{key} = {text!r}: {exc}") from exc
        return cls(**values)


@dataclass(slots=True)
class NumericsConfig(_Section):
    """Discretization and tolerance settings shared by all computations."""

    quad_n: int = field(default=200, metadata=_kind("int"))
    ell_eps: float = field(default=1e-4, metadata=_kind("float"))
    L_max: int = field(default=160, metadata=_kind("int"))
    T_max: float = field(default=60.0, metadata=_kind("float"))
    boundary_points: int = field(default=2048, metadata=_kind("int"))
    tail_order: int = field(default=2, metadata=_kind("int"))
    tol_zero: float = field(default=1e-10, metadata=_kind("float"))
    tol_edge: float = field(default=1e-8, metadata=_kind("float"))
    delta_floor: float = field(default=1e-3, metadata=_kind("float"))
    max_depth: int = field(default=8, metadata=_kind("int"))
    diff_step: float = field(default=1e-5, metadata=_kind("float"))
    contour_panels: int = field(default=6, metadata=_kind("int"))
    contour_order: int = field(default=8, metadata=_kind("int"))
    nmax: int = field(default=8, metadata=_kind("int"))
    threads: int | None = field(default=None, metadata=_kind("optint"))

    def __post_init__(self) -> None:
        for name in ("ell_eps", "T_max", "tol_zero", "tol_edge", "delta_floor", "diff_step"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise ConfigError(f"numerics.{name} must be positive, got {value}")
        if self.quad_n < 2:
            raise ConfigError(f"numerics.quad_n must be >= 2, got {self.quad_n}")
        if self.L_max < 0:
            raise ConfigError(f"numerics.L_max must be >= 0, got {self.L_max}")
        if self.boundary_points < 4 or self.boundary_points % 2:
            raise ConfigError(
                f"numerics.boundary_points must be even and >= 4, got {self.boundary_points}"
            )
        if self.contour_panels < 1 or self.contour_order < 2:
            raise ConfigError("numerics.contour_panels >= 1 and contour_order >= 2 required")
        if self.max_depth < 0 or self.nmax < 0 or self.tail_order < 0:
            raise ConfigError("numerics.max_depth, nmax and tail_order must be >= 0")
        if self.threads is not None and self.threads < 1:
            raise ConfigError(f"numerics.threads must be >= 1, got {self.threads}")

    @property
    def resolved_threads(self) -> int:
        return resolve_threads(self.threads)


@dataclass(slots=True)
class GridConfig(_Section):
    """Wave-number grid for scans and envelope checks."""

    k_re: tuple[float, ...] = field(default=(-5.0, 5.0, 20.0), metadata=_kind("floats"))
    k_im: tuple[float, ...] = field(default=(0.0, 5.0, 10.0), metadata=_kind("floats"))
    k_list: tuple[complex, ...] = field(default=(), metadata=_kind("complexes"))

    def __post_init__(self) -> None:
        if self.k_list:
            return
        for name in ("k_re", "k_im"):
            spec = getattr(self, name)
            if len(spec) != 3 or int(spec[2]) < 1 or spec[2] != int(spec[2]):
                raise ConfigError(f"grid.{name} must be 'start, stop, count' with count >= 1")

    def k_values(self) -> list[complex]:
        """Grid points, imaginary part outermost, in a fixed order."""
        if self.k_list:
            return list(self.k_list)

        def axis(spec: tuple[float, ...]) -> list[float]:
            start, stop, count = spec[0], spec[1], int(spec[2])
            if count == 1:
                return [start]
            step = (stop - start) / (count - 1)
            return [start + i * step for i in range(count)]

        return [complex(re, im) for im in axis(self.k_im) for re in axis(self.k_re)]


def _default_probes() -> tuple[complex, ...]:
    return tuple(3.0 * cmath.exp(1j * math.pi * (j + 0.5) / 8) for j in range(8))


@dataclass(slots=True)
class TaskConfig(_Section):
    """Subcommand parameters."""

    rect: tuple[float, ...] = field(default=(-4.0, 4.0, 0.01, 4.0), metadata=_kind("floats"))
    identities: tuple[str, ...] = field(default=("tr12",), metadata=_kind("strs"))
    probes: tuple[complex, ...] = field(default_factory=_default_probes, metadata=_kind("complexes"))
    tre1_points: tuple[complex, ...] = field(default=(1.5j, 2j, 1 + 2j), metadata=_kind("complexes"))
    C2: float = field(default=1.0, metadata=_kind("float"))
    taus: tuple[float, ...] = field(default=(20.0, 40.0, 80.0), metadata=_kind("floats"))
    tol_tr12: float = field(default=1e-3, metadata=_kind("float"))
    tol_trj: float = field(default=1e-2, metadata=_kind("float"))
    tol_tre1: float = field(default=1e-3, metadata=_kind("float"))
    tol_factorization: float = field(default=1e-3, metadata=_kind("float"))
    envelope_slack: float = field(default=1e-6, metadata=_kind("float"))

    def __post_init__(self) -> None:
        if len(self.rect) != 4:
            raise ConfigError("task.rect must be 're_min, re_max, im_min, im_max'")
        re_min, re_max, im_min, im_max = self.rect
        if not (re_min < re_max and 0 < im_min < im_max):
            raise ConfigError(f"task.rect must be a non-degenerate rectangle in C+, got {self.rect}")
        if self.C2 <= 0:
            raise ConfigError(f"task.C2 must be positive, got {self.C2}")
        if any(k.imag < 0.1 for k in self.tre1_points):
            raise ConfigError("task.tre1_points must satisfy Im k >= 0.1")
        for name in ("tol_tr12", "tol_trj", "tol_tre1", "tol_factorization", "envelope_slack"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"task.{name} must be positive")


@dataclass(slots=True)
class OutputConfig(_Section):
    """Artifact locations, relative to ``directory``."""

    directory: str = field(default=".", metadata=_kind("str"))
    scan_csv: str = field(default="scan.csv", metadata=_kind("str"))
    zeros_json: str = field(default="zeros.json", metadata=_kind("str"))
    report_json: str = field(default="report.json", metadata=_kind("str"))
    factorization_json: str = field(default="factorization.json", metadata=_kind("str"))
    boundary_csv: str = field(default="boundary.csv", metadata=_kind("str"))

    def path(self, name: str) -> Path:
        return Path(self.directory) / getattr(self, name)


_SECTIONS = ("numerics", "grid", "task", "output")
_SECTION_TYPES: dict[str, type[_Section]] = {
    "numerics": NumericsConfig,
    "grid": GridConfig,
    "task": TaskConfig,
    "output": OutputConfig,
}


@dataclass(slots=True)
class RunConfig:
    """Complete, reproducible parameter set of one BSLab run."""

    potential: dict[str, str] = field(
        default_factory=lambda: {"profile": "gaussian", "g_re": "0.0", "g_im": "0.0"}
    )
    numerics: NumericsConfig = field(default_factory=NumericsConfig)
    grid: GridConfig = field(default_factory=GridConfig)
    task: TaskConfig = field(default_factory=TaskConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    def __post_init__(self) -> None:
        self.potential = {key: str(value).strip() for key, value in sorted(self.potential.items())}
        if "profile" not in self.potential:
            raise ConfigError("potential.profile is required")

    # -- serialization -----------------------------------------------------

    def _parser(self) -> configparser.ConfigParser:
        parser = configparser.ConfigParser(interpolation=None)
        parser.optionxform = str  # type: ignore[assignment,method-assign]
        parser["potential"] = dict(self.potential)
        for name in _SECTIONS:
            parser[name] = getattr(self, name).to_section()
        return parser

    def to_ini(self) -> str:
        buffer = io.StringIO()
        self._parser().write(buffer)
        return buffer.getvalue()

    def to_dict(self) -> dict[str, Any]:
        data: dict[str, Any] = {"potential": dict(self.potential)}
        for name in _SECTIONS:
            data[name] = getattr(self, name).to_dict()
        return data

    @property
    def params_hash(self) -> str:
        """Hash of everything that influences numbers (not paths or threads)."""
        data = self.to_dict()
        data.pop("output")
        data["numerics"].pop("threads")
        canonical = json.dumps(data, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]

    @classmethod
    def _from_parser(cls, parser: configparser.ConfigParser) -> RunConfig:
        unknown = set(parser.sections()) - {"potential", *_SECTIONS}
        if unknown:
            raise ConfigError(f"unknown config section(s): {', '.join(sorted(unknown))}")
        if not parser.has_section("potential"):
            raise ConfigError("config is missing the [potential] section")

        kwargs: dict[str, Any] = {"potential": dict(parser["potential"])}
        for name in _SECTIONS:
            if parser.has_section(name):
                kwargs[name] = _SECTION_TYPES[name].from_section(dict(parser[name]), name)
        return cls(**kwargs)

    @classmethod
    def from_string(cls, text: str) -> RunConfig:
        parser = configparser.ConfigParser(interpolation=None)
        parser.optionxform = str  # type: ignore[assignment,method-assign]
        try:
            parser.read_string(text)
        except configparser.Error as exc:
            raise ConfigError(f"malformed config: {exc}") from exc
        return cls._from_parser(parser)

    @classmethod
    def from_file(cls, path: str | Path) -> RunConfig:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_string(text)

    def with_overrides(self, assignments: Iterable[str]) -> RunConfig:
        """Return a copy with ``section.key=value`` assignments applied."""
        parser = self._parser()
        for assignment in assignments:
            target, sep, value = assignment.partition("=")
            section, dot, key = target.strip().partition(".")
            if not sep or not dot or not key:
                raise ConfigError(f"override must look like section.key=value, got {assignment!r}")
            if section not in parser:
                raise ConfigError(f"unknown config section {section!r}")
            parser[section][key] = value.strip()
        return self._from_parser(parser)

    def replace(self, **changes: Any) -> RunConfig:
        return replace(self, **changes)


__all__ = [
    "LogConfig",
    "NumericsConfig",
    "GridConfig",
    "TaskConfig",
    "OutputConfig",
    "RunConfig",
    "resolve_threads",
    "parse_env_bool",
    "get_default_log_dir",
]
