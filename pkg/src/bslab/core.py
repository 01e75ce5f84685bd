"""
Logging runtime for BSLab.

Library modules log through ``loguru.logger`` and stay silent until
:func:`init_logging` enables the ``bslab`` namespace. The command-line front end
uses the :data:`log` facade for progress messages and the :data:`audit` ledger to
append every emitted report as one JSON line.
"""

from __future__ import annotations

import json
import logging
import sys
from datetime import datetime
from pathlib import Path
from typing import Any

from loguru import logger as _loguru_logger

from .config import DEFAULT_APP_NAME, LogConfig

DEFAULT_CONSOLE_FORMAT = (
    "<green>{time:YYYY-MM-DD HH:mm:ss.SSS}</green> "
    "| <level>{level: <8}</level> "
    "| <cyan>{name}</cyan>:<cyan>{function}</cyan>:<cyan>{line}</cyan> "
    "| <level>{message}</level>"
)
DEFAULT_FILE_FORMAT = (
    "{time:YYYY-MM-DD HH:mm:ss.SSS} "
    "| {level: <8} "
    "| {name}:{function}:{line} "
    "| {message}"
)

_AUDIT_MARKER = "_bslab_audit"
_PACKAGE = "bslab"


class LoggingNotInitializedError(RuntimeError):
    """Raised when logging is used before init_logging()."""


def _is_audit_record(record: dict[str, Any]) -> bool:
    return bool(record["extra"].get(_AUDIT_MARKER))


def _is_core_record(record: dict[str, Any]) -> bool:
    return not _is_audit_record(record)


class LogFacade:
    """Progress and diagnostic messages of the application layer."""

    def __init__(self, manager: LoggingManager, *, bound_logger: Any | None = None) -> None:
        self._manager = manager
        self._bound_logger = bound_logger

    def _emit(self, method_name: str, message: str, *args: Any, **kwargs: Any) -> None:
        self._manager.require_initialized()
        logger = self._bound_logger or self._manager.base_logger
        # depth=2 points the record at the caller of debug()/info()/...
        getattr(logger.opt(depth=2), method_name)(message, *args, **kwargs)

    def debug(self, message: str, *args: Any, **kwargs: Any) -> None:
        self._emit("debug", message, *args, **kwargs)

    def info(self, message: str, *args: Any, **kwargs: Any) -> None:
        self._emit("info", message, *args, **kwargs)

    def success(self, message: str, *args: Any, **kwargs: Any) -> None:
        self._emit("success", message, *args, **kwargs)

    def warning(self, message: str, *args: Any, **kwargs: Any) -> None:
        self._emit("warning", message, *args, **kwargs)

    def error(self, message: str, *args: Any, **kwargs: Any) -> None:
        self._emit("error", message, *args, **kwargs)

    def exception(self, message: str, *args: Any, **kwargs: Any) -> None:
        self._emit("exception", message, *args, **kwargs)

    def bind(self, **kwargs: Any) -> LogFacade:
        self._manager.require_initialized()
        base = self._bound_logger or self._manager.base_logger
        return LogFacade(self._manager, bound_logger=base.bind(**kwargs))


class AuditFacade:
    """
    Append-only ledger of computed results.

    Each call writes ``{timestamp, level, level_name, action, data}`` to the
    audit JSONL sink. ``data`` always contains ``params_hash`` so that an entry
    can be matched to the configuration that produced it.
    """

    _LEVEL_TO_VALUE = {
        "INFO": logging.INFO,
        "SUCCESS": 25,
        "WARNING": logging.WARNING,
        "ERROR": logging.ERROR,
    }

    # verdict strings of trace reports, mapped to ledger levels
    _VERDICT_LEVEL = {"pass": "SUCCESS", "inconclusive": "WARNING", "fail": "ERROR"}

    def __init__(self, manager: LoggingManager) -> None:
        self._manager = manager

    @property
    def enabled(self) -> bool:
        config = self._manager.config
        return config is not None and config.audit_enabled

    def _resolve_logger(self) -> Any:
        config = self._manager.require_initialized()
        if not config.audit_enabled:
            raise RuntimeError("Audit logging is disabled.")
        return self._manager.audit_logger

    def _log(self, level_name: str, action: str, params_hash: str, **kwargs: Any) -> None:
        payload: dict[str, Any] = {"action": action, "params_hash": params_hash}
        payload.update(kwargs)
        record = {
            "timestamp": datetime.now().isoformat(),
            "level": self._LEVEL_TO_VALUE[level_name],
            "level_name": level_name,
            "action": action,
            "data": payload,
        }
        message = json.dumps(record, ensure_ascii=False, default=str)
        self._resolve_logger().opt(depth=2).log(level_name, message)

    def info(self, action: str, params_hash: str, **kwargs: Any) -> None:
        self._log("INFO", action, params_hash, **kwargs)

    def success(self, action: str, params_hash: str, **kwargs: Any) -> None:
        self._log("SUCCESS", action, params_hash, **kwargs)

    def warning(self, action: str, params_hash: str, **kwargs: Any) -> None:
        self._log("WARNING", action, params_hash, **kwargs)

    def error(self, action: str, params_hash: str, **kwargs: Any) -> None:
        self._log("ERROR", action, params_hash, **kwargs)

    def verdict(self, action: str, params_hash: str, verdict: str, **kwargs: Any) -> None:
        """Record a checked result at the level its verdict implies."""
        level_name = self._VERDICT_LEVEL.get(verdict)
        if level_name is None:
            raise ValueError(f"unknown verdict {verdict!r}")
        self._log(level_name, action, params_hash, verdict=verdict, **kwargs)


class LoggingManager:
    """Owns the sinks and the initialized state of the runtime."""

    def __init__(self) -> None:
        self._logger = _loguru_logger
        self._config: LogConfig | None = None

    @property
    def base_logger(self) -> Any:
        return self._logger

    @property
    def audit_logger(self) -> Any:
        return self._logger.bind(**{_AUDIT_MARKER: True})

    @property
    def config(self) -> LogConfig | None:
        return self._config

    def require_initialized(self) -> LogConfig:
        if self._config is None:
            raise LoggingNotInitializedError(
                "BSLab logging is not initialized. Call init_logging() at program startup."
            )
        return self._config

    def _configure_sinks(self, config: LogConfig) -> None:
        self._logger.remove()

        if config.console_output and sys.stderr is not None:
            # stderr keeps stdout free for reports piped by the CLI
            self._logger.add(
                sys.stderr,
                level=config.level,
                format=DEFAULT_CONSOLE_FORMAT,
                enqueue=True,
                backtrace=True,
                diagnose=False,
                filter=_is_core_record,
            )

        if config.file_output:
            log_file = Path(config.log_dir) / f"{config.app_name}_{{time:YYYY-MM-DD}}.log"
            self._logger.add(
                str(log_file),
                level=config.level,
                format=DEFAULT_FILE_FORMAT,
                rotation=config.rotation,
                retention=config.retention,
                encoding=config.encoding,
                enqueue=True,
                backtrace=True,
                diagnose=False,
                compression="zip",
                filter=_is_core_record,
            )

        if config.audit_enabled:
            audit_file = config.audit_log_dir / "audit_{time:YYYY-MM-DD}.jsonl"
            self._logger.add(
                str(audit_file),
                level="INFO",
                format="{message}",
                rotation=config.rotation,
                retention=config.retention,
                encoding=config.encoding,
                enqueue=True,
                catch=True,
                filter=_is_audit_record,
            )

    def init_logging(self, config: LogConfig) -> None:
        config.ensure_log_dirs()
        self._configure_sinks(config)
        self._logger.enable(_PACKAGE)
        self._config = config

    def shutdown_logging(self) -> None:
        self._logger.remove()
        self._logger.disable(_PACKAGE)
        self._config = None


_logging_manager = LoggingManager()
log = LogFacade(_logging_manager)
audit = AuditFacade(_logging_manager)


def init_logging(
    app_name: str = DEFAULT_APP_NAME,
    *,
    level: str | None = None,
    log_dir: str | Path | None = None,
    console_output: bool = True,
    file_output: bool = True,
    audit_enabled: bool | None = None,
) -> LogConfig:
    """
    Configure sinks and enable library logging.

    Unset arguments fall back to the ``BSLAB_LOG_*`` environment variables.
    Calling it again replaces the previous runtime.
    """
    env_config = LogConfig.from_env(app_name=app_name)
    config = LogConfig(
        app_name=app_name,
        log_dir=log_dir if log_dir is not None else env_config.log_dir,
        level=level if level is not None else env_config.level,
        rotation=env_config.rotation,
        retention=env_config.retention,
        encoding=env_config.encoding,
        console_output=console_output,
        file_output=file_output,
        audit_enabled=env_config.audit_enabled if audit_enabled is None else audit_enabled,
    )
    _logging_manager.init_logging(config)
    return config


def shutdown_logging() -> None:
    _logging_manager.shutdown_logging()


def current_config() -> LogConfig | None:
    """The active configuration, or None before init_logging()."""
    return _logging_manager.config


__all__ = [
    "LoggingNotInitializedError",
    "LogFacade",
    "AuditFacade",
    "init_logging",
    "shutdown_logging",
    "current_config",
    "log",
    "audit",
]
