"""
Utility helpers for BSLab.
"""

from __future__ import annotations

import functools
import os
import tempfile
from collections.abc import Callable, Iterable, Sequence
from pathlib import Path
from typing import Any, TypeVar, overload

import joblib
from loguru import logger

F = TypeVar("F", bound=Callable[..., Any])
T = TypeVar("T")
R = TypeVar("R")


def _default_exception_logger(message: str) -> None:
    logger.opt(depth=2, exception=True).error(message)


@overload
def catch_exceptions(func: F) -> F: ...


@overload
def catch_exceptions(
    *,
    logger_func: Callable[..., Any] | None = None,
    reraise: bool = True,
    message: str | None = None,
) -> Callable[[F], F]: ...


def catch_exceptions(
    func: F | None = None,
    *,
    logger_func: Callable[..., Any] | None = None,
    reraise: bool = True,
    message: str | None = None,
) -> F | Callable[[F], F]:
    """
    Decorate a function to log any exception raised during execution.

    With ``reraise=False`` the wrapper returns ``None`` after logging.
    """
    resolved_logger = logger_func or _default_exception_logger

    def decorator(target: F) -> F:
        @functools.wraps(target)
        def wrapper(*args: Any, **kwargs: Any) -> Any:
            try:
                return target(*args, **kwargs)
            except Exception as exc:
                if message is None:
                    error_message = f"{target.__name__} failed: {type(exc).__name__}: {exc}"
                else:
                    error_message = f"{message}: {exc}"

                resolved_logger(error_message)
                if reraise:
                    raise
                return None

        return wrapper  # type: ignore[return-value]

    if func is None:
        return decorator
    return decorator(func)


def parallel_map(func: Callable[[T], R], items: Iterable[T], threads: int = 1) -> list[R]:
    """
    Map ``func`` over ``items`` keeping input order.

    Runs on joblib's thread backend: the work is numpy/scipy kernels that
    release the GIL. The first exception raised by a task propagates.
    """
    work: Sequence[T] = list(items)
    if threads <= 1 or len(work) <= 1:
        return [func(item) for item in work]

    runner = joblib.Parallel(n_jobs=min(threads, len(work)), prefer="threads")
    return list(runner(joblib.delayed(func)(item) for item in work))


def atomic_write_text(path: str | Path, text: str, encoding: str = "utf-8") -> Path:
    """Write ``text`` to ``path`` through a temp file renamed into place."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{target.name}.", dir=target.parent)
    try:
        with os.fdopen(fd, "w", encoding=encoding, newline="") as handle:
            handle.write(text)
        os.replace(tmp_name, target)
    except BaseException:
        Path(tmp_name).unlink(missing_ok=True)
        raise
    return target


__all__ = ["catch_exceptions", "parallel_map", "atomic_write_text"]
