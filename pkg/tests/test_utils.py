import threading
from pathlib import Path

import pytest

from bslab import catch_exceptions, init_logging
from bslab.utils import atomic_write_text, parallel_map
from tests.conftest import wait_for_log_writes


def test_catch_exceptions_logs_traceback_to_main_log(tmp_path: Path):
    init_logging("demo", log_dir=tmp_path, console_output=False)

    @catch_exceptions(reraise=False)
    def broken():
        raise ValueError("boom")

    assert broken() is None
    wait_for_log_writes()

    log_files = sorted(tmp_path.glob("demo_*.log"))
    assert log_files

    content = log_files[0].read_text(encoding="utf-8")
    assert "broken failed: ValueError: boom" in content
    assert "ValueError: boom" in content


def test_catch_exceptions_supports_custom_logger():
    captured = []

    @catch_exceptions(reraise=False, logger_func=captured.append, message="custom")
    def broken():
        raise RuntimeError("fail")

    broken()

    assert captured == ["custom: fail"]


def test_catch_exceptions_reraises_by_default():
    captured = []

    @catch_exceptions(logger_func=captured.append)
    def broken():
        raise KeyError("missing")

    with pytest.raises(KeyError):
        broken()
    assert len(captured) == 1


def test_parallel_map_preserves_order():
    items = list(range(50))

    assert parallel_map(lambda x: x * x, items, threads=4) == [x * x for x in items]
    assert parallel_map(lambda x: -x, items, threads=1) == [-x for x in items]
    assert parallel_map(lambda x: x, [], threads=4) == []


def test_parallel_map_runs_inline_for_one_thread():
    seen = set()

    def record(_):
        seen.add(threading.get_ident())
        return None

    parallel_map(record, range(8), threads=1)

    assert seen == {threading.get_ident()}


def test_parallel_map_propagates_errors():
    def fail(x):
        if x == 3:
            raise ValueError("bad item")
        return x

    with pytest.raises(ValueError, match="bad item"):
        parallel_map(fail, range(6), threads=3)


def test_atomic_write_text_replaces_file(tmp_path: Path):
    target = tmp_path / "nested" / "out.json"

    atomic_write_text(target, "first")
    atomic_write_text(target, "second")

    assert target.read_text(encoding="utf-8") == "second"
    assert [p.name for p in target.parent.iterdir()] == ["out.json"]
