import time

import pytest

from bslab import shutdown_logging
from bslab.config import NumericsConfig


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run reference-scale checks")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture(autouse=True)
def reset_logging_runtime():
    shutdown_logging()
    yield
    shutdown_logging()


@pytest.fixture
def fast_numerics() -> NumericsConfig:
    """Coarse settings for unit tests; accuracy is checked at reference scale under --runslow."""
    return NumericsConfig(
        quad_n=48,
        L_max=80,
        T_max=8.0,
        boundary_points=128,
        contour_panels=4,
        contour_order=6,
        max_depth=6,
        threads=2,
    )


def wait_for_log_writes() -> None:
    time.sleep(0.25)
