"""
BSLab public package interface.
"""

from loguru import logger as _logger

__version__ = "0.1.0"

# library modules stay silent until init_logging() enables the namespace
_logger.disable("bslab")

from .config import LogConfig, NumericsConfig, RunConfig  # noqa: E402
from .core import LoggingNotInitializedError, audit, init_logging, log, shutdown_logging  # noqa: E402
from .det import C_STAR, eval_det, log_det_scan, psi2_closed  # noqa: E402
from .errors import BSLabError  # noqa: E402
from .hardy import BoundaryData, blaschke_eval, cauchy_transform, inner_outer_residual  # noqa: E402
from .potential import Potential, autocorrelation, moments_q, norm_lp  # noqa: E402
from .spectra import Rect, ZeroSet, count_zeros, locate_zeros  # noqa: E402
from .traceform import TracePipeline, TraceReport, verify_tr12, verify_tre1, verify_trj  # noqa: E402
from .utils import catch_exceptions  # noqa: E402

__all__ = [
    "__version__",
    "BSLabError",
    "BoundaryData",
    "C_STAR",
    "LogConfig",
    "LoggingNotInitializedError",
    "NumericsConfig",
    "Potential",
    "Rect",
    "RunConfig",
    "TracePipeline",
    "TraceReport",
    "ZeroSet",
    "audit",
    "autocorrelation",
    "blaschke_eval",
    "catch_exceptions",
    "cauchy_transform",
    "count_zeros",
    "eval_det",
    "init_logging",
    "inner_outer_residual",
    "locate_zeros",
    "log",
    "log_det_scan",
    "moments_q",
    "norm_lp",
    "psi2_closed",
    "shutdown_logging",
    "verify_tr12",
    "verify_tre1",
    "verify_trj",
]
