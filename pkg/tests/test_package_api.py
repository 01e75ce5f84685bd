import bslab

EXPECTED_EXPORTS = {
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
}


def test_public_exports_are_available():
    assert set(bslab.__all__) == EXPECTED_EXPORTS

    for name in EXPECTED_EXPORTS:
        assert hasattr(bslab, name)


def test_errors_keep_value_error_semantics():
    from bslab.errors import ConfigError, InvalidArgumentError

    assert issubclass(InvalidArgumentError, ValueError)
    assert issubclass(ConfigError, bslab.BSLabError)
    assert ConfigError("x").exit_code == 2
    assert bslab.BSLabError("x").exit_code == 3
