"""
Command-line front end.

Every subcommand reads one :class:`~bslab.config.RunConfig` (an INI file plus
``--set section.key=value`` overrides), writes its artifacts atomically and
appends a summary to the audit ledger. Exit codes: 0 all checks pass,
1 a verification failed, 2 configuration error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from collections.abc import Callable, Sequence
from pathlib import Path
from typing import Any

from . import __version__
from .config import RunConfig
from .core import audit, init_logging, log, shutdown_logging
from .det import C_STAR, log_det_scan, scan_frame
from .errors import (
    EXIT_CONFIG_ERROR,
    EXIT_NUMERIC_FAILURE,
    EXIT_OK,
    EXIT_VERIFICATION_FAILED,
    BSLabError,
    ConfigError,
    UnsupportedError,
)
from .hardy import blaschke_coeff_bound_ratio, inner_outer_residual
from .potential import Potential, moments_q, norm_lp
from .spectra import Rect, locate_zeros
from .traceform import TracePipeline, run_identities
from .utils import atomic_write_text, catch_exceptions


def _audit(action: str, params_hash: str, **data: Any) -> None:
    if audit.enabled:
        audit.info(action, params_hash, **data)


def _audit_error(params_hash: str, command: str, exc: Exception) -> None:
    if audit.enabled:
        audit.error("error", params_hash, command=command, error=type(exc).__name__, message=str(exc))


def _write_json(path: Path, payload: Any) -> Path:
    text = json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False) + "\n"
    return atomic_write_text(path, text)


def _params(config: RunConfig) -> dict[str, Any]:
    return {"params_hash": config.params_hash, "config": config.to_dict()}


def _pipeline(config: RunConfig) -> TracePipeline:
    V = Potential.from_section(config.potential)
    return TracePipeline(V, config.numerics, config.task, _params(config))


def cmd_scan(config: RunConfig) -> int:
    """psi, D4, psi_2 and psi_3 over the k-grid as CSV."""
    V = Potential.from_section(config.potential)
    rows = log_det_scan(V, config.grid.k_values(), config.numerics)
    frame = scan_frame(rows)
    body = frame.to_csv(index=False, float_format="%.17g", lineterminator="\n")
    path = atomic_write_text(config.output.path("scan_csv"), f"# params_hash={config.params_hash}\n{body}")
    failed = sum(1 for row in rows if row.error)
    _audit("scan", config.params_hash, path=str(path), rows=len(rows), failed=failed)
    log.info("scan: {} row(s), {} failed -> {}", len(rows), failed, path)
    return EXIT_OK


def cmd_eigs(config: RunConfig) -> int:
    """Zeros of psi in ``task.rect`` as JSON."""
    V = Potential.from_section(config.potential)
    zs = locate_zeros(V, Rect.from_tuple(config.task.rect), config.numerics.tol_zero, config.numerics)
    payload = {
        "params_hash": config.params_hash,
        **zs.to_dict(),
        "coefficient_bound_ratio": blaschke_coeff_bound_ratio(zs),
    }
    path = _write_json(config.output.path("zeros_json"), payload)
    _audit("eigs", config.params_hash, path=str(path), zeros=len(zs.zeros), unresolved=len(zs.unresolved))
    log.info("eigs: {} zero(s) -> {}", len(zs.zeros), path)
    return EXIT_OK


def cmd_verify(config: RunConfig) -> int:
    """Selected trace identities and bounds as a JSON array of reports."""
    path = config.output.path("report_json")
    try:
        pipeline = _pipeline(config)
        reports = run_identities(pipeline, config.task.identities, config.grid.k_values())
    except BSLabError as exc:
        _write_json(
            path,
            {
                "params_hash": config.params_hash,
                "error": {"type": type(exc).__name__, "message": str(exc), "exit_code": exc.exit_code},
            },
        )
        raise

    _write_json(path, [report.to_dict() for report in reports])
    if audit.enabled:
        for report in reports:
            audit.verdict(
                "verify",
                config.params_hash,
                report.verdict.value,
                identity=report.identity,
                residual=report.residual,
            )
    failed = [report.identity for report in reports if not report.passed]
    if failed:
        log.warning("verify: {} of {} report(s) did not pass: {}", len(failed), len(reports), failed)
        return EXIT_VERIFICATION_FAILED
    log.success("verify: all {} report(s) pass", len(reports))
    return EXIT_OK


def cmd_factorize(config: RunConfig) -> int:
    """Boundary scan, zeros and ``|psi - B exp(iM)|`` at ``task.probes``."""
    pipeline = _pipeline(config)
    bd = pipeline.boundary_data
    data = inner_outer_residual(pipeline.V, pipeline.zeros, bd, config.task.probes, config.numerics)
    atomic_write_text(config.output.path("boundary_csv"), bd.to_csv(f"params_hash={config.params_hash}"))
    path = _write_json(
        config.output.path("factorization_json"),
        {"params_hash": config.params_hash, **data.to_dict()},
    )
    within = data.max_residual <= config.task.tol_factorization
    if audit.enabled:
        audit.verdict(
            "factorize",
            config.params_hash,
            "pass" if within else "fail",
            path=str(path),
            max_residual=data.max_residual,
        )
    if not within:
        log.warning("factorize: max residual {:.3e} above {:.1e}", data.max_residual,
                    config.task.tol_factorization)
        return EXIT_VERIFICATION_FAILED
    return EXIT_OK


def cmd_info(config: RunConfig) -> int:
    """Version, params_hash, norms and moments of the configured potential on stdout."""
    V = Potential.from_section(config.potential)
    try:
        moments = moments_q(V, order=2)
    except UnsupportedError:
        moments = moments_q(V, order=0)
    info: dict[str, Any] = {
        "version": __version__,
        "params_hash": config.params_hash,
        "potential": config.potential,
        "R": V.R,
        "norm_1": norm_lp(V, 1),
        "norm_3/2": norm_lp(V, 1.5),
        "norm_2": norm_lp(V, 2),
        "Q0": [moments.Q0.real, moments.Q0.imag],
        "Q2": None if moments.Q2 is None else [moments.Q2.real, moments.Q2.imag],
        "C_star": C_STAR,
        "threads": config.numerics.resolved_threads,
    }
    print(json.dumps(info, indent=2, sort_keys=True))
    return EXIT_OK


COMMANDS: dict[str, Callable[[RunConfig], int]] = {
    "scan": cmd_scan,
    "eigs": cmd_eigs,
    "verify": cmd_verify,
    "factorize": cmd_factorize,
    "info": cmd_info,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bslab",
        description="Determinants, zeros and trace formulas of the Birman–Schwinger operator.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--config", type=Path, default=None, help="INI file with the run configuration.")
    parser.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="SECTION.KEY=VALUE",
        help="Override one config value; may be repeated.",
    )
    parser.add_argument("--log-dir", default=None, help="Directory for log files (default: BSLAB_LOG_DIR).")
    parser.add_argument("--log-level", default=None, help="Console and file log level.")
    parser.add_argument("--no-log-file", action="store_true", help="Log to the console only.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, func in COMMANDS.items():
        sub.add_parser(name, help=(func.__doc__ or "").strip().splitlines()[0])
    return parser


def load_config(path: Path | None, overrides: Sequence[str]) -> RunConfig:
    config = RunConfig.from_file(path) if path is not None else RunConfig()
    return config.with_overrides(overrides) if overrides else config


@catch_exceptions(message="bslab command failed")
def _dispatch(command: str, config: RunConfig) -> int:
    return COMMANDS[command](config)


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config, args.overrides)
    except ConfigError as exc:
        print(f"bslab: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR

    init_logging("bslab", level=args.log_level, log_dir=args.log_dir, file_output=not args.no_log_file)
    try:
        log.info("bslab {} {} (params_hash={})", __version__, args.command, config.params_hash)
        return _dispatch(args.command, config)
    except BSLabError as exc:
        _audit_error(config.params_hash, args.command, exc)
        return exc.exit_code
    except Exception as exc:
        # already logged with traceback by _dispatch
        _audit_error(config.params_hash, args.command, exc)
        return EXIT_NUMERIC_FAILURE
    finally:
        shutdown_logging()


__all__ = [
    "COMMANDS",
    "build_parser",
    "cmd_eigs",
    "cmd_factorize",
    "cmd_info",
    "cmd_scan",
    "cmd_verify",
    "load_config",
    "main",
]
