"""
Trace formulas and eigenvalue bounds.

Each check builds both sides of one identity from independent pipelines
(zeros of psi on one side, boundary values of log|psi| or log|D4| on the
other) and returns a :class:`TraceReport`. A :class:`TracePipeline` caches the
shared upstream data so several checks on the same potential run the scan
and the zero search once.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Any

import numpy as np
from loguru import logger

from .bsop import schatten_norm
from .config import NumericsConfig, TaskConfig
from .det import C_STAR, eval_channels, eval_det, hs_norm_sq_exact, log_psi_asymptotics
from .errors import IllConditionedError, InvalidArgumentError, UnsupportedError
from .hardy import (
    BoundaryData,
    BoundaryScan,
    blaschke_log_derivative,
    cauchy_transform_derivative,
    moments_J,
    scan_boundary,
)
from .potential import Moments, Potential, moments_q, norm_lp
from .spectra import Rect, ZeroSet, locate_zeros

TRE1_FLOOR = 0.1
LOG_D4_CONSTANT = 17.0 / 2.0
CONVENTION_GAP_TOL = 1e-8


class Verdict(str, Enum):
    PASS = "pass"
    FAIL = "fail"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class TraceReport:
    """Both sides of one identity and the verdict against its tolerance."""

    identity: str
    lhs: complex
    rhs: complex
    verdict: Verdict
    tolerance: float
    params: dict[str, Any] = field(default_factory=dict)
    details: dict[str, Any] = field(default_factory=dict)

    @property
    def residual(self) -> float:
        return residual(self.lhs, self.rhs)

    @property
    def passed(self) -> bool:
        return self.verdict is Verdict.PASS

    def to_dict(self) -> dict[str, Any]:
        return {
            "identity": self.identity,
            "lhs": [self.lhs.real, self.lhs.imag],
            "rhs": [self.rhs.real, self.rhs.imag],
            "residual": self.residual,
            "verdict": self.verdict.value,
            "tolerance": self.tolerance,
            "params": self.params,
            "details": self.details,
        }


def residual(lhs: complex, rhs: complex) -> float:
    """``|lhs - rhs| / (1 + |lhs| + |rhs|)``."""
    return float(abs(lhs - rhs) / (1.0 + abs(lhs) + abs(rhs)))


def _report(
    identity: str,
    lhs: complex,
    rhs: complex,
    tolerance: float,
    params: dict[str, Any],
    details: dict[str, Any] | None = None,
    *,
    inconclusive: bool = False,
) -> TraceReport:
    lhs, rhs = complex(lhs), complex(rhs)
    if inconclusive:
        verdict = Verdict.INCONCLUSIVE
    else:
        verdict = Verdict.PASS if residual(lhs, rhs) <= tolerance else Verdict.FAIL
    report = TraceReport(identity, lhs, rhs, verdict, tolerance, params, details or {})
    logger.info("{}: residual {:.3e} -> {}", identity, report.residual, verdict.value)
    return report


class TracePipeline:
    """Lazily computed zeros, boundary data and moments for one potential."""

    def __init__(
        self,
        V: Potential,
        numerics: NumericsConfig | None = None,
        task: TaskConfig | None = None,
        params: dict[str, Any] | None = None,
    ) -> None:
        self.V = V
        self.numerics = numerics or NumericsConfig()
        self.task = task or TaskConfig()
        self.params = params if params is not None else {
            "potential": V.to_section(),
            "numerics": self.numerics.to_dict(),
            "task": self.task.to_dict(),
        }

    @cached_property
    def zeros(self) -> ZeroSet:
        rect = Rect.from_tuple(self.task.rect)
        return locate_zeros(self.V, rect, self.numerics.tol_zero, self.numerics)

    @cached_property
    def boundary_scan(self) -> BoundaryScan:
        return scan_boundary(self.V, self.numerics)

    @cached_property
    def moments(self) -> Moments:
        try:
            return moments_q(self.V, order=2)
        except UnsupportedError:
            return moments_q(self.V, order=0)

    @cached_property
    def boundary_data(self) -> BoundaryData:
        order = self.numerics.tail_order
        known = self.moments.I_list
        # the expansion coefficients are Im Q_j when the moments reach that far
        coeffs = known[: order + 1] if len(known) > order else None
        return BoundaryData.from_scan(self.boundary_scan, order, coeffs)


def _pipeline(
    V: Potential,
    numerics: NumericsConfig | None,
    task: TaskConfig | None,
    pipeline: TracePipeline | None,
) -> TracePipeline:
    if pipeline is not None:
        return pipeline
    return TracePipeline(V, numerics, task)


# ---------------------------------------------------------------------------
# Trace formulas
# ---------------------------------------------------------------------------


def _inverse_square_tail(t: np.ndarray, y: np.ndarray, T: float) -> tuple[float, float]:
    """Fit ``y ~ C / t^2`` on each side over ``T/2 <= |t| <= T``; return the two ``C``."""
    coeffs = []
    for side in (t < 0, t > 0):
        mask = side & (np.abs(t) >= 0.5 * T)
        x = t[mask] ** -2.0
        coeffs.append(float(np.dot(x, y[mask]) / np.dot(x, x)) if x.size else 0.0)
    return coeffs[0], coeffs[1]


def verify_tr12(
    V: Potential,
    numerics: NumericsConfig | None = None,
    task: TaskConfig | None = None,
    *,
    pipeline: TracePipeline | None = None,
) -> TraceReport:
    """``B_0 = (1/pi) int log|D4(t + i0)| dt`` with the singular measure set to zero."""
    pipe = _pipeline(V, numerics, task, pipeline)
    tol = pipe.task.tol_tr12
    if V.is_zero:
        return _report("tr12", 0j, 0j, tol, pipe.params)

    zs = pipe.zeros
    scan = pipe.boundary_scan
    y = scan.log_abs_D4
    T = scan.T_max
    left, right = _inverse_square_tail(scan.t, y, T)
    body = float(np.dot(scan.weights, y))
    tail = (left + right) / T
    rhs = (body + tail) / math.pi
    details = {
        "B0": zs.B[0],
        "nu_total": 0.0,
        "zeros": len(zs.zeros),
        "unresolved": len(zs.unresolved),
        "tail_C": [left, right],
        "tail_share": abs(tail) / (abs(body) + abs(tail)) if body or tail else 0.0,
    }
    if zs.unresolved:
        logger.warning("tr12 inconclusive: {} unresolved cell(s)", len(zs.unresolved))
    return _report("tr12", zs.B[0], rhs, tol, pipe.params, details, inconclusive=bool(zs.unresolved))


def verify_trj(
    V: Potential,
    j: int,
    numerics: NumericsConfig | None = None,
    task: TaskConfig | None = None,
    *,
    pipeline: TracePipeline | None = None,
) -> TraceReport:
    """``B_j / (j+1) = Re Q_j + J_j`` for ``j = 1, 2``."""
    if j not in (1, 2):
        raise UnsupportedError(f"trj is available for j = 1, 2, got j = {j}")
    m = (V.smoothness_m or 0) - 1
    if not V.is_zero and j > 2 * m:
        raise UnsupportedError(f"trj with j = {j} needs a smoother potential than W_{V.smoothness_m}")

    pipe = _pipeline(V, numerics, task, pipeline)
    tol = pipe.task.tol_trj
    identity = f"trj:{j}"
    if V.is_zero:
        return _report(identity, 0j, 0j, tol, pipe.params)

    zs = pipe.zeros
    if zs.nmax < j:
        raise InvalidArgumentError(f"nmax = {zs.nmax} does not reach B_{j}")
    J = moments_J(pipe.boundary_data, j)
    Q = pipe.moments.Q(j)
    lhs = zs.B[j] / (j + 1)
    rhs = Q.real + J[j]
    details = {"B": zs.B[j], "Q_re": Q.real, "J": J[j], "K": 0.0, "unresolved": len(zs.unresolved)}
    return _report(identity, lhs, rhs, tol, pipe.params, details, inconclusive=bool(zs.unresolved))


def _log_derivative(V: Potential, k: complex, cfg: NumericsConfig) -> tuple[complex, float]:
    h = cfg.diff_step * max(1.0, abs(k))
    plus = eval_det(V, k + h, cfg)
    minus = eval_det(V, k - h, cfg)
    delta = plus.log_psi - minus.log_psi
    delta -= 2j * math.pi * round(delta.imag / (2.0 * math.pi))
    return delta / (2.0 * h), 0.5 * (plus.log_abs_psi + minus.log_abs_psi)


def verify_tre1(
    V: Potential,
    k: complex,
    numerics: NumericsConfig | None = None,
    task: TaskConfig | None = None,
    *,
    pipeline: TracePipeline | None = None,
) -> TraceReport:
    """
    ``psi'/psi (k) = sum_j m_j 2i Im k_j / ((k - k_j)(k - conj k_j)) + i M'(k)``,
    the logarithmic derivative of ``psi = B exp(i M)``.
    """
    k = complex(k)
    if k.imag < TRE1_FLOOR:
        raise InvalidArgumentError(f"tre1 needs Im k >= {TRE1_FLOOR}, got {k}")
    pipe = _pipeline(V, numerics, task, pipeline)
    cfg = pipe.numerics
    tol = pipe.task.tol_tre1
    identity = f"tre1@{k.real:g}{k.imag:+g}i"
    if V.is_zero:
        return _report(identity, 0j, 0j, tol, pipe.params)

    zs = pipe.zeros
    nearest = min((abs(k - z.k) for z in zs.zeros), default=math.inf)
    lhs, log_abs = _log_derivative(V, k, cfg)
    if nearest < 10.0 * cfg.tol_zero or log_abs < math.log(cfg.tol_edge):
        raise IllConditionedError(f"k={k} is too close to a zero of psi")

    bd = pipe.boundary_data

    def rhs_at(z: complex) -> complex:
        return blaschke_log_derivative(zs, z) + 1j * cauchy_transform_derivative(bd, z)

    rhs = rhs_at(k)
    # Cauchy–Riemann gap of the right side: d/dx = -i d/dy for analytic functions
    h = 1e-4 * max(1.0, abs(k))
    ddx = (rhs_at(k + h) - rhs_at(k - h)) / (2.0 * h)
    ddy = (rhs_at(k + 1j * h) - rhs_at(k - 1j * h)) / (2.0 * h)
    details = {
        "blaschke_part": [blaschke_log_derivative(zs, k).real, blaschke_log_derivative(zs, k).imag],
        "nearest_zero": nearest,
        "cauchy_riemann_gap": float(abs(ddx + 1j * ddy)),
        "unresolved": len(zs.unresolved),
    }
    return _report(identity, lhs, rhs, tol, pipe.params, details, inconclusive=bool(zs.unresolved))


# ---------------------------------------------------------------------------
# Bounds
# ---------------------------------------------------------------------------


def bound_coefficients(C2: float) -> tuple[float, float, float]:
    """``a_1, a_2, a_3`` of ``F(l) = a_1 l^(1/2) + a_2 l + a_3 l^(3/2)``."""
    four_pi = 4.0 * math.pi
    a1 = C2 * 68.0**0.25 / four_pi ** (7.0 / 6.0)
    a2 = math.sqrt(68.0) / four_pi ** (5.0 / 6.0) * C2**2
    a3 = C2**3 * 68.0**0.25 / (3.0 * math.pi * math.sqrt(four_pi))
    return a1, a2, a3


def _minimal_C2(lhs: float, norm2_sq: float, lam: float) -> float:
    """Smallest ``C2 > 0`` with ``lhs <= ||V||^2 F(||V||_{3/2})``."""
    if lhs <= 0.0:
        return 0.0
    if norm2_sq == 0.0 or lam == 0.0:
        return math.inf
    # rhs is a * C2 + b * C2^2 + c * C2^3 with the C2-free parts below
    a1, a2, a3 = bound_coefficients(1.0)
    linear = norm2_sq * a1 * math.sqrt(lam)
    quadratic = norm2_sq * a2 * lam
    cubic = norm2_sq * a3 * lam**1.5
    roots = np.roots([cubic, quadratic, linear, -lhs])
    positive = [r.real for r in roots if abs(r.imag) < 1e-12 * max(1.0, abs(r)) and r.real > 0]
    return float(min(positive))


def check_bound_T4(
    V: Potential,
    zs: ZeroSet,
    C2: float,
    params: dict[str, Any] | None = None,
) -> TraceReport:
    """``sum_j m_j Im k_j <= ||V||_2^2 F(||V||_{3/2})`` for a user-supplied ``C2``."""
    if not C2 > 0:
        raise InvalidArgumentError(f"C2 must be positive, got {C2}")
    lhs = 0.5 * zs.B[0]
    norm2_sq = norm_lp(V, 2) ** 2
    lam = norm_lp(V, 1.5)
    a1, a2, a3 = bound_coefficients(C2)
    rhs = norm2_sq * (a1 * math.sqrt(lam) + a2 * lam + a3 * lam**1.5)
    details = {
        "a": [a1, a2, a3],
        "norm_2": math.sqrt(norm2_sq),
        "norm_3/2": lam,
        "margin": rhs - lhs,
        "minimal_C2": _minimal_C2(lhs, norm2_sq, lam),
        "unresolved": len(zs.unresolved),
    }
    verdict = Verdict.PASS if lhs <= rhs else Verdict.FAIL
    logger.info("T4 bound: {:.4g} <= {:.4g} -> {}", lhs, rhs, verdict.value)
    return TraceReport("T4_bound", complex(lhs), complex(rhs), verdict, 0.0, params or {}, details)


_ENVELOPE_KEYS = ("D1", "epe", "B22", "B21", "p23", "DA2x")


def check_envelope_bounds(
    V: Potential,
    k_grid: Iterable[complex],
    cfg: NumericsConfig,
    slack: float = 1e-6,
    params: dict[str, Any] | None = None,
) -> TraceReport:
    """
    Largest violation of each a-priori bound over ``k_grid``:
    ``|psi| <= exp(C_* ||V||_{3/2}^2)``, ``|psi_2| <= C_* ||V||_{3/2}^2``,
    ``||Y0||_2^2 <= 2 C_* ||V||_{3/2}^2``, ``||Y0||_2 <= ||V||_2 / (8 pi Im k)^(1/2)``,
    ``|psi_3| <= ||V||_{3/2}^3 / (96 pi)`` and ``log|D4| <= (17/2) ||Y0||_4^4``.
    """
    lam = norm_lp(V, 1.5)
    norm2 = norm_lp(V, 2)
    worst = dict.fromkeys(_ENVELOPE_KEYS, 0.0)
    checked = 0
    for k in k_grid:
        k = complex(k)
        if k == 0:
            logger.debug("envelope grid skips k = 0")
            continue
        det = eval_det(V, k, cfg)
        cs = eval_channels(V, k, cfg)
        hs = hs_norm_sq_exact(V, k)
        values = {
            "D1": det.log_abs_psi - C_STAR * lam**2,
            "epe": abs(det.psi2) - C_STAR * lam**2,
            "B22": hs - 2.0 * C_STAR * lam**2,
            "p23": abs(det.psi3) - lam**3 / (96.0 * math.pi),
            "DA2x": det.log_abs_D4 - LOG_D4_CONSTANT * schatten_norm(cs, 4) ** 4,
        }
        if k.imag > 0:
            values["B21"] = math.sqrt(hs) - norm2 / math.sqrt(8.0 * math.pi * k.imag)
        for key, value in values.items():
            worst[key] = max(worst[key], float(value))
        checked += 1

    violation = max(worst.values())
    details = {"max_violation": worst, "points": checked, "slack": slack, "C_star": C_STAR}
    verdict = Verdict.PASS if violation <= slack else Verdict.FAIL
    logger.info("envelope bounds over {} point(s): max violation {:.3e}", checked, violation)
    return TraceReport("envelope", complex(max(violation, 0.0)), 0j, verdict, slack, params or {}, details)


def check_log_asymptotics(
    V: Potential,
    taus: Sequence[float],
    cfg: NumericsConfig,
    params: dict[str, Any] | None = None,
) -> TraceReport:
    """``log psi = -psi_2 + psi_3 + log D4`` along ``k = i tau`` and the decay of ``log psi + psi_2``."""
    rows = log_psi_asymptotics(V, taus, cfg)
    gap = max((row.convention_gap for row in rows), default=0.0)
    details = {
        "tau": [row.tau for row in rows],
        "convention_gap": [row.convention_gap for row in rows],
        "scaled_decay": [row.scaled_decay for row in rows],
    }
    verdict = Verdict.PASS if gap <= CONVENTION_GAP_TOL else Verdict.FAIL
    return TraceReport("asymptotics", complex(gap), 0j, verdict, CONVENTION_GAP_TOL, params or {}, details)


# ---------------------------------------------------------------------------
# Identity names
# ---------------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class IdentitySpec:
    name: str
    j: int | None = None
    k: complex | None = None


_NAMES = {"tr12", "trj", "tre1", "t4", "envelope", "asymptotics"}


def parse_identity(text: str) -> IdentitySpec:
    """Parse ``tr12``, ``trj:1``, ``tre1@2i``, ``T4``, ``envelope`` or ``asymptotics``."""
    raw = text.strip()
    name, _, rest = raw.replace("@", ":").partition(":")
    name = name.lower()
    if name not in _NAMES:
        raise InvalidArgumentError(f"unknown identity {text!r}")
    if name == "trj":
        try:
            return IdentitySpec("trj", j=int(rest))
        except ValueError as exc:
            raise InvalidArgumentError(f"trj needs an order, e.g. 'trj:1', got {text!r}") from exc
    if name == "tre1" and rest:
        try:
            return IdentitySpec("tre1", k=complex(rest.replace("i", "j")))
        except ValueError as exc:
            raise InvalidArgumentError(f"cannot read the point in {text!r}") from exc
    if rest:
        raise InvalidArgumentError(f"identity {name!r} takes no argument, got {text!r}")
    return IdentitySpec(name)


def run_identities(
    pipeline: TracePipeline,
    identities: Sequence[str],
    k_grid: Sequence[complex] = (),
) -> list[TraceReport]:
    """Run the named checks in order on one shared pipeline."""
    specs = [parse_identity(text) for text in identities]
    V, task, cfg = pipeline.V, pipeline.task, pipeline.numerics
    reports: list[TraceReport] = []
    for spec in specs:
        if spec.name == "tr12":
            reports.append(verify_tr12(V, pipeline=pipeline))
        elif spec.name == "trj":
            assert spec.j is not None
            reports.append(verify_trj(V, spec.j, pipeline=pipeline))
        elif spec.name == "tre1":
            points = [spec.k] if spec.k is not None else list(task.tre1_points)
            reports.extend(verify_tre1(V, point, pipeline=pipeline) for point in points)
        elif spec.name == "t4":
            reports.append(check_bound_T4(V, pipeline.zeros, task.C2, pipeline.params))
        elif spec.name == "envelope":
            reports.append(check_envelope_bounds(V, k_grid, cfg, task.envelope_slack, pipeline.params))
        else:
            reports.append(check_log_asymptotics(V, task.taus, cfg, pipeline.params))
    return reports


__all__ = [
    "TRE1_FLOOR",
    "IdentitySpec",
    "TracePipeline",
    "TraceReport",
    "Verdict",
    "bound_coefficients",
    "check_bound_T4",
    "check_envelope_bounds",
    "check_log_asymptotics",
    "parse_identity",
    "residual",
    "run_identities",
    "verify_tr12",
    "verify_tre1",
    "verify_trj",
]
