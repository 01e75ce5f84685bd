"""
Hardy-space tools on the upper half-plane.

Boundary data ``h(t) = log|psi(t + i0)|`` are sampled on a symmetric grid
graded as ``t = +-T u^3``. Beyond ``T`` they are continued by the expansion
``P_m(t) = sum_j I_j / t^(j+1)``. From these the module builds the Cauchy
transform ``M(k) = (1/pi) int h(t) / (k - t) dt`` (the outer factor is
``exp(i M)``), its moments and the Blaschke product of the zeros.
"""

from __future__ import annotations

import cmath
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
import pandas as pd
from loguru import logger
from numpy.typing import NDArray
from scipy.interpolate import CubicSpline

from .config import NumericsConfig
from .det import DetEval, eval_det
from .errors import (
    ConfigError,
    DivergentSeriesError,
    InvalidArgumentError,
    OutOfRangeError,
    PoleError,
)
from .potential import Potential
from .spectra import ZeroSet, blaschke_coeffs
from .utils import parallel_map

_TAIL_SERIES_TERMS = 64
PROBE_FLOOR = 1e-2


# ---------------------------------------------------------------------------
# Boundary grid and data
# ---------------------------------------------------------------------------


def graded_grid(T_max: float, points: int) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """
    Symmetric nodes ``+-T_max u^3`` and weights ``3 T_max u^2 w`` with
    ``(u, w)`` a Gauss–Legendre rule on ``(0, 1)``. ``points`` counts both sides.
    """
    if not T_max > 0:
        raise InvalidArgumentError(f"T_max must be positive, got {T_max}")
    if points < 4 or points % 2:
        raise InvalidArgumentError(f"boundary grid needs an even number >= 4 of points, got {points}")
    x, w = np.polynomial.legendre.leggauss(points // 2)
    u = 0.5 * (x + 1.0)
    wu = 0.5 * w
    positive = T_max * u**3
    weights = 3.0 * T_max * u**2 * wu
    t = np.concatenate([-positive[::-1], positive])
    return t, np.concatenate([weights[::-1], weights])


def fit_tail_coeffs(t: NDArray[np.float64], h: NDArray[np.float64], m: int, T_max: float) -> tuple[float, ...]:
    """Least-squares ``I_0..I_m`` of ``h ~ sum I_j t^-(j+1)`` on ``T_max/2 <= |t| <= T_max``."""
    if m < 0:
        raise InvalidArgumentError(f"tail order must be >= 0, got {m}")
    t = np.asarray(t, dtype=float)
    mask = (np.abs(t) >= 0.5 * T_max) & (np.abs(t) <= T_max)
    if np.count_nonzero(mask) < m + 1:
        raise InvalidArgumentError(f"only {np.count_nonzero(mask)} samples in the tail window for order {m}")
    ts = t[mask]
    design = np.stack([ts ** -(j + 1) for j in range(m + 1)], axis=1)
    coeffs, *_ = np.linalg.lstsq(design, np.asarray(h, dtype=float)[mask], rcond=None)
    return tuple(float(c) for c in coeffs)


@dataclass(frozen=True)
class BoundaryScan:
    """psi and D4 data on the real axis, one DetEval per grid node."""

    t: NDArray[np.float64]
    weights: NDArray[np.float64]
    rows: tuple[DetEval, ...]
    T_max: float

    @property
    def log_abs_psi(self) -> NDArray[np.float64]:
        return np.array([row.log_abs_psi for row in self.rows])

    @property
    def log_abs_D4(self) -> NDArray[np.float64]:
        return np.array([row.log_abs_D4 for row in self.rows])


def scan_boundary(V: Potential, cfg: NumericsConfig) -> BoundaryScan:
    """Evaluate the determinants on the graded real grid of ``cfg``."""
    t, w = graded_grid(cfg.T_max, cfg.boundary_points)
    rows = parallel_map(lambda x: eval_det(V, complex(x), cfg, threads=1), t.tolist(), cfg.resolved_threads)
    scan = BoundaryScan(t=t, weights=w, rows=tuple(rows), T_max=cfg.T_max)
    if not np.all(np.isfinite(scan.log_abs_psi)):
        bad = t[~np.isfinite(scan.log_abs_psi)]
        raise OutOfRangeError(f"psi vanishes on the real axis near t={bad[0]:.6g}")
    logger.info("boundary scan: {} points on [-{}, {}]", t.size, cfg.T_max, cfg.T_max)
    return scan


@dataclass(frozen=True)
class BoundaryData:
    """Samples of ``h`` on a symmetric grid plus the tail expansion ``I_0..I_m``."""

    t: NDArray[np.float64]
    h: NDArray[np.float64]
    weights: NDArray[np.float64]
    tail_coeffs: tuple[float, ...]
    T_max: float

    def __post_init__(self) -> None:
        if not (self.t.shape == self.h.shape == self.weights.shape) or self.t.ndim != 1:
            raise InvalidArgumentError("t, h and weights must be 1-d arrays of equal length")
        if np.any(np.diff(self.t) <= 0):
            raise InvalidArgumentError("boundary grid must be strictly increasing")
        if not np.allclose(self.t, -self.t[::-1], rtol=0.0, atol=1e-12 * self.T_max):
            raise InvalidArgumentError("boundary grid must be symmetric under t -> -t")
        if not np.all(np.isfinite(self.h)):
            raise InvalidArgumentError("boundary data contain non-finite values")
        if not self.tail_coeffs:
            raise InvalidArgumentError("boundary data need at least I_0")

    @classmethod
    def from_function(
        cls,
        func: Callable[[NDArray[np.float64]], NDArray[np.float64]],
        T_max: float,
        points: int,
        tail_coeffs: Sequence[float],
    ) -> BoundaryData:
        t, w = graded_grid(T_max, points)
        h = np.asarray(func(t), dtype=float)
        return cls(t=t, h=h, weights=w, tail_coeffs=tuple(float(c) for c in tail_coeffs), T_max=float(T_max))

    @classmethod
    def from_scan(
        cls,
        scan: BoundaryScan,
        tail_order: int,
        tail_coeffs: Sequence[float] | None = None,
    ) -> BoundaryData:
        """``h = log|psi|``; the tail is fitted unless known coefficients are given."""
        h = scan.log_abs_psi
        if tail_coeffs is None:
            coeffs = fit_tail_coeffs(scan.t, h, tail_order, scan.T_max)
        else:
            coeffs = tuple(float(c) for c in tail_coeffs)
        return cls(t=scan.t, h=h, weights=scan.weights, tail_coeffs=coeffs, T_max=scan.T_max)

    @classmethod
    def read_csv(cls, path: str | Path, tail_order: int) -> BoundaryData:
        """
        Read a ``t,h`` file. Weights are those of the graded grid when the
        nodes match it, trapezoidal otherwise.
        """
        T_max: float | None = None
        with open(path, encoding="utf-8") as handle:
            for line in handle:
                if not line.startswith("#"):
                    break
                key, sep, value = line.lstrip("# ").partition("=")
                if sep and key.strip() == "T_max":
                    T_max = float(value)
        frame = pd.read_csv(path, comment="#")
        if list(frame.columns[:2]) != ["t", "h"]:
            raise ConfigError(f"boundary file {path} must have columns t,h")
        t = frame["t"].to_numpy(float)
        h = frame["h"].to_numpy(float)
        if T_max is None:
            T_max = float(t[-1])
        graded_t, graded_w = graded_grid(T_max, t.size) if t.size % 2 == 0 and t.size >= 4 else (None, None)
        if graded_t is not None and np.allclose(graded_t, t, rtol=1e-12, atol=0.0):
            weights = graded_w
        else:
            weights = np.zeros_like(t)
            gaps = np.diff(t)
            weights[:-1] += 0.5 * gaps
            weights[1:] += 0.5 * gaps
        return cls(
            t=t, h=h, weights=weights, tail_coeffs=fit_tail_coeffs(t, h, tail_order, T_max), T_max=T_max
        )

    def to_csv(self, header: str | None = None) -> str:
        """``t,h`` table preceded by ``# T_max=...`` and an optional comment line."""
        frame = pd.DataFrame({"t": self.t, "h": self.h})
        body = frame.to_csv(index=False, float_format="%.17g", lineterminator="\n")
        lines = [f"# T_max={self.T_max!r}"]
        if header:
            lines.append(f"# {header}")
        return "\n".join(lines) + "\n" + body

    @property
    def order(self) -> int:
        return len(self.tail_coeffs) - 1

    @property
    def is_zero(self) -> bool:
        return not np.any(self.h) and not any(self.tail_coeffs)

    @cached_property
    def spline(self) -> CubicSpline:
        return CubicSpline(self.t, self.h)


# ---------------------------------------------------------------------------
# Cauchy transform
# ---------------------------------------------------------------------------


def _power_tail(q: int, T: float) -> float:
    """Principal value of ``int_{|t| > T} t^(-q) dt`` for ``q >= 1``."""
    if q % 2 == 1:
        return 0.0
    return 2.0 * T ** (1 - q) / (q - 1)


def _cauchy_tails(k: complex, T: float, top: int) -> tuple[list[complex], list[complex]]:
    """
    ``E_p(k) = int_{|t| > T} t^(-p) / (k - t) dt`` and ``dE_p/dk`` for
    ``p = 1..top``. Small ``|k|`` uses the power series, large ``|k|`` the
    recurrence ``k E_p = S_p + E_(p-1)``.
    """
    values: list[complex] = []
    slopes: list[complex] = []
    if abs(k) < 0.5 * T:
        for p in range(1, top + 1):
            value = 0j
            slope = 0j
            for n in range(_TAIL_SERIES_TERMS):
                s = _power_tail(n + p + 1, T)
                value -= k**n * s
                if n:
                    slope -= n * k ** (n - 1) * s
            values.append(value)
            slopes.append(slope)
        return values, slopes

    value = cmath.log(T - k) - cmath.log(T + k)
    slope = -1.0 / (T - k) - 1.0 / (T + k)
    for p in range(1, top + 1):
        value = (_power_tail(p, T) + value) / k
        slope = (slope - value) / k
        values.append(value)
        slopes.append(slope)
    return values, slopes


def _check_upper(k: complex) -> complex:
    k = complex(k)
    if not k.imag > 0:
        raise InvalidArgumentError(f"k must lie in the open upper half-plane, got {k}")
    return k


def _transform(bd: BoundaryData, k: complex, derivative: bool) -> complex:
    k = _check_upper(k)
    if bd.is_zero:
        return 0j
    T = bd.T_max
    t, h, w = bd.t, bd.h, bd.weights
    a = k.real

    if abs(a) < T:
        # subtract the local linear behaviour of h at Re k
        c0 = float(bd.spline(a))
        c1 = float(bd.spline(a, 1))
        regular = h - c0 - c1 * (t - a)
        log_span = cmath.log(k + T) - cmath.log(k - T)
        if derivative:
            inv = 1.0 / (k - T) - 1.0 / (k + T)
            body = -(np.dot(w, regular / (k - t) ** 2) + c0 * inv + c1 * (-log_span + (k - a) * inv))
        else:
            body = np.dot(w, regular / (k - t)) + c0 * log_span + c1 * (-2.0 * T + (k - a) * log_span)
    elif derivative:
        body = -np.dot(w, h / (k - t) ** 2)
    else:
        body = np.dot(w, h / (k - t))

    values, slopes = _cauchy_tails(k, T, len(bd.tail_coeffs))
    tails = slopes if derivative else values
    tail = sum(c * e for c, e in zip(bd.tail_coeffs, tails, strict=True))
    return complex((body + tail) / math.pi)


def cauchy_transform(bd: BoundaryData, k: complex) -> complex:
    """``M(k) = (1/pi) int h(t) / (k - t) dt``, grid part plus analytic tail."""
    return _transform(bd, k, derivative=False)


def cauchy_transform_derivative(bd: BoundaryData, k: complex) -> complex:
    """``M'(k) = -(1/pi) int h(t) / (k - t)^2 dt``."""
    return _transform(bd, k, derivative=True)


# ---------------------------------------------------------------------------
# Blaschke product
# ---------------------------------------------------------------------------


def blaschke_eval(zs: ZeroSet, k: complex) -> complex:
    """``prod_j ((k - k_j) / (k - conj k_j))^(m_j)``."""
    k = _check_upper(k)
    value = 1 + 0j
    for zero in zs.zeros:
        pole = zero.k.conjugate()
        if k == pole:
            raise PoleError(f"k={k} is a pole of the Blaschke product")
        value *= ((k - zero.k) / (k - pole)) ** zero.multiplicity
    return value


def blaschke_log_derivative(zs: ZeroSet, k: complex) -> complex:
    """``B'/B = sum_j m_j 2i Im k_j / ((k - k_j)(k - conj k_j))``."""
    return complex(
        sum(
            z.multiplicity * 2j * z.k.imag / ((k - z.k) * (k - z.k.conjugate()))
            for z in zs.zeros
        )
    )


def _angular_mass(zs: ZeroSet) -> float:
    """``A = 2 sum m_j |k_j| phi_j`` with ``phi_j`` the angle to the nearest real half-axis."""
    total = 0.0
    for z in zs.zeros:
        phi = cmath.phase(z.k)
        total += z.multiplicity * abs(z.k) * min(phi, math.pi - phi)
    return 2.0 * total


@dataclass(frozen=True, slots=True)
class SeriesValue:
    value: complex
    tail_bound: float


def blaschke_log_series(zs: ZeroSet, k: complex, nmax: int) -> SeriesValue:
    """
    ``log B(k) = -i sum_{n<=nmax} B_n / ((n+1) k^(n+1))`` for ``|k| > r0`` with
    the bound ``(A/r0) (r0/|k|)^(nmax+1) / (1 - r0/|k|)`` on the remainder.
    """
    if not zs.zeros:
        return SeriesValue(0j, 0.0)
    r0 = zs.r0
    if abs(k) <= r0:
        raise DivergentSeriesError(f"log B series needs |k| > r0 = {r0:.6g}, got |k| = {abs(k):.6g}")
    coeffs = zs.B if nmax <= zs.nmax else tuple(blaschke_coeffs(zs.zeros, nmax))
    value = -1j * sum(coeffs[n] / ((n + 1) * k ** (n + 1)) for n in range(nmax + 1))
    ratio = r0 / abs(k)
    bound = _angular_mass(zs) / r0 * ratio ** (nmax + 1) / (1.0 - ratio)
    return SeriesValue(complex(value), float(bound))


def blaschke_coeff_bound_ratio(zs: ZeroSet) -> float:
    """Largest ``|B_n| / ((pi/2)(n+1) r0^n B_0)`` over ``n = 1..nmax``; at most 1."""
    if not zs.zeros or zs.B[0] == 0.0:
        return 0.0
    return max(
        (abs(zs.B[n]) / (0.5 * math.pi * (n + 1) * zs.r0**n * zs.B[0]) for n in range(1, len(zs.B))),
        default=0.0,
    )


# ---------------------------------------------------------------------------
# Moments and large-k expansion
# ---------------------------------------------------------------------------


def moments_J(bd: BoundaryData, m: int) -> list[float]:
    """
    ``J_j = (1/pi) v.p. int t^j (h - P_(j-1))(t) dt`` for ``j = 0..m``, with
    ``P_(j-1) = sum_{i<j} I_i t^-(i+1)``. Symmetric truncation on the grid and
    the tail expansion beyond ``T_max``.
    """
    if m < 0:
        raise InvalidArgumentError(f"moment order must be >= 0, got {m}")
    if bd.order < m:
        raise InvalidArgumentError(f"moments through J_{m} need I_0..I_{m}, have I_0..I_{bd.order}")
    t, h, w, T = bd.t, bd.h, bd.weights, bd.T_max
    coeffs = bd.tail_coeffs
    result = []
    for j in range(m + 1):
        integrand = t**j * h
        for i in range(j):
            integrand = integrand - coeffs[i] * t ** (j - i - 1)
        tail = sum(coeffs[i] * _power_tail(i - j + 1, T) for i in range(j, len(coeffs)))
        result.append(float((np.dot(w, integrand) + tail) / math.pi))
    return result


@dataclass(frozen=True, slots=True)
class ExpansionRow:
    tau: float
    M: complex
    partial_sum: complex
    remainder: float


@dataclass(frozen=True)
class ExpansionCheck:
    """``M(i tau)`` against ``sum_{j<=m} (J_j - i I_j) / k^(j+1)``."""

    m: int
    J: tuple[float, ...]
    I: tuple[float, ...]
    rows: tuple[ExpansionRow, ...]

    @property
    def decreasing(self) -> bool:
        rem = [row.remainder for row in self.rows]
        return all(b <= a for a, b in zip(rem, rem[1:], strict=False))


def asymptotic_M(bd: BoundaryData, m: int, taus: Sequence[float]) -> ExpansionCheck:
    """Remainders ``tau^(m+1) |M(i tau) - partial sum|`` along the imaginary axis."""
    J = moments_J(bd, m)
    I = bd.tail_coeffs[: m + 1]
    rows = []
    for tau in taus:
        if not tau > 0:
            raise InvalidArgumentError(f"tau must be positive, got {tau}")
        k = 1j * float(tau)
        M = cauchy_transform(bd, k)
        partial = sum((J[j] - 1j * I[j]) / k ** (j + 1) for j in range(m + 1))
        rows.append(
            ExpansionRow(tau=float(tau), M=M, partial_sum=complex(partial),
                         remainder=float(tau ** (m + 1) * abs(M - partial)))
        )
    return ExpansionCheck(m=m, J=tuple(J), I=tuple(I), rows=tuple(rows))


# ---------------------------------------------------------------------------
# Inner-outer factorization
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FactorizationData:
    """
    Factorization ``psi = B exp(i M)`` checked at probe points. The singular
    inner factor is taken to be trivial, so ``nu_total`` and ``K_j`` vanish.
    """

    zeros: ZeroSet
    J_coeffs: tuple[float, ...]
    residual_probes: tuple[tuple[complex, float], ...]
    nu_total: float = 0.0
    K_coeffs: tuple[float, ...] = field(default=())

    @property
    def max_residual(self) -> float:
        return max((r for _, r in self.residual_probes), default=0.0)

    def to_dict(self) -> dict[str, object]:
        return {
            "zeros": self.zeros.to_dict(),
            "nu_total": self.nu_total,
            "K": list(self.K_coeffs),
            "J": list(self.J_coeffs),
            "residual_probes": [
                {"k_re": k.real, "k_im": k.imag, "residual": r} for k, r in self.residual_probes
            ],
            "max_residual": self.max_residual,
        }


def inner_outer_residual(
    V: Potential,
    zs: ZeroSet,
    bd: BoundaryData,
    probes: Sequence[complex],
    cfg: NumericsConfig,
) -> FactorizationData:
    """``|psi(k) - B(k) exp(i M(k))|`` at every probe."""
    probes = [complex(k) for k in probes]
    low = [k for k in probes if k.imag < PROBE_FLOOR]
    if low:
        raise InvalidArgumentError(
            f"probe {low[0]} lies below Im k = {PROBE_FLOOR}; boundary values are ill-conditioned there"
        )

    def residual(k: complex) -> tuple[complex, float]:
        det = eval_det(V, k, cfg, threads=1)
        if not det.finite:
            raise OutOfRangeError(f"psi overflows at k={k}")
        psi = det.psi
        return k, float(abs(psi - blaschke_eval(zs, k) * cmath.exp(1j * cauchy_transform(bd, k))))

    results = parallel_map(residual, probes, cfg.resolved_threads)
    m = bd.order
    data = FactorizationData(
        zeros=zs,
        J_coeffs=tuple(moments_J(bd, m)),
        residual_probes=tuple(results),
        K_coeffs=(0.0,) * (m + 1),
    )
    logger.info("factorization residual max {:.3e} over {} probe(s)", data.max_residual, len(probes))
    return data


__all__ = [
    "PROBE_FLOOR",
    "BoundaryData",
    "BoundaryScan",
    "ExpansionCheck",
    "ExpansionRow",
    "FactorizationData",
    "SeriesValue",
    "asymptotic_M",
    "blaschke_coeff_bound_ratio",
    "blaschke_eval",
    "blaschke_log_derivative",
    "blaschke_log_series",
    "cauchy_transform",
    "cauchy_transform_derivative",
    "fit_tail_coeffs",
    "graded_grid",
    "inner_outer_residual",
    "moments_J",
    "scan_boundary",
]
