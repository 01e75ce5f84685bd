"""
Regularized determinants of ``I + Y0(k)`` and the trace functions psi_2, psi_3.

Conventions::

    psi   = det_2(I + Y0)            = prod (1 + lam) exp(-lam)
    psi_n = Tr Y0^n / n
    D4    = psi * exp(psi_2 - psi_3) = prod (1 + lam) exp(-lam + lam^2/2 - lam^3/3)
    log psi = -psi_2 + psi_3 + log D4

Products run over the eigenvalues ``lam`` of every channel, with channel ``l``
counted ``2l + 1`` times.

The partial-wave sum of ``Tr Y0^2`` converges only algebraically in ``l``, and
the Nyström diagonal of channel ``l`` tends to ``w_i V(r_i) r_i / (2l + 1)``
instead of zero. ``eval_det`` therefore takes psi_2 from the autocorrelation
transform and uses the channels only for the cubic remainder
``log psi + psi_2 = sum log(1 + lam) - lam + lam^2/2``.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import pandas as pd
from loguru import logger
from numpy.typing import NDArray
from scipy.integrate import quad
from scipy.linalg import LinAlgError, eig

from .bsop import ChannelSet, build_quadrature, channel_cutoff, trace_power
from .config import NumericsConfig
from .errors import BSLabError, NumericFailureError
from .greenfn import check_wavenumber
from .potential import Potential, autocorrelation
from .utils import parallel_map

C_STAR = 1.0 / (8.0 * (4.0 * math.pi) ** (2.0 / 3.0))

SCAN_COLUMNS = [
    "k_re", "k_im", "psi_re", "psi_im", "logabs_psi", "logabs_D4",
    "psi2_re", "psi2_im", "psi3_re", "psi3_im", "L", "n", "tail_bound",
]

# |lam| below this uses the power series of the log remainders
_SERIES_RADIUS = 0.1
_SERIES_TERMS = 40


def log1p_remainder(lam: NDArray[np.complex128], order: int) -> NDArray[np.complex128]:
    """
    ``log(1 + lam) - sum_{m < order} (-1)^(m+1) lam^m / m``.

    ``order=2`` gives the per-eigenvalue log of ``(1 + lam) exp(-lam)``,
    ``order=4`` that of the det_4 factor.
    """
    lam = np.asarray(lam, dtype=complex)
    out = np.empty_like(lam)
    small = np.abs(lam) < _SERIES_RADIUS
    if np.any(small):
        x = lam[small]
        acc = np.zeros_like(x)
        for m in range(_SERIES_TERMS + order - 1, order - 1, -1):
            acc = acc * x + ((-1) ** (m + 1)) / m
        out[small] = acc * x**order
    big = ~small
    if np.any(big):
        x = lam[big]
        with np.errstate(divide="ignore"):
            direct = np.log1p(x)
        for m in range(1, order):
            direct -= ((-1) ** (m + 1)) * x**m / m
        out[big] = direct
    return out


@dataclass(frozen=True, slots=True)
class ChannelSpectrum:
    ell: int
    eigenvalues: NDArray[np.complex128]
    residual: float


def channel_spectra(cs: ChannelSet, threads: int = 1) -> list[ChannelSpectrum]:
    """Dense eigendecomposition of every channel block."""

    def solve(index: int) -> ChannelSpectrum:
        channel = cs.channels[index]
        if channel.frobenius == 0.0:
            return ChannelSpectrum(channel.ell, np.zeros(channel.A.shape[0], dtype=complex), 0.0)
        try:
            lam, vecs = eig(channel.A, check_finite=True)
        except (LinAlgError, ValueError) as exc:
            raise NumericFailureError(
                f"eigensolver failed on channel {channel.ell}: {exc}", channel=channel.ell
            ) from exc
        resid = np.linalg.norm(channel.A @ vecs - vecs * lam, axis=0) / np.linalg.norm(vecs, axis=0)
        return ChannelSpectrum(channel.ell, lam, float(np.max(resid)) / channel.frobenius)

    return parallel_map(solve, range(len(cs.channels)), threads)


def _weighted_log_sum(spectra: Sequence[ChannelSpectrum], order: int) -> complex:
    total = 0j
    for spectrum in spectra:
        total += (2 * spectrum.ell + 1) * complex(np.sum(log1p_remainder(spectrum.eigenvalues, order)))
    return total


def det2(cs: ChannelSet, threads: int = 1) -> complex:
    """``det_2(I + Y0)`` over all channels, with multiplicities; NaN on overflow."""
    with np.errstate(over="ignore", invalid="ignore"):
        value = np.exp(_weighted_log_sum(channel_spectra(cs, threads), 2))
    return complex(value) if np.isfinite(value) else complex(math.nan, math.nan)


@dataclass(frozen=True, slots=True)
class DetDiagnostics:
    L: int
    n: int
    tail_bound: float
    eig_residual: float
    # Nyström value of psi_2, kept for comparison with the transform
    psi2_trace: complex = 0j


@dataclass(frozen=True, slots=True)
class DetEval:
    """Determinant data at one wave number."""

    k: complex
    psi: complex
    D4: complex
    psi2: complex
    psi3: complex
    log_abs_psi: float
    log_abs_D4: float
    diagnostics: DetDiagnostics
    log_psi: complex = 0j
    log_D4: complex = 0j

    @property
    def finite(self) -> bool:
        """False when psi overflows; log_psi and log_abs_psi are still valid."""
        return bool(np.isfinite(self.psi))

    def as_row(self) -> dict[str, float | int]:
        return {
            "k_re": self.k.real,
            "k_im": self.k.imag,
            "psi_re": self.psi.real,
            "psi_im": self.psi.imag,
            "logabs_psi": self.log_abs_psi,
            "logabs_D4": self.log_abs_D4,
            "psi2_re": self.psi2.real,
            "psi2_im": self.psi2.imag,
            "psi3_re": self.psi3.real,
            "psi3_im": self.psi3.imag,
            "L": self.diagnostics.L,
            "n": self.diagnostics.n,
            "tail_bound": self.diagnostics.tail_bound,
        }


def eval_channels(V: Potential, k: complex, cfg: NumericsConfig) -> ChannelSet:
    q = build_quadrature(V.R, cfg.quad_n)
    return channel_cutoff(V, k, q, cfg.ell_eps, L_max=cfg.L_max)


def eval_det(
    V: Potential, k: complex, cfg: NumericsConfig, *, threads: int | None = None
) -> DetEval:
    """psi, D4, psi_2 and psi_3 at ``k`` from one truncated channel set."""
    k = check_wavenumber(k)
    n = cfg.quad_n
    if V.is_zero:
        return DetEval(
            k=k, psi=1 + 0j, D4=1 + 0j, psi2=0j, psi3=0j, log_abs_psi=0.0, log_abs_D4=0.0,
            diagnostics=DetDiagnostics(L=0, n=n, tail_bound=0.0, eig_residual=0.0),
        )

    cs = eval_channels(V, k, cfg)
    spectra = channel_spectra(cs, cfg.resolved_threads if threads is None else threads)
    log_d4 = _weighted_log_sum(spectra, 4)
    psi2 = psi2_transform(V, k)
    psi3 = trace_power(cs, 3) / 3.0
    log_psi = -psi2 + _weighted_log_sum(spectra, 3)

    with np.errstate(over="ignore", invalid="ignore"):
        psi = complex(np.exp(log_psi))
        if np.isfinite(psi):
            D4 = psi * complex(np.exp(psi2 - psi3))
        else:
            # log_psi stays exact; psi itself is not representable
            logger.warning("psi overflows at k={}: log|psi| = {:.6g}", k, log_psi.real)
            psi = complex(math.nan, math.nan)
            D4 = complex(np.exp(log_d4))
    return DetEval(
        k=k,
        psi=psi,
        D4=D4,
        psi2=psi2,
        psi3=psi3,
        log_abs_psi=float(log_psi.real),
        log_abs_D4=float(log_d4.real),
        diagnostics=DetDiagnostics(
            L=cs.L,
            n=n,
            tail_bound=cs.tail_bound,
            eig_residual=max(s.residual for s in spectra),
            psi2_trace=trace_power(cs, 2) / 2.0,
        ),
        log_psi=log_psi,
        log_D4=log_d4,
    )


@dataclass(frozen=True, slots=True)
class ScanRow:
    k: complex
    result: DetEval | None
    error: str | None = None


def log_det_scan(
    V: Potential, k_list: Sequence[complex], cfg: NumericsConfig
) -> list[ScanRow]:
    """eval_det over ``k_list`` in input order; failures become row markers."""

    def one(k: complex) -> ScanRow:
        try:
            return ScanRow(k=complex(k), result=eval_det(V, k, cfg, threads=1))
        except BSLabError as exc:
            logger.warning("scan row k={} failed: {}", k, exc)
            return ScanRow(k=complex(k), result=None, error=f"{type(exc).__name__}: {exc}")

    return parallel_map(one, list(k_list), cfg.resolved_threads)


def scan_frame(rows: Sequence[ScanRow]) -> pd.DataFrame:
    """Rows as a frame with the scan CSV schema plus an ``error`` column."""
    records: list[dict[str, object]] = []
    for row in rows:
        if row.result is not None:
            record: dict[str, object] = dict(row.result.as_row())
            record["error"] = ""
        else:
            record = {column: math.nan for column in SCAN_COLUMNS}
            record.update({"k_re": row.k.real, "k_im": row.k.imag, "error": row.error or ""})
        records.append(record)
    return pd.DataFrame.from_records(records, columns=[*SCAN_COLUMNS, "error"])


# ---------------------------------------------------------------------------
# Closed-form psi_2 from the autocorrelation
# ---------------------------------------------------------------------------


def psi2_closed(V: Potential, k: complex) -> complex:
    """``psi_2(k) = int_0^{2R} exp(2ikt) gamma(t) dt`` by adaptive quadrature."""
    k = check_wavenumber(k, allow_zero=True)
    if V.is_zero:
        return 0j

    upper = 2.0 * V.R
    omega = 2.0 * k.real
    decay = 2.0 * k.imag

    @lru_cache(maxsize=None)
    def gamma(t: float) -> complex:
        return complex(autocorrelation(V, t))

    def part(t: float, which: str) -> float:
        value = gamma(t) * math.exp(-decay * t)
        return value.real if which == "re" else value.imag

    opts = {"epsabs": 0.0, "epsrel": 1e-11, "limit": 400}
    if omega == 0.0:
        # concentrate nodes where exp(-decay t) lives
        points = [min(upper, 20.0 / decay)] if decay > 0 and 20.0 / decay < upper else None
        re = quad(part, 0.0, upper, args=("re",), points=points, **opts)[0]
        im = quad(part, 0.0, upper, args=("im",), points=points, **opts)[0]
        return complex(re, im)

    cos_re = quad(part, 0.0, upper, args=("re",), weight="cos", wvar=omega, **opts)[0]
    sin_re = quad(part, 0.0, upper, args=("re",), weight="sin", wvar=omega, **opts)[0]
    cos_im = quad(part, 0.0, upper, args=("im",), weight="cos", wvar=omega, **opts)[0]
    sin_im = quad(part, 0.0, upper, args=("im",), weight="sin", wvar=omega, **opts)[0]
    return complex(cos_re - sin_im, sin_re + cos_im)


_GAMMA_ORDER = 16
_GAMMA_MIN_PANELS = 64


@lru_cache(maxsize=16)
def _gamma_table(V: Potential, panels: int) -> tuple[NDArray[np.float64], NDArray[np.complex128]]:
    """Composite Gauss-Legendre nodes on ``[0, 2R]`` and ``weights * gamma``."""
    x, w = np.polynomial.legendre.leggauss(_GAMMA_ORDER)
    edges = np.linspace(0.0, 2.0 * V.R, panels + 1)
    half = 0.5 * np.diff(edges)
    t = (edges[:-1, None] + half[:, None] * (x[None, :] + 1.0)).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return t, weights * autocorrelation(V, t)


def psi2_transform(V: Potential, k: complex) -> complex:
    """
    psi_2 from a tabulated autocorrelation. Panels double until each one spans
    less than a period of ``exp(2ikt)``; the table is cached per potential.
    """
    k = check_wavenumber(k, allow_zero=True)
    if V.is_zero:
        return 0j
    panels = _GAMMA_MIN_PANELS
    while panels < 2.0 * abs(k) * V.R:
        panels *= 2
    t, wg = _gamma_table(V, panels)
    return complex(np.dot(wg, np.exp(2j * k * t)))


def hs_norm_sq_exact(V: Potential, k: complex) -> float:
    """``||Y0(k)||_{B_2}^2 = 2 Re psi_2[|V|](i Im k)``."""
    k = check_wavenumber(k, allow_zero=True)
    return 2.0 * psi2_transform(V.modulus(), 1j * k.imag).real


@dataclass(frozen=True, slots=True)
class AsymptoticRow:
    tau: float
    convention_gap: float
    scaled_decay: float


def log_psi_asymptotics(
    V: Potential, taus: Sequence[float], cfg: NumericsConfig
) -> list[AsymptoticRow]:
    """
    Along ``k = i tau``: the gap ``|log psi + psi_2 - psi_3 - log D4|`` between
    eigenvalue sums and trace powers (zero up to rounding) and ``|log psi + psi_2| * tau^(1/2)``, which stays
    bounded because ``log psi + psi_2 = O(|k|^(-1/2))``.
    """
    rows = []
    for tau in taus:
        det = eval_det(V, 1j * tau, cfg)
        gap = abs(det.log_psi + det.psi2 - det.psi3 - det.log_D4)
        rows.append(
            AsymptoticRow(
                tau=float(tau),
                convention_gap=float(gap),
                scaled_decay=float(abs(det.log_psi + det.psi2) * math.sqrt(tau)),
            )
        )
    return rows


__all__ = [
    "C_STAR",
    "SCAN_COLUMNS",
    "ChannelSpectrum",
    "DetDiagnostics",
    "DetEval",
    "ScanRow",
    "AsymptoticRow",
    "channel_spectra",
    "det2",
    "eval_det",
    "eval_channels",
    "log_det_scan",
    "log1p_remainder",
    "psi2_closed",
    "psi2_transform",
    "hs_norm_sq_exact",
    "scan_frame",
    "log_psi_asymptotics",
]
