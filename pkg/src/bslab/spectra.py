"""
Zeros of psi in the upper half-plane.

Zeros ``k_j`` of ``psi`` are the square roots of the eigenvalues
``lambda_j = k_j^2`` of ``-Laplacian + V``. They are counted with the argument
principle on rectangles, isolated by recursive subdivision and refined with
Newton's method (step scaled by the cell multiplicity). :func:`extrapolate_zero`
sharpens a located zero by combining two quadrature orders.
"""

from __future__ import annotations

import cmath
import math
from collections.abc import Sequence
from dataclasses import dataclass, field, replace

import numpy as np
from loguru import logger

from .bsop import channel_cutoff, build_quadrature, operator_norm
from .config import NumericsConfig
from .det import eval_det
from .errors import (
    BoundaryConflictError,
    InvalidArgumentError,
    OutOfRangeError,
    ResolutionError,
)
from .potential import Potential
from .utils import parallel_map

# off-centre split so that cell edges avoid the symmetry axis Re k = 0
_SPLIT_FRACTIONS = (0.5 + 0.0731, 0.5 - 0.0917, 0.5 + 0.1613)
_WINDING_SHARP = 0.05
_WINDING_ACCEPT = 0.25
_CONTOUR_REFINEMENTS = 2
_NEWTON_ITERATIONS = 60

R0_GRID_MIN = 1e-2
R0_LIMIT = 100.0
R0_ARC_POINTS = 32


@dataclass(frozen=True, slots=True)
class Rect:
    """Axis-parallel rectangle ``[re_min, re_max] x [im_min, im_max]``."""

    re_min: float
    re_max: float
    im_min: float
    im_max: float

    def __post_init__(self) -> None:
        if not (self.re_min < self.re_max and self.im_min < self.im_max):
            raise InvalidArgumentError(f"degenerate rectangle {self}")

    @classmethod
    def from_tuple(cls, values: Sequence[float]) -> Rect:
        re_min, re_max, im_min, im_max = (float(v) for v in values)
        return cls(re_min, re_max, im_min, im_max)

    @property
    def width(self) -> float:
        return self.re_max - self.re_min

    @property
    def height(self) -> float:
        return self.im_max - self.im_min

    @property
    def center(self) -> complex:
        return complex(0.5 * (self.re_min + self.re_max), 0.5 * (self.im_min + self.im_max))

    def contains(self, k: complex) -> bool:
        return self.re_min <= k.real <= self.re_max and self.im_min <= k.imag <= self.im_max

    def corners(self) -> tuple[complex, complex, complex, complex]:
        return (
            complex(self.re_min, self.im_min),
            complex(self.re_max, self.im_min),
            complex(self.re_max, self.im_max),
            complex(self.re_min, self.im_max),
        )

    def split(self, fraction: float) -> list[Rect]:
        """Split along the long side only when the aspect ratio exceeds 2."""
        re_cut = self.re_min + fraction * self.width
        im_cut = self.im_min + fraction * self.height
        if self.height > 2.0 * self.width:
            return [
                Rect(self.re_min, self.re_max, self.im_min, im_cut),
                Rect(self.re_min, self.re_max, im_cut, self.im_max),
            ]
        if self.width > 2.0 * self.height:
            return [
                Rect(self.re_min, re_cut, self.im_min, self.im_max),
                Rect(re_cut, self.re_max, self.im_min, self.im_max),
            ]
        return [
            Rect(self.re_min, re_cut, self.im_min, im_cut),
            Rect(re_cut, self.re_max, self.im_min, im_cut),
            Rect(self.re_min, re_cut, im_cut, self.im_max),
            Rect(re_cut, self.re_max, im_cut, self.im_max),
        ]

    def as_list(self) -> list[float]:
        return [self.re_min, self.re_max, self.im_min, self.im_max]


@dataclass(frozen=True, slots=True)
class Zero:
    k: complex
    multiplicity: int
    newton_residual: float

    def __post_init__(self) -> None:
        if self.k.imag <= 0:
            raise InvalidArgumentError(f"zeros live in the open upper half-plane, got {self.k}")
        if self.multiplicity < 1:
            raise InvalidArgumentError("multiplicity must be positive")

    @property
    def eigenvalue(self) -> complex:
        """``lambda = k^2``, the eigenvalue of the Schrödinger operator."""
        return self.k * self.k

    def to_dict(self) -> dict[str, float | int]:
        lam = self.eigenvalue
        return {
            "k_re": self.k.real,
            "k_im": self.k.imag,
            "mult": self.multiplicity,
            "lambda_re": lam.real,
            "lambda_im": lam.imag,
            "residual": self.newton_residual,
        }


def blaschke_coeffs(zeros: Sequence[Zero], nmax: int) -> list[float]:
    """``B_n = 2 sum_j m_j Im(k_j^(n+1))`` for ``n = 0..nmax``."""
    if nmax < 0:
        raise InvalidArgumentError(f"nmax must be >= 0, got {nmax}")
    return [
        2.0 * sum(z.multiplicity * (z.k ** (n + 1)).imag for z in zeros)
        for n in range(nmax + 1)
    ]


@dataclass(frozen=True)
class ZeroSet:
    """Located zeros ordered by decreasing ``Im k``."""

    zeros: tuple[Zero, ...] = ()
    B: tuple[float, ...] = (0.0,)
    r0: float = 0.0
    search_rect: Rect | None = None
    unresolved: tuple[Rect, ...] = field(default=())

    @classmethod
    def from_zeros(
        cls,
        zeros: Sequence[Zero],
        nmax: int,
        *,
        r0: float | None = None,
        search_rect: Rect | None = None,
        unresolved: Sequence[Rect] = (),
    ) -> ZeroSet:
        ordered = tuple(sorted(zeros, key=lambda z: (-z.k.imag, z.k.real)))
        radius = max((abs(z.k) for z in ordered), default=0.0)
        if r0 is not None:
            radius = max(radius, r0)
        return cls(
            zeros=ordered,
            B=tuple(blaschke_coeffs(ordered, nmax)),
            r0=radius,
            search_rect=search_rect,
            unresolved=tuple(unresolved),
        )

    @property
    def count(self) -> int:
        return sum(z.multiplicity for z in self.zeros)

    @property
    def nmax(self) -> int:
        return len(self.B) - 1

    def without(self, index: int) -> ZeroSet:
        """Copy with one zero removed (ablation studies)."""
        kept = [z for i, z in enumerate(self.zeros) if i != index]
        return ZeroSet.from_zeros(kept, self.nmax, r0=self.r0, search_rect=self.search_rect,
                                  unresolved=self.unresolved)

    def to_dict(self) -> dict[str, object]:
        return {
            "zeros": [z.to_dict() for z in self.zeros],
            "B": list(self.B),
            "r0": self.r0,
            "search_rect": self.search_rect.as_list() if self.search_rect else None,
            "unresolved": [rect.as_list() for rect in self.unresolved],
        }


# ---------------------------------------------------------------------------
# Argument principle
# ---------------------------------------------------------------------------


class _LogPsi:
    """Evaluates psi and its logarithm for one potential and settings."""

    def __init__(self, V: Potential, cfg: NumericsConfig) -> None:
        self.V = V
        self.cfg = cfg
        self.threads = cfg.resolved_threads

    def log_psi(self, k: complex) -> complex:
        return eval_det(self.V, k, self.cfg, threads=1).log_psi

    def psi(self, k: complex) -> complex:
        return eval_det(self.V, k, self.cfg, threads=1).psi

    def step(self, k: complex) -> float:
        return self.cfg.diff_step * max(1.0, abs(k))

    def log_derivatives(self, ks: Sequence[complex]) -> tuple[np.ndarray, np.ndarray]:
        """Central-difference ``psi'/psi`` and an estimate of ``log|psi|`` at each k."""
        shifted = [k + s * self.step(k) for k in ks for s in (1.0, -1.0)]
        logs = parallel_map(self.log_psi, shifted, self.threads)
        plus = np.asarray(logs[0::2], dtype=complex)
        minus = np.asarray(logs[1::2], dtype=complex)
        delta = plus - minus
        # log psi is a sum of principal logs; remove 2 pi i jumps
        delta -= 2j * np.pi * np.round(delta.imag / (2.0 * np.pi))
        steps = np.asarray([self.step(k) for k in ks])
        return delta / (2.0 * steps), 0.5 * (plus.real + minus.real)


def _winding(ev: _LogPsi, rect: Rect, panels: int) -> complex:
    order = ev.cfg.contour_order
    x, w = np.polynomial.legendre.leggauss(order)
    corners = rect.corners()
    ks: list[complex] = []
    weights: list[complex] = []
    for a, b in zip(corners, corners[1:] + corners[:1], strict=True):
        for p in range(panels):
            s0, s1 = p / panels, (p + 1) / panels
            s = s0 + 0.5 * (s1 - s0) * (x + 1.0)
            ks.extend(a + (b - a) * s)
            weights.extend(0.5 * (s1 - s0) * w * (b - a))

    derivative, log_abs = ev.log_derivatives(ks)
    if np.any(log_abs < math.log(ev.cfg.tol_edge)):
        worst = ks[int(np.argmin(log_abs))]
        raise BoundaryConflictError(f"psi nearly vanishes on the contour near k={worst}", k=worst)
    return complex(np.dot(np.asarray(weights), derivative) / (2j * math.pi))


def _check_rect(rect: Rect, cfg: NumericsConfig) -> None:
    if rect.im_min < cfg.delta_floor:
        raise InvalidArgumentError(
            f"rectangle must lie above Im k = {cfg.delta_floor}, got im_min={rect.im_min}"
        )


def _count(ev: _LogPsi, rect: Rect, panels: int) -> int:
    winding = 0j
    nearest = 0
    for _ in range(_CONTOUR_REFINEMENTS + 1):
        winding = _winding(ev, rect, panels)
        nearest = round(winding.real)
        if abs(winding - nearest) < _WINDING_SHARP:
            break
        panels *= 2
    else:
        if abs(winding - nearest) > _WINDING_ACCEPT:
            raise ResolutionError(f"winding number {winding} over {rect} is not an integer", winding=winding)
        logger.warning("winding {} over {} accepted as {}", winding, rect, nearest)
    if nearest < 0:
        # psi is entire
        raise ResolutionError(f"negative winding number {winding} over {rect}", winding=winding)
    return nearest


def count_zeros(V: Potential, rect: Rect, cfg: NumericsConfig) -> int:
    """Number of zeros of psi inside ``rect`` by the argument principle."""
    _check_rect(rect, cfg)
    if V.is_zero:
        return 0
    return _count(_LogPsi(V, cfg), rect, cfg.contour_panels)


# ---------------------------------------------------------------------------
# Localization
# ---------------------------------------------------------------------------


def _newton(
    ev: _LogPsi,
    start: complex,
    multiplicity: int,
    cell: Rect,
    tol: float,
    *,
    max_iter: int = _NEWTON_ITERATIONS,
) -> tuple[complex, float] | None:
    """Newton on psi with step ``m psi / psi'``; None unless it ends in the cell with ``|psi| <= tol``."""
    margin = 0.1 * max(cell.width, cell.height)
    k = start
    for _ in range(max_iter):
        h = ev.step(k)
        values = parallel_map(ev.psi, [k, k + h, k - h], min(3, ev.threads))
        value = values[0]
        if abs(value) <= tol:
            return (k, abs(value)) if cell.contains(k) else None
        slope = (values[1] - values[2]) / (2.0 * h)
        if slope == 0:
            return None
        update = multiplicity * value / slope
        k = k - update
        if not (
            cell.re_min - margin <= k.real <= cell.re_max + margin
            and max(cell.im_min - margin, ev.cfg.delta_floor) <= k.imag <= cell.im_max + margin
        ):
            return None
        if abs(update) <= 1e-15 * max(1.0, abs(k)):
            break
    residual = abs(ev.psi(k))
    if not (residual <= tol and cell.contains(k)):
        logger.debug("Newton from {} stopped at {} with |psi|={:.2e}", start, k, residual)
        return None
    return k, residual


def _confirm(ev: _LogPsi, k: complex, cell: Rect, expected: int) -> bool:
    """Small box around the Newton limit must carry the whole cell count."""
    radius = 0.25 * min(cell.width, cell.height, k.imag - ev.cfg.delta_floor)
    radius = min(radius, 1e-2 * max(1.0, abs(k)))
    if radius <= 0:
        return False
    box = Rect(k.real - radius, k.real + radius, k.imag - radius, k.imag + radius)
    try:
        return _count(ev, box, 1) == expected
    except (BoundaryConflictError, ResolutionError):
        return False


@dataclass
class _Search:
    ev: _LogPsi
    tol: float
    max_depth: int
    zeros: list[Zero] = field(default_factory=list)
    unresolved: list[Rect] = field(default_factory=list)

    def resolve(self, cell: Rect, count: int, depth: int) -> None:
        if count <= 0:
            return

        found = _newton(self.ev, cell.center, count, cell, self.tol)
        if found is not None and _confirm(self.ev, found[0], cell, count):
            k, residual = found
            logger.debug("zero k={} multiplicity {} (|psi|={:.2e})", k, count, residual)
            self.zeros.append(Zero(k=k, multiplicity=count, newton_residual=residual))
            return

        if depth >= self.max_depth:
            logger.warning("cell {} with {} zero(s) left unresolved", cell, count)
            self.unresolved.append(cell)
            return

        children, counts = self._split(cell)
        if children is None:
            self.unresolved.append(cell)
            return
        if sum(counts) != count:
            logger.warning("subdivision of {} counts {} != {}", cell, sum(counts), count)
        for child, child_count in zip(children, counts, strict=True):
            self.resolve(child, child_count, depth + 1)

    def _split(self, cell: Rect) -> tuple[list[Rect] | None, list[int]]:
        for fraction in _SPLIT_FRACTIONS:
            children = cell.split(fraction)
            try:
                counts = [_count(self.ev, child, self.ev.cfg.contour_panels) for child in children]
            except BoundaryConflictError:
                continue
            return children, counts
        logger.warning("every split of {} hits a zero on an edge", cell)
        return None, []


def locate_zeros(
    V: Potential,
    rect: Rect,
    tol: float,
    cfg: NumericsConfig,
    *,
    estimate_r0: bool = True,
) -> ZeroSet:
    """
    Zeros of psi in ``rect`` with multiplicities, sorted by decreasing Im k.

    Cells that cannot be resolved within ``cfg.max_depth`` subdivisions are
    returned in ``unresolved``. ``r0`` is the larger of the largest located
    ``|k_j|`` and :func:`r0_estimate`; ``estimate_r0=False`` skips the estimate.
    """
    if not tol > 0:
        raise InvalidArgumentError(f"zero tolerance must be positive, got {tol}")
    _check_rect(rect, cfg)
    if V.is_zero:
        return ZeroSet.from_zeros([], cfg.nmax, search_rect=rect)

    ev = _LogPsi(V, cfg)
    total = _count(ev, rect, cfg.contour_panels)
    search = _Search(ev=ev, tol=tol, max_depth=cfg.max_depth)
    search.resolve(rect, total, 0)
    logger.info("located {} zero(s), {} unresolved cell(s)", len(search.zeros), len(search.unresolved))

    r0 = r0_estimate(V, cfg) if estimate_r0 else None
    return ZeroSet.from_zeros(
        search.zeros, cfg.nmax, r0=r0, search_rect=rect, unresolved=search.unresolved
    )


def extrapolate_zero(V: Potential, zero: Zero, cfg: NumericsConfig, *, tol: float | None = None) -> Zero:
    """
    Sharpen a zero located at quadrature order ``n = cfg.quad_n``.

    The radial Green function has a derivative jump on ``r = r'``, so Nyström
    zeros move like ``n^-2``. Newton restarts from ``zero.k`` at order ``2n``
    and the two locations are combined as ``(4 k_2n - k_n) / 3``.
    """
    tol = cfg.tol_zero if tol is None else tol
    fine = _LogPsi(V, replace(cfg, quad_n=2 * cfg.quad_n))
    k = zero.k
    radius = min(1e-2 * max(1.0, abs(k)), 0.5 * (k.imag - cfg.delta_floor))
    cell = Rect(k.real - radius, k.real + radius, k.imag - radius, k.imag + radius)
    found = _newton(fine, k, zero.multiplicity, cell, tol)
    if found is None:
        raise ResolutionError(f"no zero of psi at order {2 * cfg.quad_n} near {k}")
    k_fine, residual = found
    sharpened = (4.0 * k_fine - k) / 3.0
    logger.debug("zero {} -> {} at order {} (shift {:.2e})", k, sharpened, 2 * cfg.quad_n, abs(sharpened - k))
    return Zero(k=sharpened, multiplicity=zero.multiplicity, newton_residual=residual)


# ---------------------------------------------------------------------------
# Radius r0
# ---------------------------------------------------------------------------


def _arc_norm(V: Potential, rho: float, cfg: NumericsConfig) -> float:
    q = build_quadrature(V.R, cfg.quad_n)
    ks = [rho * cmath.exp(1j * math.pi * j / (R0_ARC_POINTS - 1)) for j in range(R0_ARC_POINTS)]
    # the end points are real; keep them in the closed upper half-plane
    ks = [complex(k.real, max(k.imag, 0.0)) for k in ks]

    def norm_at(k: complex) -> float:
        return operator_norm(channel_cutoff(V, k, q, cfg.ell_eps, L_max=cfg.L_max))

    return max(parallel_map(norm_at, ks, cfg.resolved_threads))


def r0_estimate(V: Potential, cfg: NumericsConfig, *, rel_tol: float = 1e-3) -> float:
    """
    Smallest radius ``rho`` with ``max_{|k| = rho, Im k >= 0} ||Y0(k)|| <= 1/2``,
    from doubling then bisection. Zeros need ``||Y0|| >= 1``, so all of them
    lie inside this radius.
    """
    if V.is_zero:
        return R0_GRID_MIN
    if _arc_norm(V, R0_GRID_MIN, cfg) <= 0.5:
        return R0_GRID_MIN

    lo, hi = R0_GRID_MIN, 1.0
    while _arc_norm(V, hi, cfg) > 0.5:
        lo, hi = hi, 2.0 * hi
        if hi > R0_LIMIT:
            raise OutOfRangeError(f"operator norm stays above 1/2 up to |k| = {R0_LIMIT}")
    while hi - lo > rel_tol * hi:
        mid = 0.5 * (lo + hi)
        if _arc_norm(V, mid, cfg) <= 0.5:
            hi = mid
        else:
            lo = mid
    return hi


__all__ = [
    "Rect",
    "Zero",
    "ZeroSet",
    "blaschke_coeffs",
    "count_zeros",
    "extrapolate_zero",
    "locate_zeros",
    "r0_estimate",
]
