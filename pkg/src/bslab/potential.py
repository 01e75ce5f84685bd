"""
Radial complex potentials.

A :class:`Potential` is ``V(r) = g * shape(r)`` for one of a few profile kinds,
truncated to zero beyond a support radius ``R``. Norms, the autocorrelation
function and the moment integrals are computed from the radial profile only.
"""

from __future__ import annotations

import math
from collections.abc import Mapping
from dataclasses import dataclass, field, replace
from enum import Enum
from functools import cached_property
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd
from numpy.typing import ArrayLike, NDArray
from scipy.integrate import quad
from scipy.interpolate import CubicSpline

from .errors import ConfigError, InvalidArgumentError, UnsupportedError

# ln(1e16): profiles are cut where they fall below 1e-16 of their peak
_CUTOFF_LOG = 16.0 * math.log(10.0)

_AUTOCORR_ORDER = 48
_QUAD_OPTS: dict[str, Any] = {"epsabs": 0.0, "epsrel": 1e-12, "limit": 200}


class Profile(str, Enum):
    GAUSSIAN = "gaussian"
    SQUARE_WELL = "square_well"
    EXPONENTIAL = "exponential"
    TABLE = "table"


_DEFAULT_SMOOTHNESS = {
    Profile.GAUSSIAN: 4,
    Profile.SQUARE_WELL: 0,
    Profile.EXPONENTIAL: 0,
    Profile.TABLE: 0,
}


@dataclass(frozen=True)
class PotentialTable:
    """Sampled radial profile, optionally with its radial derivative."""

    r: tuple[float, ...]
    v: tuple[complex, ...]
    dv: tuple[complex, ...] | None = None

    def __post_init__(self) -> None:
        if len(self.r) < 4 or len(self.r) != len(self.v):
            raise InvalidArgumentError("table needs >= 4 samples with matching r and v")
        if self.dv is not None and len(self.dv) != len(self.r):
            raise InvalidArgumentError("table derivative column has the wrong length")
        if any(b <= a for a, b in zip(self.r, self.r[1:], strict=False)) or self.r[0] < 0:
            raise InvalidArgumentError("table radii must be nonnegative and strictly increasing")

    @classmethod
    def read_csv(cls, path: str | Path) -> PotentialTable:
        """Read columns ``r, v_re, v_im`` and optionally ``dv_re, dv_im``."""
        frame = pd.read_csv(path, comment="#")
        missing = {"r", "v_re", "v_im"} - set(frame.columns)
        if missing:
            raise ConfigError(f"potential table {path} lacks column(s) {sorted(missing)}")
        v = frame["v_re"].to_numpy() + 1j * frame["v_im"].to_numpy()
        dv = None
        if {"dv_re", "dv_im"} <= set(frame.columns):
            dv = tuple(frame["dv_re"].to_numpy() + 1j * frame["dv_im"].to_numpy())
        return cls(r=tuple(frame["r"].to_numpy(float)), v=tuple(v), dv=dv)


@dataclass(frozen=True)
class Potential:
    """
    Radial potential ``V(|x|) = amplitude * shape(|x|)``.

    ``width`` is the length scale ``a`` of the gaussian ``exp(-(r/a)^2)`` and the
    exponential ``exp(-r/a)`` profiles. For the square well the support radius
    is the well radius. ``smoothness_m`` asserts membership in the class W_m
    used by the trace formulas; it is never verified numerically.
    """

    profile: Profile
    amplitude: complex = 1.0
    width: float = 1.0
    support_radius: float | None = None
    smoothness_m: int | None = None
    table: PotentialTable | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "profile", Profile(self.profile))
        object.__setattr__(self, "amplitude", complex(self.amplitude))
        if not self.width > 0:
            raise InvalidArgumentError(f"width must be positive, got {self.width}")

        radius = self.support_radius
        if radius is None:
            if self.profile is Profile.GAUSSIAN:
                radius = self.width * math.sqrt(_CUTOFF_LOG)
            elif self.profile is Profile.EXPONENTIAL:
                radius = self.width * _CUTOFF_LOG
            elif self.profile is Profile.TABLE and self.table is not None:
                radius = self.table.r[-1]
            else:
                raise InvalidArgumentError(f"{self.profile.value} needs an explicit support radius R")
        if not radius > 0:
            raise InvalidArgumentError(f"support radius must be positive, got {radius}")
        object.__setattr__(self, "support_radius", float(radius))

        if self.profile is Profile.TABLE and self.table is None:
            raise InvalidArgumentError("table profile needs table data")
        if self.smoothness_m is None:
            object.__setattr__(self, "smoothness_m", _DEFAULT_SMOOTHNESS[self.profile])

    # -- constructors ------------------------------------------------------

    @classmethod
    def gaussian(cls, g: complex = 1.0, width: float = 1.0) -> Potential:
        return cls(Profile.GAUSSIAN, amplitude=g, width=width)

    @classmethod
    def square_well(cls, depth: float, radius: float = 1.0, *, g: complex | None = None) -> Potential:
        """Attractive well ``V = -depth`` for ``r <= radius`` (or amplitude ``g``)."""
        amplitude = -depth if g is None else g
        return cls(Profile.SQUARE_WELL, amplitude=amplitude, support_radius=radius)

    @classmethod
    def exponential(cls, g: complex = 1.0, width: float = 1.0) -> Potential:
        return cls(Profile.EXPONENTIAL, amplitude=g, width=width)

    @classmethod
    def zero(cls) -> Potential:
        return cls.gaussian(0.0)

    @classmethod
    def from_section(cls, section: Mapping[str, str]) -> Potential:
        """Build a potential from the ``[potential]`` config section."""
        known = {"profile", "g_re", "g_im", "width", "R", "smoothness_m", "table"}
        unknown = set(section) - known
        if unknown:
            raise ConfigError(f"unknown potential key(s): {', '.join(sorted(unknown))}")
        try:
            profile = Profile(section.get("profile", "gaussian"))
            g = complex(float(section.get("g_re", "1.0")), float(section.get("g_im", "0.0")))
            width = float(section.get("width", "1.0"))
            radius = float(section["R"]) if section.get("R") else None
            smooth = int(section["smoothness_m"]) if section.get("smoothness_m") else None
        except ValueError as exc:
            raise ConfigError(f"invalid potential section: {exc}") from exc

        table = None
        if profile is Profile.TABLE:
            if not section.get("table"):
                raise ConfigError("potential.table (CSV path) is required for profile=table")
            table = PotentialTable.read_csv(section["table"])
        try:
            return cls(profile, amplitude=g, width=width, support_radius=radius,
                       smoothness_m=smooth, table=table)
        except InvalidArgumentError as exc:
            raise ConfigError(str(exc)) from exc

    def scaled(self, factor: complex) -> Potential:
        """The potential ``factor * V`` on the same support."""
        return replace(self, amplitude=self.amplitude * factor)

    def modulus(self) -> Potential:
        """``|V|`` on the same support."""
        if self.profile is not Profile.TABLE:
            # analytic shapes are positive
            return replace(self, amplitude=complex(abs(self.amplitude)))
        assert self.table is not None
        table = PotentialTable(
            r=self.table.r,
            v=tuple(complex(abs(self.amplitude * v)) for v in self.table.v),
        )
        return replace(self, amplitude=1.0 + 0j, table=table)

    # -- evaluation --------------------------------------------------------

    @property
    def R(self) -> float:
        assert self.support_radius is not None
        return self.support_radius

    @property
    def is_zero(self) -> bool:
        return self.amplitude == 0

    @cached_property
    def _splines(self) -> tuple[CubicSpline, CubicSpline | None]:
        assert self.table is not None
        r = np.asarray(self.table.r)
        value = CubicSpline(r, np.asarray(self.table.v, dtype=complex))
        slope = None
        if self.table.dv is not None:
            slope = CubicSpline(r, np.asarray(self.table.dv, dtype=complex))
        return value, slope

    def _shape(self, r: NDArray[np.float64]) -> NDArray[np.complex128]:
        a = self.width
        if self.profile is Profile.GAUSSIAN:
            return np.exp(-((r / a) ** 2)).astype(complex)
        if self.profile is Profile.EXPONENTIAL:
            return np.exp(-r / a).astype(complex)
        if self.profile is Profile.SQUARE_WELL:
            return np.ones_like(r, dtype=complex)
        value, _ = self._splines
        return np.asarray(value(r), dtype=complex)

    def eval(self, r: ArrayLike) -> Any:
        """V(r), exactly zero for ``r > R``. Scalars in, scalar out."""
        radii = np.asarray(r, dtype=float)
        if np.any(radii < 0):
            raise InvalidArgumentError("radius must be nonnegative")
        out = np.zeros(radii.shape, dtype=complex)
        inside = radii <= self.R
        if self.amplitude != 0 and np.any(inside):
            out[inside] = self.amplitude * self._shape(radii[inside])
        return out[()] if out.ndim == 0 else out

    __call__ = eval

    def derivative(self, r: ArrayLike) -> Any:
        """Radial derivative V'(r), analytic per profile."""
        radii = np.asarray(r, dtype=float)
        if self.profile is Profile.SQUARE_WELL:
            raise UnsupportedError("square well has no bounded radial derivative")
        if self.profile is Profile.TABLE and self.table is not None and self.table.dv is None:
            raise UnsupportedError("table profile carries no derivative data")

        out = np.zeros(radii.shape, dtype=complex)
        inside = radii <= self.R
        if self.amplitude != 0 and np.any(inside):
            x = radii[inside]
            if self.profile is Profile.GAUSSIAN:
                out[inside] = self.amplitude * (-2.0 * x / self.width**2) * self._shape(x)
            elif self.profile is Profile.EXPONENTIAL:
                out[inside] = -self.amplitude / self.width * self._shape(x)
            else:
                _, slope = self._splines
                assert slope is not None
                out[inside] = self.amplitude * np.asarray(slope(x), dtype=complex)
        return out[()] if out.ndim == 0 else out

    def to_section(self) -> dict[str, str]:
        section = {
            "profile": self.profile.value,
            "g_re": repr(self.amplitude.real),
            "g_im": repr(self.amplitude.imag),
            "width": repr(self.width),
            "R": repr(self.R),
            "smoothness_m": str(self.smoothness_m),
        }
        return section


# ---------------------------------------------------------------------------
# Integrals
# ---------------------------------------------------------------------------


def _radial_integral(func: Any, R: float) -> complex:
    value, _ = quad(func, 0.0, R, complex_func=True, **_QUAD_OPTS)
    return complex(value)


def norm_lp(V: Potential, p: float) -> float:
    """L^p norm of V on R^3, ``(4 pi int |V|^p r^2 dr)^(1/p)``."""
    if p not in (1, 1.5, 2):
        raise InvalidArgumentError(f"norm_lp supports p in {{1, 3/2, 2}}, got {p}")
    if V.is_zero:
        return 0.0
    value, _ = quad(lambda r: abs(V.eval(r)) ** p * r * r, 0.0, V.R, **_QUAD_OPTS)
    return float((4.0 * math.pi * value) ** (1.0 / p))


@dataclass(frozen=True, slots=True)
class Moments:
    """Moment integrals of the large-k expansion of log psi."""

    Q0: complex
    Q2: complex | None = None

    @property
    def I_list(self) -> tuple[float, ...]:
        """``I_j = Im Q_j`` for j = 0..3 (odd ones vanish); shorter if Q2 is missing."""
        if self.Q2 is None:
            return (self.Q0.imag, 0.0)
        return (self.Q0.imag, 0.0, self.Q2.imag, 0.0)

    def Q(self, j: int) -> complex:
        if j == 0:
            return self.Q0
        if j % 2 == 1:
            return 0j
        if j == 2 and self.Q2 is not None:
            return self.Q2
        raise UnsupportedError(f"moment Q_{j} is not available")


def moments_q(V: Potential, order: int = 2) -> Moments:
    """
    ``Q0 = (1/16 pi) int V^2`` and, for ``order >= 2``,
    ``Q2 = (1/(3 pi 4^3)) int ((grad V)^2 + 2 V^3)``.

    Squares are complex squares, not moduli.
    """
    if V.is_zero:
        return Moments(Q0=0j, Q2=0j if order >= 2 else None)

    q0 = 0.25 * _radial_integral(lambda r: V.eval(r) ** 2 * r * r, V.R)
    if order < 2:
        return Moments(Q0=q0)

    if (V.smoothness_m or 0) < 1:
        raise UnsupportedError(
            f"Q2 needs a W_1 potential; {V.profile.value} is declared W_{V.smoothness_m}"
        )

    def integrand(r: float) -> complex:
        v = V.eval(r)
        dv = V.derivative(r)
        return complex((dv * dv + 2.0 * v**3) * r * r)

    q2 = _radial_integral(integrand, V.R) / 48.0
    return Moments(Q0=q0, Q2=q2)


def _gauss_nodes(a: float, b: float, order: int = _AUTOCORR_ORDER) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    x, w = np.polynomial.legendre.leggauss(order)
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


def _autocorrelation_A(V: Potential, t: float) -> complex:
    """Non-conjugated autocorrelation ``int V(x - t e) V(x) dx`` in bipolar coordinates."""
    R = V.R
    if t >= 2.0 * R:
        return 0j
    if t == 0.0:
        return 4.0 * math.pi * _radial_integral(lambda r: V.eval(r) ** 2 * r * r, R)

    # the inner limits change form at r = t, r = R - t and r = t - R
    breaks = sorted({0.0, R, *(b for b in (t, R - t, t - R) if 0.0 < b < R)})
    total = 0j
    for a, b in zip(breaks[:-1], breaks[1:], strict=False):
        r, wr = _gauss_nodes(a, b)
        lo = np.abs(r - t)
        hi = np.minimum(r + t, R)
        x, ws = np.polynomial.legendre.leggauss(_AUTOCORR_ORDER)
        span = np.clip(hi - lo, 0.0, None)
        s = lo[:, None] + 0.5 * span[:, None] * (x[None, :] + 1.0)
        inner = (V.eval(s) * s) @ ws * (0.5 * span)
        total += np.sum(wr * V.eval(r) * r * inner)
    return complex(2.0 * math.pi / t * total)


def autocorrelation(V: Potential, t: ArrayLike) -> Any:
    """
    ``gamma(t) = A(t) / (8 pi)`` where ``A`` is the non-conjugated
    autocorrelation of V. Vanishes for ``t >= 2R``.
    """
    ts = np.asarray(t, dtype=float)
    if np.any(ts < 0):
        raise InvalidArgumentError("autocorrelation needs t >= 0")
    if V.is_zero:
        zero = np.zeros(ts.shape, dtype=complex)
        return zero[()] if zero.ndim == 0 else zero
    out = np.array([_autocorrelation_A(V, float(item)) for item in ts.ravel()], dtype=complex)
    out = out.reshape(ts.shape) / (8.0 * math.pi)
    return out[()] if out.ndim == 0 else out


__all__ = [
    "Profile",
    "Potential",
    "PotentialTable",
    "Moments",
    "norm_lp",
    "moments_q",
    "autocorrelation",
]
