"""
Free-resolvent kernels and their partial-wave radial Green functions.

Spherical Bessel and Hankel functions of complex argument are tabulated as
mantissa/log-scale pairs: ``f_l(z) = mantissa * exp(log_scale)``. The
exponential factors ``exp(|Im z|)`` of ``j_l`` and ``exp(-Im z)`` of ``h_l`` are
kept in the log scale, so products ``j_l(k r_<) h_l(k r_>)`` never overflow
even when the factors individually would.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import InvalidArgumentError, OutOfRangeError, SingularKernelError

DEFAULT_L_MAX = 60
MILLER_MARGIN = 20
IM_Z_LIMIT = 700.0

_RESCALE = 1e100

ComplexArray = NDArray[np.complex128]
RealArray = NDArray[np.float64]


def check_wavenumber(k: complex, *, allow_zero: bool = False) -> complex:
    """Validate a wave number in the closed upper half-plane."""
    value = complex(k)
    if not (math.isfinite(value.real) and math.isfinite(value.imag)):
        raise InvalidArgumentError(f"wave number must be finite, got {value}")
    if value.imag < 0:
        raise InvalidArgumentError(f"wave number must satisfy Im k >= 0, got {value}")
    if value == 0 and not allow_zero:
        raise InvalidArgumentError("wave number must be nonzero")
    return value


def free_resolvent_kernel(x: ArrayLike, y: ArrayLike, k: complex) -> complex:
    """``exp(i k |x - y|) / (4 pi |x - y|)``, the kernel of (-Laplacian - k^2)^-1."""
    k = check_wavenumber(k, allow_zero=True)
    d = float(np.linalg.norm(np.asarray(x, dtype=float) - np.asarray(y, dtype=float)))
    if d == 0.0:
        raise SingularKernelError("free resolvent kernel is singular at x = y")
    return complex(np.exp(1j * k * d) / (4.0 * math.pi * d))


# ---------------------------------------------------------------------------
# Log-scaled recurrences
# ---------------------------------------------------------------------------


def _scaled_trig(z: ComplexArray) -> tuple[ComplexArray, ComplexArray, RealArray]:
    """``sin z`` and ``cos z`` times ``exp(-|Im z|)``, with the scale ``|Im z|``."""
    s = np.abs(z.imag)
    e_plus = np.exp(1j * z - s)
    e_minus = np.exp(-1j * z - s)
    return (e_plus - e_minus) / 2j, (e_plus + e_minus) / 2.0, s


def _upward(
    lmax: int, z: ComplexArray, f0: ComplexArray, f1: ComplexArray, log0: RealArray
) -> tuple[ComplexArray, RealArray]:
    mant = np.empty((lmax + 1, z.size), dtype=complex)
    logs = np.empty((lmax + 1, z.size))
    mant[0], logs[0] = f0, log0
    if lmax == 0:
        return mant, logs

    mant[1], logs[1] = f1, log0
    scale = log0.copy()
    prev, cur = f0.copy(), f1.copy()
    for n in range(1, lmax):
        nxt = (2 * n + 1) / z * cur - prev
        prev, cur = cur, nxt
        big = np.abs(cur) > _RESCALE
        if big.any():
            factor = np.abs(cur[big])
            cur[big] /= factor
            prev[big] /= factor
            scale[big] += np.log(factor)
        mant[n + 1], logs[n + 1] = cur, scale
    return mant, logs


def _miller(lmax: int, z: ComplexArray) -> tuple[ComplexArray, RealArray]:
    """Downward recurrence for j_0..j_lmax, normalized by j_0 or j_1."""
    start = lmax + MILLER_MARGIN + int(math.ceil(float(np.max(np.abs(z)))))
    mant = np.empty((lmax + 1, z.size), dtype=complex)
    logs = np.empty((lmax + 1, z.size))

    nxt = np.zeros(z.size, dtype=complex)
    cur = np.ones(z.size, dtype=complex)
    scale = np.zeros(z.size)
    for n in range(start, 0, -1):
        prev = (2 * n + 1) / z * cur - nxt
        nxt, cur = cur, prev
        big = np.abs(cur) > _RESCALE
        if big.any():
            factor = np.abs(cur[big])
            cur[big] /= factor
            nxt[big] /= factor
            scale[big] += np.log(factor)
        if n - 1 <= lmax:
            mant[n - 1], logs[n - 1] = cur, scale

    sin_s, cos_s, s = _scaled_trig(z)
    j0 = sin_s / z
    ref = np.zeros(z.size, dtype=int)
    exact = j0
    if lmax >= 1:
        j1 = sin_s / z**2 - cos_s / z
        use_j1 = np.abs(j1) > np.abs(j0)
        ref = np.where(use_j1, 1, 0)
        exact = np.where(use_j1, j1, j0)

    cols = np.arange(z.size)
    factor = exact / mant[ref, cols]
    mant *= factor[None, :]
    logs = logs - logs[ref, cols][None, :] + s[None, :]
    return mant, logs


def bessel_j_table(lmax: int, z: ArrayLike) -> tuple[ComplexArray, RealArray]:
    """
    Log-scaled table of ``j_0..j_lmax`` at every point of ``z``.

    Returns ``(mantissa, log_scale)`` with shape ``(lmax + 1, z.size)``. Upward
    recurrence is used where ``|z| > lmax``, Miller's downward recurrence
    elsewhere.
    """
    zz = np.atleast_1d(np.asarray(z, dtype=complex)).ravel()
    mant = np.zeros((lmax + 1, zz.size), dtype=complex)
    logs = np.zeros((lmax + 1, zz.size))

    origin = zz == 0
    mant[0, origin] = 1.0

    up = (np.abs(zz) > lmax) & ~origin
    if up.any():
        zu = zz[up]
        sin_s, cos_s, s = _scaled_trig(zu)
        j0 = sin_s / zu
        j1 = sin_s / zu**2 - cos_s / zu
        mant[:, up], logs[:, up] = _upward(lmax, zu, j0, j1, s)

    down = ~up & ~origin
    if down.any():
        mant[:, down], logs[:, down] = _miller(lmax, zz[down])
    return _normalize(mant, logs)


def hankel1_table(lmax: int, z: ArrayLike) -> tuple[ComplexArray, RealArray]:
    """Log-scaled table of ``h^(1)_0..h^(1)_lmax`` by upward recurrence."""
    zz = np.atleast_1d(np.asarray(z, dtype=complex)).ravel()
    if np.any(zz == 0):
        raise SingularKernelError("spherical Hankel function is singular at z = 0")
    phase = np.exp(1j * zz.real)
    h0 = -1j * phase / zz
    h1 = -(zz + 1j) / zz**2 * phase
    return _normalize(*_upward(lmax, zz, h0, h1, -zz.imag))


def _normalize(mant: ComplexArray, logs: RealArray) -> tuple[ComplexArray, RealArray]:
    """Move every magnitude into the log scale; mantissas end up on the unit circle."""
    size = np.abs(mant)
    nonzero = size > 0
    safe = np.where(nonzero, size, 1.0)
    return mant / safe, logs + np.log(safe)


def _restore(mant: ComplexArray, logs: RealArray) -> ComplexArray:
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        values = np.exp(np.log(mant) + logs)
    values = np.where(mant == 0, 0j, values)
    if not np.all(np.isfinite(values)):
        raise OutOfRangeError("spherical function value overflows double precision")
    return values


def _check_order(ell: int, l_max: int) -> None:
    if ell < 0 or int(ell) != ell:
        raise InvalidArgumentError(f"order must be a nonnegative integer, got {ell}")
    if ell > l_max:
        raise InvalidArgumentError(f"order {ell} exceeds L_max = {l_max}")


def _check_argument(z: ComplexArray) -> None:
    if np.any(np.abs(z.imag) > IM_Z_LIMIT) or not np.all(np.isfinite(z)):
        raise OutOfRangeError(f"|Im z| beyond {IM_Z_LIMIT} is out of range")


def _single(table: tuple[ComplexArray, RealArray], ell: int, shape: tuple[int, ...]) -> complex | ComplexArray:
    mant, logs = table
    values = _restore(mant[ell], logs[ell]).reshape(shape)
    return complex(values) if values.ndim == 0 else values


def spherical_bessel_j(ell: int, z: ArrayLike, *, l_max: int = DEFAULT_L_MAX) -> complex | ComplexArray:
    """Regular spherical Bessel function ``j_ell(z)``."""
    _check_order(ell, l_max)
    zz = np.asarray(z, dtype=complex)
    _check_argument(zz)
    return _single(bessel_j_table(ell, zz), ell, zz.shape)


def spherical_hankel1(ell: int, z: ArrayLike, *, l_max: int = DEFAULT_L_MAX) -> complex | ComplexArray:
    """Outgoing spherical Hankel function ``h^(1)_ell(z) = j_ell + i y_ell``."""
    _check_order(ell, l_max)
    zz = np.asarray(z, dtype=complex)
    _check_argument(zz)
    return _single(hankel1_table(ell, zz), ell, zz.shape)


def spherical_bessel_y(ell: int, z: ArrayLike, *, l_max: int = DEFAULT_L_MAX) -> complex | ComplexArray:
    """Irregular spherical Bessel function ``y_ell = -i (h^(1)_ell - j_ell)``."""
    h = spherical_hankel1(ell, z, l_max=l_max)
    j = spherical_bessel_j(ell, z, l_max=l_max)
    return -1j * (h - j)


def spherical_derivative(values: ArrayLike, z: complex) -> ComplexArray:
    """
    Derivatives ``f_l'(z)`` from a table ``f_0..f_L`` of any spherical
    Bessel-type family: ``f_0' = -f_1`` and ``f_l' = f_{l-1} - (l+1)/z f_l``.
    """
    f = np.asarray(values, dtype=complex)
    if f.shape[0] < 2:
        raise InvalidArgumentError("need at least orders 0 and 1")
    out = np.empty_like(f)
    out[0] = -f[1]
    ells = np.arange(1, f.shape[0]).reshape((-1,) + (1,) * (f.ndim - 1))
    out[1:] = f[:-1] - (ells + 1) / z * f[1:]
    return out


# ---------------------------------------------------------------------------
# Radial Green functions
# ---------------------------------------------------------------------------


def _green_from_tables(
    k: complex,
    j_table: tuple[ComplexArray, RealArray],
    h_table: tuple[ComplexArray, RealArray],
    r_lo: RealArray,
    r_hi: RealArray,
) -> ComplexArray:
    jm, jl = j_table
    hm, hl = h_table
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        product = np.exp(np.log(jm) + np.log(hm) + (jl + hl))
    product = np.where((jm == 0) | (hm == 0), 0j, product)
    values = 1j * k * product * r_lo * r_hi
    if not np.all(np.isfinite(values)):
        raise OutOfRangeError(f"radial Green function overflows at k = {k}")
    return values


def radial_green(
    ell: int, k: complex, r: ArrayLike, rp: ArrayLike, *, l_max: int = DEFAULT_L_MAX
) -> complex | ComplexArray:
    """
    ``g_ell(k; r, r') = i k j_ell(k r_<) h^(1)_ell(k r_>) r r'``.

    This is the kernel of the ell-th partial-wave block of the free resolvent
    on L^2((0, inf), dr).
    """
    _check_order(ell, l_max)
    k = check_wavenumber(k)
    rr, rrp = np.broadcast_arrays(np.asarray(r, dtype=float), np.asarray(rp, dtype=float))
    if np.any(rr <= 0) or np.any(rrp <= 0):
        raise InvalidArgumentError("radial Green function needs r, r' > 0")
    lo = np.minimum(rr, rrp).ravel()
    hi = np.maximum(rr, rrp).ravel()
    _check_argument(k * hi)
    j_table = bessel_j_table(ell, k * lo)
    h_table = hankel1_table(ell, k * hi)
    values = _green_from_tables(
        k, (j_table[0][ell], j_table[1][ell]), (h_table[0][ell], h_table[1][ell]), lo, hi
    ).reshape(rr.shape)
    return complex(values) if values.ndim == 0 else values


def radial_green_series(lmax: int, k: complex, r: float, rp: float) -> ComplexArray:
    """``g_0 .. g_lmax`` at one point pair, for partial-wave sums."""
    k = check_wavenumber(k)
    if r <= 0 or rp <= 0:
        raise InvalidArgumentError("radial Green function needs r, r' > 0")
    lo, hi = min(r, rp), max(r, rp)
    _check_argument(np.asarray([k * hi]))
    jm, jl = bessel_j_table(lmax, k * lo)
    hm, hl = hankel1_table(lmax, k * hi)
    return _green_from_tables(k, (jm[:, 0], jl[:, 0]), (hm[:, 0], hl[:, 0]), np.asarray(lo), np.asarray(hi))


@dataclass(frozen=True)
class RadialGreenTable:
    """
    Bessel/Hankel tables at ``k * r_i`` for increasing nodes ``r_i``.

    One table serves every channel ``ell <= l_max`` at a fixed ``k``.
    """

    k: complex
    nodes: RealArray
    l_max: int
    j_mant: ComplexArray
    j_log: RealArray
    h_mant: ComplexArray
    h_log: RealArray

    @classmethod
    def build(cls, k: complex, nodes: ArrayLike, l_max: int) -> RadialGreenTable:
        k = check_wavenumber(k)
        r = np.asarray(nodes, dtype=float)
        if r.ndim != 1 or np.any(r <= 0) or np.any(np.diff(r) <= 0):
            raise InvalidArgumentError("nodes must be positive and strictly increasing")
        jm, jl = bessel_j_table(l_max, k * r)
        hm, hl = hankel1_table(l_max, k * r)
        return cls(k=k, nodes=r, l_max=l_max, j_mant=jm, j_log=jl, h_mant=hm, h_log=hl)

    def matrix(self, ell: int) -> ComplexArray:
        """``G_ij = g_ell(k; r_i, r_j)``, symmetric."""
        _check_order(ell, self.l_max)
        idx = np.arange(self.nodes.size)
        lo = np.minimum.outer(idx, idx)
        hi = np.maximum.outer(idx, idx)
        return _green_from_tables(
            self.k,
            (self.j_mant[ell][lo], self.j_log[ell][lo]),
            (self.h_mant[ell][hi], self.h_log[ell][hi]),
            self.nodes[lo],
            self.nodes[hi],
        )


__all__ = [
    "DEFAULT_L_MAX",
    "check_wavenumber",
    "free_resolvent_kernel",
    "bessel_j_table",
    "hankel1_table",
    "spherical_bessel_j",
    "spherical_hankel1",
    "spherical_bessel_y",
    "spherical_derivative",
    "radial_green",
    "radial_green_series",
    "RadialGreenTable",
]
