"""
Nyström discretization of the Birman–Schwinger operator.

For a radial potential the operator ``Y0(k) = V1 R0(k) V2`` splits into
partial-wave blocks. Block ``ell`` is discretized on a Gauss–Legendre rule as
``A_ij = sqrt(w_i) U(r_i) g_ell(k; r_i, r_j) U(r_j) sqrt(w_j)`` with
``U = V**0.5`` (principal branch). The block enters every trace and determinant
with multiplicity ``2 ell + 1``. Determinants and traces agree with those of the
unsymmetrized ``V1 g V2`` kernel because ``det(I + AB) = det(I + BA)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from loguru import logger
from numpy.typing import NDArray
from scipy.linalg import svdvals

from .errors import InvalidArgumentError, TruncationFailureError
from .greenfn import DEFAULT_L_MAX, RadialGreenTable, check_wavenumber
from .potential import Potential

_CONSECUTIVE_SMALL = 3


@dataclass(frozen=True)
class Quadrature:
    """Gauss–Legendre rule on ``[0, R]``."""

    nodes: NDArray[np.float64]
    weights: NDArray[np.float64]
    R: float

    @property
    def order(self) -> int:
        return int(self.nodes.size)

    def integrate(self, values: NDArray[np.generic]) -> complex:
        return complex(np.dot(self.weights, values))


@lru_cache(maxsize=32)
def _legendre(n: int) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def build_quadrature(R: float, n: int) -> Quadrature:
    """Gauss–Legendre rule with ``n`` nodes mapped to ``[0, R]``."""
    if n < 2:
        raise InvalidArgumentError(f"quadrature order must be >= 2, got {n}")
    if not R > 0:
        raise InvalidArgumentError(f"quadrature interval must have R > 0, got {R}")
    x, w = _legendre(n)
    half = 0.5 * R
    return Quadrature(nodes=half * (x + 1.0), weights=half * w, R=float(R))


@dataclass(frozen=True)
class ChannelMatrix:
    """Discretized partial-wave block ``ell`` of ``Y0(k)``."""

    ell: int
    k: complex
    A: NDArray[np.complex128]
    frobenius: float = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "frobenius", float(np.linalg.norm(self.A)))

    @property
    def weight(self) -> int:
        return 2 * self.ell + 1


@dataclass(frozen=True)
class ChannelSet:
    """Channels ``ell = 0..L`` at one wave number plus the truncation estimate."""

    k: complex
    channels: tuple[ChannelMatrix, ...]
    tail_bound: float = 0.0
    quadrature: Quadrature | None = None

    @property
    def L(self) -> int:
        return self.channels[-1].ell if self.channels else 0


def _symmetrizer(V: Potential, q: Quadrature) -> NDArray[np.complex128]:
    return np.sqrt(q.weights) * np.sqrt(V.eval(q.nodes).astype(complex))


def _channel_from_table(
    ell: int, table: RadialGreenTable, s: NDArray[np.complex128]
) -> ChannelMatrix:
    A = s[:, None] * table.matrix(ell) * s[None, :]
    return ChannelMatrix(ell=ell, k=table.k, A=A)


def build_channel(V: Potential, ell: int, k: complex, q: Quadrature) -> ChannelMatrix:
    """Single Nyström block; ``channel_cutoff`` builds whole sets more cheaply."""
    k = check_wavenumber(k)
    if ell < 0:
        raise InvalidArgumentError(f"channel index must be >= 0, got {ell}")
    if V.is_zero:
        return ChannelMatrix(ell=ell, k=k, A=np.zeros((q.order, q.order), dtype=complex))
    table = RadialGreenTable.build(k, q.nodes, max(ell, 1))
    return _channel_from_table(ell, table, _symmetrizer(V, q))


def channel_cutoff(
    V: Potential,
    k: complex,
    q: Quadrature,
    eps: float,
    *,
    L_max: int = DEFAULT_L_MAX,
) -> ChannelSet:
    """
    Build channels until ``(2l+1) ||A_l||_F^3 < eps * total`` for three
    consecutive ``l``.

    ``(2l+1) ||A_l||_F^3`` bounds the channel's share of the cubic remainder
    ``sum log(1 + lam) - lam + lam^2/2``. Squared norms are not used: their sum
    over ``l`` diverges for any finite quadrature. ``tail_bound`` is the
    geometric continuation of the last contributions and must be finite.
    """
    if not eps > 0:
        raise InvalidArgumentError(f"truncation tolerance must be positive, got {eps}")
    k = check_wavenumber(k)
    if V.is_zero:
        zero = ChannelMatrix(ell=0, k=k, A=np.zeros((q.order, q.order), dtype=complex))
        return ChannelSet(k=k, channels=(zero,), tail_bound=0.0, quadrature=q)

    table = RadialGreenTable.build(k, q.nodes, L_max)
    s = _symmetrizer(V, q)
    channels: list[ChannelMatrix] = []
    contributions: list[float] = []
    total = 0.0
    for ell in range(L_max + 1):
        channel = _channel_from_table(ell, table, s)
        channels.append(channel)
        contribution = channel.weight * channel.frobenius**3
        contributions.append(contribution)
        total += contribution

        if total == 0.0:
            # V vanishes on every node
            return ChannelSet(k=k, channels=tuple(channels), tail_bound=0.0, quadrature=q)
        if len(contributions) < _CONSECUTIVE_SMALL:
            continue
        recent = contributions[-_CONSECUTIVE_SMALL:]
        if all(c < eps * total for c in recent):
            tail = _geometric_tail(recent)
            if math.isfinite(tail):
                logger.debug("k={} truncated at L={} (tail {:.3e})", k, ell, tail)
                return ChannelSet(k=k, channels=tuple(channels), tail_bound=tail, quadrature=q)

    raise TruncationFailureError(
        f"partial-wave sum not converged by L_max={L_max} at k={k}",
        diagnostics={
            "k": k,
            "L_max": L_max,
            "eps": eps,
            "total": total,
            "last_contributions": contributions[-_CONSECUTIVE_SMALL:],
        },
    )


def _geometric_tail(recent: list[float]) -> float:
    """Sum of the recent contributions continued as a geometric series."""
    last = recent[-1]
    ratios = [b / a for a, b in zip(recent[:-1], recent[1:], strict=False) if a > 0]
    ratio = max(ratios) if ratios else 0.0
    if ratio >= 1.0:
        return float("inf")
    return float(sum(recent) + last * ratio / (1.0 - ratio))


def hs_norm_sq(cs: ChannelSet) -> float:
    """Discrete ``||Y0(k)||_{B2}^2 = sum (2l+1) ||A_l||_F^2``."""
    if not cs.channels:
        raise InvalidArgumentError("empty channel set")
    return float(sum(c.weight * c.frobenius**2 for c in cs.channels))


def trace_power(cs: ChannelSet, n: int) -> complex:
    """``sum (2l+1) Tr A_l^n``; the trace function psi_n is this divided by n."""
    if n < 2:
        raise InvalidArgumentError(f"trace power needs n >= 2, got {n}")
    total = 0j
    for channel in cs.channels:
        A = channel.A
        if n == 2:
            value = np.sum(A * A.T)
        elif n == 3:
            value = np.sum((A @ A) * A.T)
        else:
            value = np.trace(np.linalg.matrix_power(A, n))
        total += channel.weight * complex(value)
    return total


def singular_values(cs: ChannelSet) -> list[NDArray[np.float64]]:
    return [svdvals(c.A, check_finite=False) for c in cs.channels]


def operator_norm(cs: ChannelSet) -> float:
    """Spectral norm of the discretized operator, the largest block norm."""
    return float(max((sv[0] if sv.size else 0.0) for sv in singular_values(cs)))


def schatten_norm(cs: ChannelSet, p: float) -> float:
    """``(sum (2l+1) sum_i sigma_i^p)^(1/p)``."""
    if p < 1:
        raise InvalidArgumentError(f"Schatten exponent must be >= 1, got {p}")
    total = sum(
        c.weight * float(np.sum(sv**p))
        for c, sv in zip(cs.channels, singular_values(cs), strict=True)
    )
    return float(total ** (1.0 / p))


__all__ = [
    "Quadrature",
    "ChannelMatrix",
    "ChannelSet",
    "build_quadrature",
    "build_channel",
    "channel_cutoff",
    "hs_norm_sq",
    "trace_power",
    "operator_norm",
    "schatten_norm",
    "singular_values",
]
