import numpy as np
import pytest

from bslab.bsop import (
    ChannelSet,
    build_channel,
    build_quadrature,
    channel_cutoff,
    hs_norm_sq,
    operator_norm,
    schatten_norm,
    trace_power,
)
from bslab.errors import InvalidArgumentError, TruncationFailureError
from bslab.potential import Potential


def test_quadrature_integrates_polynomials_on_support():
    q = build_quadrature(2.0, 10)

    assert q.integrate(q.nodes**3) == pytest.approx(4.0, rel=1e-13)
    assert q.order == 10
    with pytest.raises(InvalidArgumentError):
        build_quadrature(2.0, 1)


def test_channel_blocks_are_complex_symmetric():
    V = Potential.gaussian(-1.0 + 0.3j)
    q = build_quadrature(V.R, 24)

    channel = build_channel(V, 2, 1.0 + 0.5j, q)

    np.testing.assert_allclose(channel.A, channel.A.T, rtol=1e-13, atol=0.0)
    assert channel.weight == 5


def test_truncation_stops_before_l_max():
    V = Potential.gaussian(0.5)
    q = build_quadrature(V.R, 32)

    cs = channel_cutoff(V, 1.0 + 0.5j, q, 1e-4, L_max=160)

    assert 2 < cs.L < 160
    assert np.isfinite(cs.tail_bound)
    assert cs.tail_bound > 0.0


def test_high_channels_keep_a_diagonal_floor():
    V = Potential.gaussian(0.5)
    q = build_quadrature(V.R, 16)
    ell = 150

    channel = build_channel(V, ell, 1.0 + 0.5j, q)

    expected = q.weights * V.eval(q.nodes) * q.nodes / (2 * ell + 1)
    np.testing.assert_allclose(np.diag(channel.A), expected, rtol=1e-2)


def test_truncation_failure_reports_diagnostics():
    V = Potential.gaussian(0.5)
    q = build_quadrature(V.R, 16)

    with pytest.raises(TruncationFailureError) as excinfo:
        channel_cutoff(V, 3.0, q, 1e-12, L_max=2)

    assert excinfo.value.diagnostics["L_max"] == 2
    assert len(excinfo.value.diagnostics["last_contributions"]) == 3


def test_norms_are_consistent():
    V = Potential.gaussian(1.5)
    q = build_quadrature(V.R, 32)
    cs = channel_cutoff(V, 0.5 + 1.0j, q, 1e-4, L_max=160)

    assert schatten_norm(cs, 2) ** 2 == pytest.approx(hs_norm_sq(cs), rel=1e-10)
    assert operator_norm(cs) <= schatten_norm(cs, 4) <= schatten_norm(cs, 2) * (1 + 1e-12)


def test_zero_potential_gives_zero_traces():
    V = Potential.zero()
    cs = channel_cutoff(V, 1.0, build_quadrature(V.R, 8), 1e-4)

    assert trace_power(cs, 2) == 0
    assert trace_power(cs, 3) == 0
    assert hs_norm_sq(cs) == 0.0
    with pytest.raises(InvalidArgumentError):
        trace_power(cs, 1)



@pytest.mark.parametrize("n", [2, 3, 4])
def test_trace_power_is_homogeneous_in_coupling(n):
    V = Potential.gaussian(1.0 + 0.5j)
    g = 2.0 - 1.0j
    q = build_quadrature(V.R, 32)
    k = 1.0 + 1.0j

    base = channel_cutoff(V, k, q, 1e-4, L_max=160)
    scaled = channel_cutoff(V.scaled(g), k, q, 1e-4, L_max=160)

    assert scaled.L == base.L
    assert trace_power(scaled, n) == pytest.approx(g**n * trace_power(base, n), rel=1e-10)


def test_cubic_trace_converges_at_second_order_in_quadrature():
    V = Potential.gaussian(1.0 + 0.5j)
    k = 1.0 + 1.0j

    def cubic(n: int) -> complex:
        q = build_quadrature(V.R, n)
        channels = tuple(build_channel(V, ell, k, q) for ell in range(21))
        return trace_power(ChannelSet(k=k, channels=channels, quadrature=q), 3)

    coarse, middle, fine = cubic(50), cubic(100), cubic(200)
    first, second = abs(middle - coarse), abs(fine - middle)

    assert second <= 1e-4 * abs(fine)
    assert second <= 0.5 * first or second <= 1e-12 * abs(fine)
