import math

import numpy as np
import pytest
from scipy.special import eval_legendre, spherical_jn, spherical_yn

from bslab.errors import InvalidArgumentError, OutOfRangeError, SingularKernelError
from bslab.greenfn import (
    RadialGreenTable,
    check_wavenumber,
    free_resolvent_kernel,
    radial_green,
    radial_green_series,
    spherical_bessel_j,
    spherical_bessel_y,
    spherical_derivative,
    spherical_hankel1,
)

POINTS = [0.3 + 0.1j, 2.0 + 1.0j, 7.5 + 0.2j, 25.0 + 3.0j, 4.0j]


@pytest.mark.parametrize("ell", [0, 1, 4, 10])
def test_bessel_functions_match_scipy(ell):
    z = np.array(POINTS)

    np.testing.assert_allclose(spherical_bessel_j(ell, z), spherical_jn(ell, z), rtol=1e-9)
    np.testing.assert_allclose(spherical_bessel_y(ell, z), spherical_yn(ell, z), rtol=1e-9)


def test_hankel_is_j_plus_i_y():
    z = 3.0 + 0.5j

    for ell in range(6):
        expected = spherical_jn(ell, z) + 1j * spherical_yn(ell, z)
        assert spherical_hankel1(ell, z) == pytest.approx(expected, rel=1e-10)


def test_wronskian_of_j_and_y():
    z = 2.0 + 1.0j
    ells = range(8)
    j = np.array([spherical_bessel_j(ell, z) for ell in ells])
    y = np.array([spherical_bessel_y(ell, z) for ell in ells])

    dj = spherical_derivative(j, z)
    dy = spherical_derivative(y, z)

    np.testing.assert_allclose(j * dy - dj * y, 1.0 / z**2, rtol=1e-9)


def test_deep_imaginary_wavenumber_matches_closed_form():
    k, r, rp = 300j, 1.5, 2.2

    expected = (np.exp(1j * k * (r + rp)) - np.exp(1j * k * (rp - r))) / (2j * k)

    assert radial_green(0, k, r, rp) == pytest.approx(expected, rel=1e-10)


def test_arguments_beyond_exponent_range_are_rejected():
    with pytest.raises(OutOfRangeError):
        spherical_bessel_j(0, 800j)


def test_partial_wave_sum_reproduces_free_kernel():
    k = 1.0 + 0.5j
    r, rp, theta = 0.5, 1.5, 0.7
    x = np.array([0.0, 0.0, r])
    y = rp * np.array([math.sin(theta), 0.0, math.cos(theta)])

    g = radial_green_series(40, k, r, rp)
    legendre = np.array([eval_legendre(ell, math.cos(theta)) for ell in range(41)])
    weights = 2 * np.arange(41) + 1
    series = np.sum(weights * g * legendre) / (4.0 * math.pi * r * rp)

    assert series == pytest.approx(free_resolvent_kernel(x, y, k), rel=1e-9)


def test_green_table_matrix_is_symmetric_and_matches_pointwise():
    nodes = np.array([0.2, 0.7, 1.1, 2.4])
    table = RadialGreenTable.build(0.8 + 0.3j, nodes, l_max=5)

    G = table.matrix(3)

    np.testing.assert_allclose(G, G.T, rtol=1e-14)
    assert G[1, 3] == pytest.approx(radial_green(3, 0.8 + 0.3j, 0.7, 2.4), rel=1e-12)


def test_green_table_rejects_unsorted_nodes():
    with pytest.raises(InvalidArgumentError):
        RadialGreenTable.build(1.0, [0.5, 0.2], l_max=2)


def test_kernel_and_wavenumber_validation():
    with pytest.raises(SingularKernelError):
        free_resolvent_kernel([1.0, 0.0, 0.0], [1.0, 0.0, 0.0], 1.0)
    with pytest.raises(InvalidArgumentError):
        check_wavenumber(1.0 - 0.1j)
    with pytest.raises(InvalidArgumentError):
        check_wavenumber(0.0)
    assert check_wavenumber(0.0, allow_zero=True) == 0j
    with pytest.raises(InvalidArgumentError):
        spherical_bessel_j(3, 1.0, l_max=2)
