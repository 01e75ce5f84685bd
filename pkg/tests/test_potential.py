import math
from pathlib import Path

import numpy as np
import pytest

from bslab.errors import ConfigError, InvalidArgumentError, UnsupportedError
from bslab.potential import Potential, Profile, autocorrelation, moments_q, norm_lp


def test_gaussian_norms_match_closed_forms():
    V = Potential.gaussian(2.0)

    assert norm_lp(V, 1) == pytest.approx(2.0 * math.pi**1.5, rel=1e-10)
    assert norm_lp(V, 2) ** 2 == pytest.approx(4.0 * (math.pi / 2.0) ** 1.5, rel=1e-10)
    assert norm_lp(V, 1.5) ** 1.5 == pytest.approx(2.0**1.5 * (math.pi / 1.5) ** 1.5, rel=1e-10)
    assert norm_lp(Potential.zero(), 2) == 0.0


def test_norm_lp_rejects_other_exponents():
    with pytest.raises(InvalidArgumentError):
        norm_lp(Potential.gaussian(), 3)


def test_eval_vanishes_beyond_support_and_rejects_negative_radius():
    V = Potential.square_well(5.0, radius=1.0)

    assert V.eval(0.5) == -5.0
    assert V.eval(1.5) == 0.0
    np.testing.assert_array_equal(V.eval([0.0, 2.0]), [-5.0, 0.0])
    with pytest.raises(InvalidArgumentError):
        V.eval(-0.1)


def test_gaussian_derivative_matches_finite_difference():
    V = Potential.gaussian(1.0 + 0.5j, width=1.3)
    r, h = 0.8, 1e-6

    numeric = (V.eval(r + h) - V.eval(r - h)) / (2.0 * h)

    assert V.derivative(r) == pytest.approx(numeric, rel=1e-7)


def test_square_well_has_no_derivative():
    with pytest.raises(UnsupportedError):
        Potential.square_well(1.0).derivative(0.5)


def test_moments_of_gaussian():
    g = 0.7
    moments = moments_q(Potential.gaussian(g), order=2)

    q0 = g**2 * (math.pi / 2.0) ** 1.5 / (16.0 * math.pi)
    grad = g**2 * 3.0 * math.sqrt(math.pi) / 2.0**3.5
    cube = g**3 * math.sqrt(math.pi) / (2.0 * 3.0**1.5)
    assert moments.Q0 == pytest.approx(q0, rel=1e-10)
    assert moments.Q2 == pytest.approx((grad + cube) / 48.0, rel=1e-9)
    assert moments.I_list == pytest.approx((0.0, 0.0, 0.0, 0.0), abs=1e-15)
    assert moments.Q(1) == 0j


def test_moments_of_complex_potential_have_imaginary_parts():
    moments = moments_q(Potential.gaussian(1.0 + 1.0j), order=0)

    assert moments.Q2 is None
    assert moments.I_list[0] > 0
    with pytest.raises(UnsupportedError):
        moments.Q(2)


def test_second_moment_needs_smoothness():
    with pytest.raises(UnsupportedError):
        moments_q(Potential.square_well(5.0), order=2)


def test_autocorrelation_of_gaussian():
    V = Potential.gaussian(1.0)
    t = np.array([0.0, 0.5, 1.0, 2.5])

    expected = (math.pi / 2.0) ** 1.5 * np.exp(-(t**2) / 2.0) / (8.0 * math.pi)

    np.testing.assert_allclose(autocorrelation(V, t), expected, rtol=1e-7)


def test_autocorrelation_of_square_well_is_ball_overlap():
    depth, R = 2.0, 1.0
    V = Potential.square_well(depth, radius=R)

    for t in (0.3, 1.0, 1.7):
        overlap = math.pi / 12.0 * (4.0 * R + t) * (2.0 * R - t) ** 2
        assert autocorrelation(V, t) == pytest.approx(depth**2 * overlap / (8.0 * math.pi), rel=1e-9)
    assert autocorrelation(V, 2.0 * R) == 0
    assert autocorrelation(V, 3.0) == 0


def test_autocorrelation_rejects_negative_shift():
    with pytest.raises(InvalidArgumentError):
        autocorrelation(Potential.gaussian(), -1.0)


def test_from_section_builds_profiles():
    V = Potential.from_section({"profile": "exponential", "g_re": "-1.5", "g_im": "0.25", "width": "0.5"})

    assert V.profile is Profile.EXPONENTIAL
    assert V.amplitude == complex(-1.5, 0.25)
    assert V.R == pytest.approx(0.5 * 16.0 * math.log(10.0))


@pytest.mark.parametrize(
    "section",
    [
        {"profile": "gaussian", "depth": "1"},
        {"profile": "square_well", "g_re": "-1"},
        {"profile": "table"},
        {"profile": "gaussian", "g_re": "strong"},
        {"profile": "hexagon"},
    ],
)
def test_from_section_errors_are_config_errors(section):
    with pytest.raises(ConfigError):
        Potential.from_section(section)


def test_table_profile_reads_csv(tmp_path: Path):
    path = tmp_path / "v.csv"
    r = np.linspace(0.0, 2.0, 21)
    v = -(1.0 - (r / 2.0) ** 2)
    lines = ["# sampled well", "r,v_re,v_im"] + [f"{a:.17g},{b:.17g},0.0" for a, b in zip(r, v, strict=True)]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")

    V = Potential.from_section({"profile": "table", "table": str(path)})

    assert V.R == pytest.approx(2.0)
    assert V.eval(1.0) == pytest.approx(-0.75, rel=1e-10)
    assert V.eval(2.5) == 0
    with pytest.raises(UnsupportedError):
        V.derivative(1.0)


def test_scaled_keeps_support():
    V = Potential.gaussian(1.0, width=0.5)
    W = V.scaled(-2.0j)

    assert W.amplitude == -2.0j
    assert W.R == V.R
