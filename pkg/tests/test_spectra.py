import pytest

from bslab.config import NumericsConfig
from bslab.errors import InvalidArgumentError, ResolutionError
from bslab.potential import Potential
from bslab.spectra import (
    R0_GRID_MIN,
    Rect,
    Zero,
    ZeroSet,
    _LogPsi,
    _newton,
    blaschke_coeffs,
    count_zeros,
    extrapolate_zero,
    locate_zeros,
    r0_estimate,
)

from tests.oracles import square_well_count, square_well_kappas

WELL_RECT = Rect(-0.7, 0.8, 0.3, 1.6)


def test_rect_splits_long_side_only_when_elongated():
    square = Rect(0.0, 1.0, 1.0, 2.0)
    tall = Rect(0.0, 1.0, 1.0, 4.0)

    quarters = square.split(0.5)
    halves = tall.split(0.5)

    assert len(quarters) == 4
    assert sum(r.width * r.height for r in quarters) == pytest.approx(1.0)
    assert len(halves) == 2
    assert halves[0].im_max == pytest.approx(2.5)
    assert Rect.from_tuple([0, 1, 1, 4]) == tall


def test_rect_rejects_degenerate_bounds():
    with pytest.raises(InvalidArgumentError):
        Rect(1.0, 1.0, 0.5, 2.0)


def test_zero_validation_and_eigenvalue():
    zero = Zero(k=2.0j, multiplicity=1, newton_residual=0.0)

    assert zero.eigenvalue == pytest.approx(-4.0)
    with pytest.raises(InvalidArgumentError):
        Zero(k=1.0 + 0.0j, multiplicity=1, newton_residual=0.0)
    with pytest.raises(InvalidArgumentError):
        Zero(k=1.0j, multiplicity=0, newton_residual=0.0)


def test_blaschke_coefficients():
    zeros = [Zero(k=1.0 + 1.0j, multiplicity=1, newton_residual=0.0)]

    assert blaschke_coeffs(zeros, 2) == pytest.approx([2.0, 4.0, 4.0])
    assert blaschke_coeffs([], 1) == [0.0, 0.0]
    with pytest.raises(InvalidArgumentError):
        blaschke_coeffs(zeros, -1)


def test_zero_set_orders_by_decreasing_imaginary_part():
    zeros = [
        Zero(k=0.5 + 0.2j, multiplicity=1, newton_residual=0.0),
        Zero(k=2.0j, multiplicity=2, newton_residual=0.0),
        Zero(k=-1.0 + 2.0j, multiplicity=1, newton_residual=0.0),
    ]

    zs = ZeroSet.from_zeros(zeros, nmax=3)

    assert [z.k for z in zs.zeros] == [-1.0 + 2.0j, 2.0j, 0.5 + 0.2j]
    assert zs.count == 4
    assert zs.nmax == 3
    assert zs.r0 == pytest.approx(abs(-1.0 + 2.0j))

    ablated = zs.without(1)
    assert [z.k for z in ablated.zeros] == [-1.0 + 2.0j, 0.5 + 0.2j]
    assert ablated.r0 == zs.r0
    assert ablated.B[0] == pytest.approx(2.0 * (2.0 + 0.2))


def test_zero_potential_has_no_zeros(fast_numerics):
    assert count_zeros(Potential.zero(), WELL_RECT, fast_numerics) == 0
    assert locate_zeros(Potential.zero(), WELL_RECT, 1e-10, fast_numerics).count == 0


def test_rectangles_must_stay_above_the_real_axis(fast_numerics):
    with pytest.raises(InvalidArgumentError):
        count_zeros(Potential.gaussian(), Rect(-1.0, 1.0, 0.0, 1.0), fast_numerics)
    with pytest.raises(InvalidArgumentError):
        locate_zeros(Potential.gaussian(), WELL_RECT, 0.0, fast_numerics)


def test_square_well_has_one_bound_state_in_window(fast_numerics):
    V = Potential.square_well(5.0)

    assert count_zeros(V, WELL_RECT, fast_numerics) == 1
    assert count_zeros(V, Rect(-0.7, 0.8, 1.2, 1.6), fast_numerics) == 0


def test_weak_potential_needs_no_r0_search(fast_numerics):
    assert r0_estimate(Potential.gaussian(0.1), fast_numerics) == R0_GRID_MIN
    assert r0_estimate(Potential.zero(), fast_numerics) == R0_GRID_MIN


def test_winding_count_is_additive_over_subdivision(fast_numerics):
    V = Potential.square_well(5.0)

    total = count_zeros(V, WELL_RECT, fast_numerics)
    parts = [count_zeros(V, child, fast_numerics) for child in WELL_RECT.split(0.5731)]

    assert len(parts) == 4
    assert sum(parts) == total == 1


@pytest.mark.parametrize("winding", [-1.0 + 0.0j, -0.9 + 0.0j])
def test_negative_winding_is_a_resolution_failure(fast_numerics, monkeypatch, winding):
    monkeypatch.setattr("bslab.spectra._winding", lambda ev, rect, panels: winding)

    with pytest.raises(ResolutionError):
        count_zeros(Potential.gaussian(-2.0), WELL_RECT, fast_numerics)


def test_newton_rejects_unconverged_iterate(fast_numerics):
    ev = _LogPsi(Potential.square_well(5.0), fast_numerics)

    assert _newton(ev, WELL_RECT.center, 1, WELL_RECT, 1e-10, max_iter=1) is None

    k, residual = _newton(ev, WELL_RECT.center, 1, WELL_RECT, 1e-10)
    assert residual <= 1e-10
    assert WELL_RECT.contains(k)


@pytest.mark.slow
def test_located_radius_covers_operator_norm_estimate(fast_numerics):
    V = Potential.square_well(5.0)

    zs = locate_zeros(V, WELL_RECT, 1e-10, fast_numerics)

    assert zs.count == 1
    assert zs.r0 >= r0_estimate(V, fast_numerics)
    assert zs.r0 >= abs(zs.zeros[0].k)
    assert locate_zeros(V, WELL_RECT, 1e-10, fast_numerics, estimate_r0=False).r0 == abs(zs.zeros[0].k)


@pytest.mark.slow
@pytest.mark.parametrize("V0", [1.0, 5.0, 12.0])
def test_square_well_zeros_match_shooting_reference(V0):
    cfg = NumericsConfig(quad_n=200)
    V = Potential.square_well(V0)

    zs = locate_zeros(V, Rect(-0.1, 0.1, 0.05, 5.0), 1e-10, cfg)

    assert not zs.unresolved
    assert zs.count == square_well_count(V0)
    expected = sorted(2 * l + 1 for l in range(7) for _ in square_well_kappas(V0, l=l))
    assert sorted(z.multiplicity for z in zs.zeros) == expected
    assert zs.r0 >= max((abs(z.k) for z in zs.zeros), default=0.0)
    if not zs.zeros:
        return
    kappa = max(square_well_kappas(V0))
    k1 = extrapolate_zero(V, zs.zeros[0], cfg)
    assert k1.multiplicity == 1
    assert k1.k == pytest.approx(1j * kappa, abs=1e-6)
    assert zs.zeros[0].k == pytest.approx(1j * kappa, abs=5e-4)
