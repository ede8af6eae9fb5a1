import numpy as np
import pytest

from rational_filter import (GAUSS_LEGENDRE, MIDPOINT, RULES, eval_filter, filter_samples, full_sum,
                             gauss_legendre_filter, make_filter, midpoint_filter)

# Purpose: Tests for quadrature nodes, weights and the filter function they define.


@pytest.mark.parametrize("rule", RULES)
def test_poles_lie_on_the_upper_half_circle(rule):
    f = make_filter(rule, 1.0, 3.0, 6)

    assert f.n_nodes == 6
    assert np.all(f.poles.imag > 0)
    assert np.allclose(np.abs(f.poles - f.center), f.radius)
    assert f.rule == rule


@pytest.mark.parametrize("rule", RULES)
def test_filter_is_one_at_the_center(rule):
    f = make_filter(rule, -2.0, 4.0, 5)
    assert eval_filter(f, f.center) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("rule", RULES)
def test_filter_is_symmetric_about_the_center(rule):
    f = make_filter(rule, 0.0, 2.0, 4)
    offsets = np.array([0.1, 0.7, 1.3, 5.0])
    assert np.allclose(eval_filter(f, 1.0 + offsets), eval_filter(f, 1.0 - offsets))


def test_midpoint_filter_closed_form():
    """The midpoint rule gives rho(z) = 1 / (1 + x^(2 N_c)) with x = (z - c) / r."""
    f = midpoint_filter(2.0, 6.0, 3)
    z = np.linspace(-4.0, 12.0, 33)
    x = (z - 4.0) / 2.0

    assert np.allclose(eval_filter(f, z), 1.0 / (1.0 + x ** 6), atol=1e-12)
    assert eval_filter(f, 2.0) == pytest.approx(0.5)
    assert eval_filter(f, 6.0) == pytest.approx(0.5)


def test_filter_decays_outside_the_interval():
    f = midpoint_filter(0.0, 1.0, 4)
    assert abs(eval_filter(f, 2.0)) < 1e-3
    assert abs(eval_filter(f, -1.0)) < 1e-3


def test_gauss_legendre_weights():
    f = gauss_legendre_filter(0.0, 2.0, 3)
    # each term reduces to a Legendre weight over 4
    assert np.sum(-f.weights / (f.poles - f.center)).real * 2.0 == pytest.approx(1.0)
    assert f.rule == GAUSS_LEGENDRE


def test_full_sum_is_real_and_matches_eval():
    f = make_filter(MIDPOINT, 0.0, 1.0, 3)
    z = np.array([-0.5, 0.25, 0.9, 3.0])

    total = full_sum(f, z)

    assert np.allclose(total.imag, 0.0, atol=1e-14)
    assert np.allclose(total.real, eval_filter(f, z))


def test_eval_filter_scalar_returns_float():
    assert isinstance(eval_filter(midpoint_filter(0.0, 1.0, 2), 0.5), float)


def test_make_filter_validation():
    with pytest.raises(ValueError):
        make_filter("trapezoid", 0.0, 1.0, 2)
    with pytest.raises(ValueError):
        make_filter(MIDPOINT, 1.0, 1.0, 2)
    with pytest.raises(ValueError):
        make_filter(MIDPOINT, 0.0, 1.0, 0)


def test_filter_samples_grid_and_scaling():
    """Samples cover [lo, hi]; scaled samples equal 1/2 at the interval ends."""
    f = gauss_legendre_filter(1.0, 2.0, 4)

    grid, values = filter_samples(f, 1.0, 2.0, num=11, scaled=True)

    assert grid[0] == 1.0 and grid[-1] == 2.0
    assert values.shape == (11,)
    assert values[0] == pytest.approx(0.5)
    assert values[-1] == pytest.approx(0.5)


def test_filter_samples_validation():
    f = midpoint_filter(0.0, 1.0, 2)
    with pytest.raises(ValueError):
        filter_samples(f, 0.0, 1.0, num=1)
    with pytest.raises(ValueError):
        filter_samples(f, 1.0, 0.0)


@pytest.mark.parametrize("rule", RULES)
def test_filter_sharpens_as_nodes_are_added(rule):
    """More nodes: |rho| falls outside [alpha, beta] and rises towards 1 inside."""
    outside_points = np.array([-1.5, 3.5, 6.0])
    inside_points = np.array([0.4, 0.7, 1.6])

    outside = [np.abs(eval_filter(make_filter(rule, 0.0, 2.0, n_c), outside_points)) for n_c in (2, 4, 8, 16)]
    inside = [np.abs(1.0 - eval_filter(make_filter(rule, 0.0, 2.0, n_c), inside_points)) for n_c in (2, 4, 8, 16)]

    for coarse, fine in zip(outside, outside[1:]):
        assert np.all(fine < coarse)
    for coarse, fine in zip(inside, inside[1:]):
        assert np.all(fine < coarse)
