"""Sequências de compatibilidade linear e não linear em r = 1."""

import numpy as np
import pytest

from wavelab.compat import (
    boundary_tolerance,
    linear_sequence,
    nonlinear_sequence,
    strong_condition_check,
    time_derivative_of_force,
    zero_forcing,
)
from wavelab.core.models import Params, RadialState, make_grid
from wavelab.profiles import get_profile
from wavelab.radial_solver import NonlinearitySpec, rhs


def test_tolerance_floor():
    assert boundary_tolerance(make_grid(1.0001, 101)) == 1e-8
    assert boundary_tolerance(make_grid(2.0, 101)) == pytest.approx(1e-2)


def test_zero_data_passes_every_order(grid, params):
    zeros = np.zeros(grid.num_points)
    report = nonlinear_sequence(zeros, zeros, grid, params, 4)
    assert report.passed
    assert report.compat_order == 4
    assert all(not term.any() for term in report.sequence)


def test_bump_passes_second_order(grid, params, bump):
    report = nonlinear_sequence(bump, np.zeros(grid.num_points), grid, params, 2)
    assert report.passed
    assert report.first_failure() is None


def test_poly_profile_fails_second_order(grid):
    u0 = get_profile("poly_compat").sample(grid)
    report = linear_sequence(u0, np.zeros(grid.num_points), zero_forcing(grid, 2), grid, 3, 2)
    assert not report.passed
    assert report.first_failure() == 2
    assert report.compat_order == 1


def test_smoothness_of_power_required(grid):
    zeros = np.zeros(grid.num_points)
    with pytest.raises(ValueError):
        nonlinear_sequence(zeros, zeros, grid, Params(3, 2.0), 2)
    with pytest.raises(ValueError):
        nonlinear_sequence(zeros, zeros, grid, Params(3, 7.0), 5)


def test_faa_di_bruno_low_orders(grid, bump):
    nl = NonlinearitySpec(7.0)
    psi = [bump, 0.3 * bump, np.sin(grid.r) * bump]
    first = time_derivative_of_force(psi, 1, nl)
    assert np.allclose(first, nl.derivative(psi[0], 1) * psi[1], rtol=1e-12, atol=0.0)
    second = time_derivative_of_force(psi, 2, nl)
    expected = nl.derivative(psi[0], 2) * psi[1] ** 2 + nl.derivative(psi[0], 1) * psi[2]
    assert np.allclose(second, expected, rtol=1e-12, atol=1e-300)


def _data(grid):
    u0 = get_profile("bump4").sample(grid, amplitude=0.8)
    u1 = get_profile("bump4").sample(grid, amplitude=0.5, center=2.0)
    return u0, u1


def _acceleration(grid, params, u):
    state = RadialState(grid, 0.0, u, np.zeros(grid.num_points))
    return rhs(state, NonlinearitySpec(params.p), params)[1]


def test_second_term_matches_verlet_oracle(grid, params):
    u0, u1 = _data(grid)
    psi2 = nonlinear_sequence(u0, u1, grid, params, 2).sequence[2]
    dt = 1e-3
    a0 = _acceleration(grid, params, u0)
    forward = u0 + dt * u1 + 0.5 * dt**2 * a0
    backward = u0 - dt * u1 + 0.5 * dt**2 * a0
    oracle = (forward - 2.0 * u0 + backward) / dt**2
    interior = slice(1, -1)
    scale = np.max(np.abs(psi2[interior]))
    assert np.max(np.abs(oracle[interior] - psi2[interior])) <= 1e-6 * scale


def test_third_term_converges_second_order(grid, params):
    u0, u1 = _data(grid)
    psi3 = nonlinear_sequence(u0, u1, grid, params, 3).sequence[3]
    a0 = _acceleration(grid, params, u0)
    interior = slice(1, -1)
    errors = []
    for dt in (4e-3, 2e-3):
        forward = u0 + dt * u1 + 0.5 * dt**2 * a0
        backward = u0 - dt * u1 + 0.5 * dt**2 * a0
        oracle = (_acceleration(grid, params, forward) - _acceleration(grid, params, backward)) / (2.0 * dt)
        errors.append(np.max(np.abs(oracle[interior] - psi3[interior])))
    assert 3.5 <= errors[0] / errors[1] <= 4.5


def test_strong_screen_implies_sequence(params):
    grid = make_grid(6.0, 601)
    rng = np.random.default_rng(7)
    profile = get_profile("bump4")
    screened = 0
    for trial in range(100):
        width = float(rng.uniform(0.8, 2.0))
        left = 1.0 + 1e-9 if trial % 2 == 0 else float(rng.uniform(1.01, 1.5))
        u0 = profile.sample(grid, amplitude=float(rng.uniform(0.1, 1.0)), width=width, center=left + 0.5 * width)
        u1 = np.zeros(grid.num_points)
        if strong_condition_check(u0, u1, grid, params.n, 2):
            screened += 1
            assert nonlinear_sequence(u0, u1, grid, params, 2).passed
    assert screened > 0
