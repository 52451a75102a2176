"""Mapa de Penrose, curvas da fronteira, transformação e energias compactas."""

import math

import numpy as np
import pytest
from scipy.interpolate import CubicSpline

from wavelab.core.errors import DomainError
from wavelab.core.models import Params, RadialState, make_grid
from wavelab.penrose import (
    CompactGrid,
    PenrosePoint,
    RadialSpacetime,
    boundary_alpha,
    boundary_layout,
    boundary_slope,
    boundary_time,
    boundary_time_slope,
    check_nu,
    compact_slice,
    compare_representations,
    energy_E,
    energy_F,
    evolve_compact,
    extended_omega_power,
    extrapolation_weights,
    flux_identity_residual,
    from_penrose,
    impose_boundary,
    impose_velocity,
    inverse_transform,
    omega_physical,
    penrose_coordinates,
    physical_coordinates,
    radial_slice,
    to_penrose,
    transform_field,
)
from wavelab.profiles import get_profile
from wavelab.radial_solver import NonlinearitySpec, evolve


def test_coordinate_round_trip_on_lattice():
    t, r = np.meshgrid(np.linspace(0.0, 3.0, 100), np.linspace(1.0, 3.0, 100))
    T, alpha = penrose_coordinates(t, r)
    t_back, r_back = physical_coordinates(T, alpha)
    assert np.max(np.abs(t_back - t)) <= 1e-12
    assert np.max(np.abs(r_back - r)) <= 1e-12


def test_conformal_factor_agrees_in_both_charts():
    t, r = np.meshgrid(np.linspace(0.0, 4.0, 50), np.linspace(1.0, 4.0, 50))
    T, alpha = penrose_coordinates(t, r)
    assert np.max(np.abs(omega_physical(t, r) - (np.cos(T) + np.cos(alpha)))) <= 1e-12


def test_scalar_maps():
    pt = to_penrose(0.0, 1.0)
    assert pt.T == 0.0
    assert pt.alpha == pytest.approx(math.pi / 2.0)
    t, r = from_penrose(to_penrose(1.5, 2.5))
    assert (t, r) == pytest.approx((1.5, 2.5), abs=1e-12)
    with pytest.raises(DomainError):
        to_penrose(1.0, 0.0)
    with pytest.raises(DomainError):
        from_penrose(PenrosePoint(2.0, 2.0))


def test_boundary_curves_are_inverse():
    T = np.linspace(0.05, math.pi - 0.05, 10_000)
    assert np.max(np.abs(boundary_time(boundary_alpha(T)) - T)) <= 1e-12
    assert boundary_alpha(0.0) == pytest.approx(math.pi / 2.0)


def test_physical_boundary_maps_to_curve():
    t = np.linspace(0.0, 5.0, 200)
    T, alpha = penrose_coordinates(t, np.ones_like(t))
    assert np.max(np.abs(alpha - boundary_alpha(T))) <= 1e-12


def test_boundary_is_timelike():
    alpha = np.linspace(0.01, math.pi / 2.0 - 0.01, 1000)
    assert np.all(boundary_time_slope(alpha) < -1.0)
    assert np.all(np.abs(boundary_slope(np.linspace(0.0, math.pi, 100))) < 1.0)
    with pytest.raises(DomainError):
        boundary_time_slope(np.array([0.0]))
    with pytest.raises(DomainError):
        boundary_time_slope(math.pi / 2.0)


def test_extended_conformal_factor_vanishes_past_null_infinity():
    alpha = np.array([0.5, 1.5, 2.5])
    values = extended_omega_power(1.0, alpha, 4.0)
    assert values[2] == 0.0
    assert np.allclose(values[:2], (np.cos(1.0) + np.cos(alpha[:2])) ** 4)


def test_compact_grid_and_layout():
    with pytest.raises(ValueError):
        CompactGrid(8)
    grid = CompactGrid(64)
    layout = boundary_layout(grid, 0.0)
    assert layout.gamma == pytest.approx(math.pi / 2.0)
    assert grid.alpha[layout.first] > layout.gamma
    assert 0.0 < layout.distance <= grid.d_alpha
    assert layout.slaved == (layout.distance < 0.5 * grid.d_alpha)


def test_nu_threshold():
    with pytest.raises(ValueError):
        check_nu(Params(3, 2.0))
    check_nu(Params(3, 7.0))


@pytest.fixture
def fine_state():
    grid = make_grid(6.0, 1001)
    u0 = get_profile("bump4").sample(grid)
    return RadialState.from_data(grid, u0, np.zeros(grid.num_points))


def test_slice_round_trip(fine_state, params):
    compact = compact_slice(fine_state, CompactGrid(1024), params)
    u = radial_slice(compact, fine_state.grid)
    region = (fine_state.grid.r > 1.1) & (fine_state.grid.r < 5.0)
    assert np.max(np.abs(u[region] - fine_state.u[region])) <= 1e-4


def test_slice_requires_initial_time(fine_state, params):
    moved = RadialState(fine_state.grid, 0.5, fine_state.u, fine_state.v)
    with pytest.raises(ValueError):
        compact_slice(moved, CompactGrid(64), params)


def test_compact_energies_short_run(fine_state, params):
    initial = compact_slice(fine_state, CompactGrid(256), params)
    history = evolve_compact(initial, 0.3)
    E = np.array([energy_E(s) for s in history])
    assert E[0] > 0
    assert np.all(np.isfinite(E))
    assert E[-1] <= E[0] * (1.0 + 1e-2)
    assert energy_F(history[0]) <= E[0] * (1.0 + 1e-12)
    assert history[-1].T == pytest.approx(0.3)


def test_compact_time_must_stay_below_pi(fine_state, params):
    initial = compact_slice(fine_state, CompactGrid(64), params)
    with pytest.raises(DomainError):
        evolve_compact(initial, math.pi)


def test_extrapolation_weights_reproduce_quadratics():
    d_alpha = 0.1

    def quadratic(x):
        return x * (3.0 - 2.0 * x)

    for D in (0.05, 0.1, 0.15):
        a, b, da, db = extrapolation_weights(D, d_alpha)
        assert a * quadratic(D) + b * quadratic(D + d_alpha) == pytest.approx(quadratic(D - d_alpha), abs=1e-14)
        eps = 1e-6
        ahead, behind = extrapolation_weights(D + eps, d_alpha), extrapolation_weights(D - eps, d_alpha)
        assert (ahead[0] - behind[0]) / (2.0 * eps) == pytest.approx(da, rel=1e-6)
        assert (ahead[1] - behind[1]) / (2.0 * eps) == pytest.approx(db, rel=1e-6)


def test_cell_weights_integrate_the_sphere_measure():
    grid = CompactGrid(64)
    node, face = grid.weights(3)
    assert np.sum(node) * grid.d_alpha == pytest.approx(math.pi / 2.0, rel=1e-12)
    assert face[0] == 0.0 and face[-1] == 0.0
    assert node[-1] == pytest.approx(grid.d_alpha**2 / 3.0, rel=1e-3)


def test_slaved_velocity_is_derivative_of_constraint():
    grid = CompactGrid(64)
    T = next(
        T for T in np.linspace(0.1, 1.0, 200)
        if 0.1 * grid.d_alpha < boundary_layout(grid, T).distance < 0.4 * grid.d_alpha
    )

    def field(time):
        return np.sin(grid.alpha - boundary_alpha(time)) * np.cos(grid.alpha)

    def rate(time):
        return -boundary_slope(time) * np.cos(grid.alpha - boundary_alpha(time)) * np.cos(grid.alpha)

    layout = boundary_layout(grid, T)
    assert layout.slaved
    k = layout.first
    U = impose_boundary(field(T), layout, grid.d_alpha)
    W = impose_velocity(rate(T), U, layout, grid.d_alpha, float(boundary_slope(T)))
    assert not U[:k].any() and not W[:k].any()
    assert U[k] == pytest.approx(field(T)[k], abs=5.0 * grid.d_alpha**3)

    eps = 1e-6
    ahead = impose_boundary(field(T + eps), boundary_layout(grid, T + eps), grid.d_alpha)
    behind = impose_boundary(field(T - eps), boundary_layout(grid, T - eps), grid.d_alpha)
    assert W[k] == pytest.approx((ahead[k] - behind[k]) / (2.0 * eps), rel=1e-6, abs=1e-8)
    assert np.array_equal(W[k + 1:], rate(T)[k + 1:])


def _compact_history(state, params, num_alpha, T_end, nonlinear=True, stride=1):
    initial = compact_slice(state, CompactGrid(num_alpha), params, nonlinear=nonlinear)
    return evolve_compact(initial, T_end, stride=stride)


@pytest.mark.parametrize("nonlinear", [False, True])
def test_flux_identity_converges(fine_state, params, nonlinear):
    errors = []
    for num_alpha in (256, 512, 1024):
        history = _compact_history(fine_state, params, num_alpha, 1.2, nonlinear)
        errors.append(flux_identity_residual(history) / energy_E(history[0]))
    order = math.log2(errors[0] / errors[-1]) / 2.0
    assert order >= 1.0
    assert errors[-1] <= 1e-2


def test_energy_F_nonincreasing(fine_state, params):
    history = _compact_history(fine_state, params, 256, 1.5)
    F = np.array([energy_F(s) for s in history])
    E = np.array([energy_E(s) for s in history])
    assert np.max(np.diff(F)) <= 1e-3 * F[0]
    assert np.max(np.diff(E)) <= 1e-3 * E[0]
    assert F[-1] < F[0]
    assert np.all(F <= E * (1.0 + 1e-12))


def test_transform_inverse_round_trip(params):
    grid = make_grid(6.0, 601)
    u0 = get_profile("bump4").sample(grid, amplitude=0.5)
    state = RadialState.from_data(grid, u0, np.zeros(grid.num_points))
    _, log = evolve(state, 2.0, 0.9 * grid.h, NonlinearitySpec(params.p), params, keep_snapshots=True)
    spacetime = RadialSpacetime(log.snapshots)
    compact, sampled = transform_field(spacetime, 0.4, CompactGrid(256), params)
    assert np.count_nonzero(sampled) > 10
    t, r, u = inverse_transform(compact)
    T, alpha = penrose_coordinates(t, r)
    layout = boundary_layout(compact.grid, compact.T)
    keep = spacetime.covers(t, r) & (alpha >= compact.grid.alpha[layout.free] - 1e-12)
    assert np.count_nonzero(keep) > 10
    assert np.allclose(T[keep], 0.4, rtol=0.0, atol=1e-12)
    reference, _, _ = spacetime.sample(t[keep], r[keep])
    assert np.max(np.abs(u[keep] - reference)) <= 1e-12


def test_compact_self_convergence(fine_state, params):
    points = np.linspace(1.6, 3.0, 200)
    finals = []
    for num_alpha in (256, 512, 1024):
        final = _compact_history(fine_state, params, num_alpha, 0.4, stride=10_000)[-1]
        start = boundary_layout(final.grid, final.T).first
        finals.append(CubicSpline(final.grid.alpha[start:], final.U[start:])(points))
    coarse = np.max(np.abs(finals[0] - finals[1]))
    fine = np.max(np.abs(finals[1] - finals[2]))
    assert fine > 0.0
    assert coarse / fine >= 3.0


@pytest.mark.slow
def test_dual_representation_converges_at_second_order(params):
    grid = make_grid(8.0, 5601)
    u0 = get_profile("bump4").sample(grid, amplitude=0.5)
    state = RadialState.from_data(grid, u0, np.zeros(grid.num_points))
    _, log = evolve(state, 3.0, 0.9 * grid.h, NonlinearitySpec(params.p), params, stride=4, keep_snapshots=True)
    spacetime = RadialSpacetime(log.snapshots)
    errors = []
    for num_alpha in (256, 512, 1024):
        final = _compact_history(state, params, num_alpha, 0.5, stride=10_000)[-1]
        result = compare_representations(spacetime, final)
        assert result.compared_nodes > 0
        errors.append(result.sup_difference)
    order = math.log2(errors[0] / errors[-1]) / 2.0
    assert order >= 1.8
