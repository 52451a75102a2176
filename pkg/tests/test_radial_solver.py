"""Solver radial: não linearidade, passo de Verlet, causalidade, energia e explosão."""

import math

import numpy as np
import pytest

from wavelab.core.errors import CausalityError, CFLViolationError, InconclusiveError, UndefinedRatioError
from wavelab.core.models import Params, RadialState, make_grid
from wavelab.profiles import get_profile
from wavelab.radial_solver import (
    NonlinearitySpec,
    detect_blowup,
    energy,
    evolve,
    rhs,
    step,
    strauss_ratio,
    truncation_consistency,
)


def test_force_and_truncation():
    nl = NonlinearitySpec(7.0)
    s = np.array([-2.0, -0.5, 0.0, 0.5, 2.0])
    assert np.allclose(nl.force(s), np.abs(s) ** 6 * s)
    truncated = NonlinearitySpec(7.0, M=1.0)
    assert np.allclose(truncated.force(s), np.minimum(np.abs(s), 1.0) ** 6 * s)
    assert np.all(NonlinearitySpec.linear().force(s) == 0.0)


def test_primitive_continuous_at_truncation_level():
    truncated = NonlinearitySpec(5.0, M=1.5)
    below, above = truncated.primitive(np.array([1.5 - 1e-9, 1.5 + 1e-9]))
    assert above == pytest.approx(below, rel=1e-7)


def test_closed_form_derivatives():
    nl = NonlinearitySpec(7.0)
    assert nl.derivative(np.array(2.0), 1) == pytest.approx(448.0)
    assert nl.derivative(np.array(2.0), 2) == pytest.approx(1344.0)
    assert nl.derivative(np.array(-2.0), 2) == pytest.approx(-1344.0)
    assert nl.derivative(np.array(0.0), 3) == 0.0


def test_zero_state_is_stationary(grid, params):
    state = RadialState.zeros(grid)
    du, dv = rhs(state, NonlinearitySpec(params.p), params)
    assert not du.any() and not dv.any()
    assert energy(state, NonlinearitySpec(params.p), params).total == 0.0


def test_cfl_violation(grid, params, bump_state):
    with pytest.raises(CFLViolationError):
        step(bump_state, grid.h, NonlinearitySpec(params.p), params)


def test_causal_window_precondition(grid, params, bump_state):
    with pytest.raises(CausalityError) as info:
        evolve(bump_state, 10.0, 0.9 * grid.h, NonlinearitySpec(params.p), params)
    assert info.value.required_r_max > grid.r_max
    assert isinstance(info.value, ValueError)


def test_dirichlet_node_stays_zero(grid, params, bump_state):
    final, log = evolve(bump_state, 1.0, 0.9 * grid.h, NonlinearitySpec(params.p), params, stride=5, keep_snapshots=True)
    assert final.u[0] == 0.0 and final.v[0] == 0.0
    assert all(s.u[0] == 0.0 for s in log.snapshots)
    assert final.t == pytest.approx(1.0)


def test_finite_speed_of_propagation(grid, params, bump_state):
    final, _ = evolve(bump_state, 2.0, 0.9 * grid.h, NonlinearitySpec.linear(params.p), params)
    outside = grid.r > 2.0 + 2.0 + 1.0
    assert np.max(np.abs(final.u[outside])) <= 1e-10


def test_energy_conservation_small_grid(grid, params, bump_state):
    _, log = evolve(bump_state, 3.0, 0.9 * grid.h, NonlinearitySpec(params.p), params, stride=2)
    assert log.energies[0].total > 0
    assert log.max_relative_drift() <= 2e-3


@pytest.mark.slow
def test_energy_drift_second_order(params):
    drifts = []
    for num_points in (1301, 2601):
        grid = make_grid(14.0, num_points)
        u0 = get_profile("bump4").sample(grid)
        state = RadialState.from_data(grid, u0, np.zeros(grid.num_points))
        _, log = evolve(state, 10.0, 0.9 * grid.h, NonlinearitySpec(params.p), params, stride=4)
        drifts.append(log.max_relative_drift())
    assert drifts[1] <= 1e-4
    assert drifts[0] / drifts[1] >= 3.5


def test_truncation_invisible_below_level(grid, params):
    u0 = get_profile("bump4").sample(grid, amplitude=0.5)
    state = RadialState.from_data(grid, u0, np.zeros(grid.num_points))
    assert truncation_consistency(state, params, 1e6, 1.0, 0.9 * grid.h) == 0.0


def test_truncation_inconclusive_when_level_reached(grid, params, bump_state):
    with pytest.raises(InconclusiveError):
        truncation_consistency(bump_state, params, 0.5, 0.5, 0.9 * grid.h)


def test_strauss_ratio_undefined_for_zero_gradient(grid, params):
    with pytest.raises(UndefinedRatioError):
        strauss_ratio(RadialState.zeros(grid), params)


def test_strauss_ratio_positive(bump_state, params):
    assert strauss_ratio(bump_state, params) > 0


def test_focusing_energy_not_defined(bump_state):
    with pytest.raises(ValueError):
        energy(bump_state, NonlinearitySpec(3.0, focusing=True), Params(3, 3.0))


def test_focusing_blowup_detected(grid):
    params = Params(3, 3.0)
    u0 = get_profile("bump4").sample(grid, amplitude=20.0)
    state = RadialState.from_data(grid, u0, np.zeros(grid.num_points))
    nl = NonlinearitySpec(3.0, focusing=True)
    _, log = evolve(state, 1.0, 0.9 * grid.h, nl, params, raise_on_blowup=False, stop_above=1e3)
    verdict = detect_blowup(log, 1e3)
    assert verdict.exceeded
    assert 0.0 < verdict.first_time < 1.0
    assert log.energies[-1] is None


def test_defocusing_run_has_no_blowup(grid, params):
    u0 = get_profile("bump4").sample(grid, amplitude=0.5)
    state = RadialState.from_data(grid, u0, np.zeros(grid.num_points))
    _, log = evolve(state, 1.0, 0.9 * grid.h, NonlinearitySpec(params.p), params, stride=10)
    verdict = detect_blowup(log, 1e3)
    assert not verdict.exceeded and verdict.first_time is None
    assert all(math.isfinite(x) for x in log.sup_u)


def test_rhs_matches_analytic_laplacian():
    grid = make_grid(2.0, 201)
    u = np.sin(math.pi * (grid.r - 1.0))
    u[0] = 0.0
    state = RadialState.from_data(grid, u, np.zeros(grid.num_points))
    du, dv = rhs(state, NonlinearitySpec.linear(7.0), Params(3, 7.0))
    assert np.array_equal(du, state.v)
    mid = int(np.argmin(np.abs(grid.r - 1.5)))
    assert grid.r[mid] == pytest.approx(1.5)
    assert dv[mid] == pytest.approx(-math.pi**2, abs=5e-4)
    assert dv[0] == 0.0 and dv[-1] == 0.0


def test_rhs_constant_interior_feels_only_the_force(grid, params):
    u = np.full(grid.num_points, 0.5)
    u[0] = 0.0
    state = RadialState.from_data(grid, u, np.zeros(grid.num_points))
    _, dv = rhs(state, NonlinearitySpec(params.p), params)
    assert np.allclose(dv[2:-1], -(0.5**7), rtol=1e-12, atol=0.0)


def test_odd_symmetry(grid, params, bump_state):
    nl = NonlinearitySpec(params.p)
    positive, _ = evolve(bump_state, 1.0, 0.9 * grid.h, nl, params)
    negative, _ = evolve(bump_state.negated(), 1.0, 0.9 * grid.h, nl, params)
    assert np.max(np.abs(positive.u + negative.u)) <= 1e-14
    assert np.max(np.abs(positive.v + negative.v)) <= 1e-14


def test_time_reversibility(grid, params, bump_state):
    nl = NonlinearitySpec(params.p)
    dt = 0.9 * grid.h
    forward, _ = evolve(bump_state, 0.5, dt, nl, params)
    turned = RadialState(grid, forward.t, forward.u, -forward.v)
    back, _ = evolve(turned, 1.0, dt, nl, params)
    assert np.max(np.abs(back.u - bump_state.u)) <= 1e-10
    assert np.max(np.abs(back.v + bump_state.v)) <= 1e-10


def test_sup_norm_self_convergence(params):
    finals = []
    for num_points in (201, 401, 801):
        grid = make_grid(6.0, num_points)
        u0 = get_profile("bump4").sample(grid)
        state = RadialState.from_data(grid, u0, np.zeros(grid.num_points))
        final, _ = evolve(state, 1.0, 0.5 * grid.h, NonlinearitySpec(params.p), params)
        finals.append(final.u)
    coarse = np.max(np.abs(finals[0] - finals[1][::2]))
    fine = np.max(np.abs(finals[1] - finals[2][::2]))
    assert fine > 0.0
    assert coarse / fine >= 3.5


def test_strauss_ratio_bounded_along_run(grid, params, bump_state):
    _, log = evolve(bump_state, 3.0, 0.9 * grid.h, NonlinearitySpec(params.p), params, stride=5)
    ratios = np.array(log.strauss)
    assert np.all(np.isfinite(ratios))
    # r^{(n-2)/2}|u| <= ‖∂_r u‖ / √(n - 2) para suporte compacto
    assert np.max(ratios) <= 1.0 / math.sqrt(params.n - 2) * 1.05
    assert np.min(ratios) > 0.0


def test_terminal_state_always_logged(grid, params, bump_state):
    # 1.0 / (0.9 h) cobre 112 passos, que não é múltiplo de 5
    final, log = evolve(bump_state, 1.0, 0.9 * grid.h, NonlinearitySpec(params.p), params, stride=5, keep_snapshots=True)
    assert log.times[-1] == pytest.approx(1.0)
    assert log.sup_u[-1] == pytest.approx(float(np.max(np.abs(final.u))))
    assert len(log.times) == len(log.snapshots) + 1
    spacing = np.diff([s.t for s in log.snapshots])
    assert np.allclose(spacing, spacing[0])


def test_truncation_detects_level_crossed_between_snapshots(grid, params):
    u0 = get_profile("bump4").sample(grid, amplitude=0.5, center=3.0)
    state = RadialState.from_data(grid, u0, np.zeros(grid.num_points))
    _, log = evolve(state, 1.0, 0.9 * grid.h, NonlinearitySpec(params.p), params)
    level = max(log.sup_u) * (1.0 - 1e-6)
    with pytest.raises(InconclusiveError):
        truncation_consistency(state, params, level, 1.0, 0.9 * grid.h)
