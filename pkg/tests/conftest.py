"""Fixtures compartilhadas: malhas pequenas, parâmetros e dados compactos."""

import numpy as np
import pytest

from wavelab.core.models import Params, RadialState, make_grid
from wavelab.profiles import get_profile
from wavelab.radial_solver import NonlinearitySpec, evolve


@pytest.fixture
def params() -> Params:
    return Params(3, 7.0)


@pytest.fixture
def grid():
    # h = 0.01
    return make_grid(6.0, 501)


@pytest.fixture
def coarse_grid():
    # h = 0.02
    return make_grid(6.0, 251)


@pytest.fixture
def bump(grid) -> np.ndarray:
    return get_profile("bump4").sample(grid, amplitude=1.0)


@pytest.fixture
def bump_state(grid, bump) -> RadialState:
    return RadialState.from_data(grid, bump, np.zeros(grid.num_points))


def radial_history(grid, params, amplitude=1.0, t_end=1.0, dt=None, center=1.5):
    """Histórico não linear com instantâneo a cada passo."""
    u0 = get_profile("bump4").sample(grid, amplitude=amplitude, center=center)
    state = RadialState.from_data(grid, u0, np.zeros(grid.num_points))
    _, log = evolve(
        state,
        t_end,
        dt if dt is not None else 0.9 * grid.h,
        NonlinearitySpec(params.p),
        params,
        keep_snapshots=True,
    )
    return log


@pytest.fixture
def make_history():
    return radial_history
