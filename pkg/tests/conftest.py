
import numpy as np
import pytest

from models.hamiltonian import HamiltonianSpec, TimeGrid
from models.states import FockSpace
from physics import fock_states


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


@pytest.fixture
def space():
    return FockSpace(n_max=30)


@pytest.fixture
def jc_spec():
    return HamiltonianSpec(kind="jc_rwa", g=1.0, omega0=10.0, omega_c=10.0, n_max=30)


@pytest.fixture
def grid():
    return TimeGrid(t_end=25.0, samples=1001)


@pytest.fixture
def short_grid():
    return TimeGrid(t_end=10.0, samples=201)


@pytest.fixture
def ground():
    return fock_states.ground_state().projector()


