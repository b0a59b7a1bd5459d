import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from models.states import DensityMatrix, StateVector
from physics import linalg_core
from physics.errors import DimensionMismatchError, InvalidStateError, NonHermitianError
from physics.linalg_core import PAULI_X, PAULI_Z
from tests.helpers import random_density_matrix

seeds = st.integers(min_value=0, max_value=2 ** 32 - 1)


def test_tensor_of_identities():
    assert np.array_equal(linalg_core.tensor(np.eye(2), np.eye(3)), np.eye(6))


def test_tensor_places_a_index_slowest():
    a = np.array([[1, 2], [3, 4]])
    b = np.eye(2)
    expected = np.array([[1, 0, 2, 0], [0, 1, 0, 2], [3, 0, 4, 0], [0, 3, 0, 4]])
    assert np.array_equal(linalg_core.tensor(a, b), expected)


@settings(max_examples=30, deadline=None)
@given(seed=seeds, dims=st.tuples(st.integers(1, 3), st.integers(1, 3), st.integers(1, 3)))
def test_tensor_is_associative(seed, dims):
    rng = np.random.default_rng(seed)
    a, b, c = (random_density_matrix(rng, d).matrix for d in dims)
    left = linalg_core.tensor(linalg_core.tensor(a, b), c)
    right = linalg_core.tensor(a, linalg_core.tensor(b, c))
    assert np.max(np.abs(left - right)) <= 1e-14


@settings(max_examples=40, deadline=None)
@given(seed=seeds, dim_a=st.integers(1, 4), dim_b=st.integers(1, 5))
def test_partial_traces_of_product_state(seed, dim_a, dim_b):
    rng = np.random.default_rng(seed)
    rho_a = random_density_matrix(rng, dim_a)
    rho_b = random_density_matrix(rng, dim_b)
    joint = DensityMatrix.from_array(linalg_core.tensor(rho_a.matrix, rho_b.matrix))

    assert np.allclose(linalg_core.partial_trace_b(joint, dim_a, dim_b).matrix, rho_a.matrix, atol=1e-12)
    assert np.allclose(linalg_core.partial_trace_a(joint, dim_a, dim_b).matrix, rho_b.matrix, atol=1e-12)


def test_bell_state_marginal_is_maximally_mixed():
    bell = StateVector.normalized([1, 0, 0, 1]).projector()
    assert np.allclose(linalg_core.partial_trace_b(bell, 2, 2).matrix, np.eye(2) / 2, atol=1e-15)
    assert np.allclose(linalg_core.partial_trace_a(bell, 2, 2).matrix, np.eye(2) / 2, atol=1e-15)


@pytest.mark.parametrize("matrix", [
    np.diag([0.7, 0.7]),
    np.diag([1.2, -0.2]),
    np.ones((2, 3)) / 2,
    np.array([[np.nan, 0], [0, 1]]),
])
def test_from_array_rejects_non_states(matrix):
    with pytest.raises(InvalidStateError):
        DensityMatrix.from_array(matrix)


def test_partial_trace_rejects_wrong_shape():
    with pytest.raises(DimensionMismatchError):
        linalg_core.trace_out_b(np.eye(6), 2, 2)


@pytest.mark.parametrize("matrix, expected", [
    (PAULI_Z, [-1.0, 1.0]),
    (PAULI_X, [-1.0, 1.0]),
    (np.diag([3.0, 1.0, 2.0]), [1.0, 2.0, 3.0]),
])
def test_eigenvalues_ascending(matrix, expected):
    eig = linalg_core.eig_hermitian(matrix)
    assert np.allclose(eig.eigenvalues, expected, atol=1e-14)


@settings(max_examples=40, deadline=None)
@given(seed=seeds, dim=st.integers(1, 8))
def test_eigendecomposition_reconstructs(seed, dim):
    rng = np.random.default_rng(seed)
    raw = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    h = linalg_core.symmetrize(raw)
    eig = linalg_core.eig_hermitian(h)
    v = eig.eigenvectors

    assert np.allclose(v.conj().T @ v, np.eye(dim), atol=1e-12)
    assert np.allclose(v @ np.diag(eig.eigenvalues) @ v.conj().T, h, atol=1e-10 * max(1.0, np.abs(h).max()))


def test_non_hermitian_input_rejected():
    with pytest.raises(NonHermitianError):
        linalg_core.eig_hermitian([[0, 1], [0, 0]])


def test_evolve_plus_state_under_sigma_z():
    eig = linalg_core.eig_hermitian(PAULI_Z / 2)
    plus = StateVector.normalized([1, 1])
    minus = StateVector.normalized([1, -1])

    evolved = linalg_core.evolve(plus.projector(), eig, math.pi)
    assert np.allclose(evolved.matrix, minus.projector().matrix, atol=1e-12)

    amplitudes = linalg_core.evolve_state(plus, eig, math.pi).amplitudes
    assert abs(abs(np.vdot(minus.amplitudes, amplitudes)) - 1.0) < 1e-12


@settings(max_examples=30, deadline=None)
@given(seed=seeds, t=st.floats(min_value=-20.0, max_value=20.0))
def test_evolution_preserves_trace_and_spectrum(seed, t):
    rng = np.random.default_rng(seed)
    rho = random_density_matrix(rng, 5)
    h = linalg_core.symmetrize(rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5)))
    evolved = linalg_core.evolve(rho, linalg_core.eig_hermitian(h), t)

    assert abs(np.trace(evolved.matrix) - 1.0) < 1e-12
    assert np.allclose(np.linalg.eigvalsh(evolved.matrix), np.linalg.eigvalsh(rho.matrix), atol=1e-12)


def test_evolve_many_matches_single_steps(rng):
    rho = random_density_matrix(rng, 4)
    h = linalg_core.symmetrize(rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4)))
    eig = linalg_core.eig_hermitian(h)
    times = [0.0, 0.3, 1.7, 5.0]

    matrices = list(linalg_core.evolve_many(rho, eig, times))
    assert np.max(np.abs(matrices[0] - rho.matrix)) <= 1e-14
    for t, matrix in zip(times[1:], matrices[1:]):
        assert np.allclose(matrix, linalg_core.evolve(rho, eig, t).matrix, atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(seed=seeds, dim=st.integers(1, 6))
def test_evolve_at_zero_time_is_identity(seed, dim):
    rng = np.random.default_rng(seed)
    rho = random_density_matrix(rng, dim)
    h = linalg_core.symmetrize(rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim)))
    evolved = linalg_core.evolve(rho, linalg_core.eig_hermitian(h), 0.0)
    assert np.max(np.abs(evolved.matrix - rho.matrix)) <= 1e-14


@settings(max_examples=30, deadline=None)
@given(seed=seeds, t1=st.floats(min_value=-10.0, max_value=10.0), t2=st.floats(min_value=-10.0, max_value=10.0))
def test_evolution_composes(seed, t1, t2):
    rng = np.random.default_rng(seed)
    rho = random_density_matrix(rng, 5)
    h = linalg_core.symmetrize(rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5)))
    eig = linalg_core.eig_hermitian(h)

    once = linalg_core.evolve(rho, eig, t1 + t2)
    twice = linalg_core.evolve(linalg_core.evolve(rho, eig, t1), eig, t2)
    assert np.max(np.abs(once.matrix - twice.matrix)) <= 1e-10


def test_evolve_dimension_mismatch():
    eig = linalg_core.eig_hermitian(np.eye(3))
    with pytest.raises(DimensionMismatchError):
        linalg_core.evolve(DensityMatrix.maximally_mixed(2), eig, 1.0)
