import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from models.states import DensityMatrix, FockSpace, StateVector
from physics import dynamics, fock_states, linalg_core, measures
from physics.errors import DimensionMismatchError, DomainError
from tests.helpers import random_density_matrix, random_qubit_state

ZERO = StateVector(amplitudes=[1, 0])
ONE = StateVector(amplitudes=[0, 1])
MIXED = DensityMatrix.maximally_mixed(2)
LN2 = math.log(2)

seeds = st.integers(min_value=0, max_value=2 ** 32 - 1)


def test_fidelity_to_pure():
    assert measures.fidelity_to_pure(ZERO.projector(), ZERO) == pytest.approx(1.0, abs=1e-12)
    assert measures.fidelity_to_pure(ONE.projector(), ZERO) == pytest.approx(0.0, abs=1e-12)
    plus = StateVector.normalized([1, 1j])
    assert measures.fidelity_to_pure(MIXED, plus) == pytest.approx(0.5, abs=1e-12)


def test_fidelity_dimension_mismatch():
    with pytest.raises(DimensionMismatchError):
        measures.fidelity_to_pure(DensityMatrix.maximally_mixed(3), ZERO)


@settings(max_examples=30, deadline=None)
@given(seed=seeds)
def test_fidelity_is_affine(seed):
    rng = np.random.default_rng(seed)
    states = [random_density_matrix(rng, 4) for _ in range(3)]
    weights = rng.dirichlet(np.ones(3))
    psi = StateVector.normalized(rng.normal(size=4) + 1j * rng.normal(size=4))
    mixed = DensityMatrix.from_array(sum(w * s.matrix for w, s in zip(weights, states)))

    expected = sum(w * measures.fidelity_to_pure(s, psi) for w, s in zip(weights, states))
    assert abs(measures.fidelity_to_pure(mixed, psi) - expected) <= 1e-12


def test_von_neumann_entropy():
    assert measures.von_neumann_entropy(ZERO.projector()) == pytest.approx(0.0, abs=1e-10)
    assert measures.von_neumann_entropy(MIXED) == pytest.approx(LN2, abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(seed=seeds, t=st.floats(min_value=0.0, max_value=10.0))
def test_entropy_unitarily_invariant(seed, t):
    rng = np.random.default_rng(seed)
    rho = random_density_matrix(rng, 5, rank=3)
    h = linalg_core.symmetrize(rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5)))
    rotated = linalg_core.evolve(rho, linalg_core.eig_hermitian(h), t)
    assert abs(measures.von_neumann_entropy(rotated) - measures.von_neumann_entropy(rho)) <= 1e-10


def test_relative_entropy_examples(rng):
    rho = random_density_matrix(rng, 3)
    assert measures.relative_entropy(rho, rho) == pytest.approx(0.0, abs=1e-10)
    assert measures.relative_entropy(ZERO.projector(), MIXED) == pytest.approx(LN2, abs=1e-10)
    assert measures.relative_entropy(ZERO.projector(), ONE.projector()) == math.inf
    assert measures.relative_entropy_bits(ZERO.projector(), MIXED) == pytest.approx(1.0, abs=1e-10)


@settings(max_examples=40, deadline=None)
@given(seed=seeds, dim=st.integers(2, 5))
def test_relative_entropy_non_negative(seed, dim):
    rng = np.random.default_rng(seed)
    rho = random_density_matrix(rng, dim)
    sigma = random_density_matrix(rng, dim)
    value = measures.relative_entropy(rho, sigma)
    assert value >= 0.0
    if measures.hs_distance(rho, sigma) > 1e-8:
        assert value > 0.0


def test_distances_for_orthogonal_qubits():
    assert measures.trace_distance(ZERO.projector(), ONE.projector()) == pytest.approx(1.0)
    assert measures.trace_norm(ZERO.projector(), ONE.projector()) == pytest.approx(2.0)
    assert measures.hs_distance(ZERO.projector(), ONE.projector()) == pytest.approx(math.sqrt(2))
    assert measures.trace_distance(MIXED, MIXED) == 0.0
    assert measures.hs_distance(MIXED, MIXED) == 0.0


def test_hs_distance_below_trace_norm(rng):
    for _ in range(100):
        rho, sigma = random_density_matrix(rng, 4), random_density_matrix(rng, 4)
        assert measures.hs_distance(rho, sigma) <= measures.trace_norm(rho, sigma) + 1e-12


def test_smooth_gives_full_rank():
    smoothed = measures.smooth(ZERO.projector(), 1e-3)
    assert np.linalg.eigvalsh(smoothed.matrix)[0] == pytest.approx(5e-4)
    assert math.isfinite(measures.relative_entropy(ONE.projector(), smoothed))
    with pytest.raises(DomainError):
        measures.smooth(MIXED, 1.5)


def test_pinsker_examples():
    same = measures.pinsker_check(MIXED, MIXED)
    assert same.holds and same.lhs == pytest.approx(0.0, abs=1e-15)

    report = measures.pinsker_check(ZERO.projector(), MIXED)
    assert report.lhs == pytest.approx(0.5)
    assert report.rhs == pytest.approx(LN2)
    assert report.holds

    infinite = measures.pinsker_check(ZERO.projector(), ONE.projector())
    assert infinite.holds and infinite.rhs == math.inf


def test_pinsker_on_random_qubit_pairs(rng):
    for _ in range(1000):
        report = measures.pinsker_check(random_density_matrix(rng, 2), random_density_matrix(rng, 2))
        assert report.holds, report


def test_audenaert_bound_values():
    assert measures.audenaert_bound(0.0, 2, 0.5) == 0.0
    assert measures.audenaert_bound(1.0, 2, 0.5) == pytest.approx(1.5)


@pytest.mark.parametrize("args", [(2.5, 2, 0.5), (1.0, 0, 0.5), (1.0, 2, 0.0), (-0.1, 2, 0.5)])
def test_audenaert_bound_domain(args):
    with pytest.raises(DomainError):
        measures.audenaert_bound(*args)


def test_audenaert_on_random_qubit_pairs(rng):
    for _ in range(1000):
        rho, sigma = random_qubit_state(rng), random_qubit_state(rng)
        lambda_min = float(np.linalg.eigvalsh(sigma.matrix)[0])
        bound = measures.audenaert_bound(measures.trace_norm(rho, sigma), 2, lambda_min)
        assert measures.relative_entropy_bits(rho, sigma) <= bound + 1e-12


def test_audenaert_expression_fails_for_nearly_singular_sigma():
    # a pure state against a nearly pure sigma escapes the bound as written
    sigma = DensityMatrix(matrix=np.diag([0.99, 0.01]))
    rho = ONE.projector()
    lhs = measures.relative_entropy_bits(rho, sigma)
    rhs = measures.audenaert_bound(measures.trace_norm(rho, sigma), 2, 0.01)
    assert lhs > rhs


def test_chain_for_identical_pure_states():
    target = ONE
    report = measures.approximate_deh_chain(target.projector(), target.projector(), target, eps=0.0)
    assert report.lhs == pytest.approx(0.0, abs=1e-12)
    assert report.rhs == 0.0
    assert report.holds


def test_chain_for_slightly_mixed_harvester():
    rho = measures.smooth(ONE.projector(), 1e-3)
    report = measures.approximate_deh_chain(rho, rho, ONE, eps=0.0)
    assert report.mu == pytest.approx(-math.log2(1 - 5e-4), rel=1e-9)
    assert report.holds
    assert report.slack > 0


def test_chain_reports_infinite_divergence():
    report = measures.approximate_deh_chain(measures.smooth(ONE.projector(), 1e-3), ZERO.projector(), ONE, eps=0.1)
    assert report.lhs == math.inf
    assert report.rhs == math.inf
    assert not report.holds
    assert report.slack == -math.inf


def test_chain_with_jc_harvesters(jc_spec, ground):
    space = FockSpace(n_max=jc_spec.n_max)
    source_1 = measures.smooth(fock_states.fock_state(1, space).projector(), 1e-6)
    source_2 = measures.smooth(
        fock_states.mix(fock_states.phase_ensemble(0.2, [0.0], space)), 1e-6)
    tau = math.pi / 2
    rho_a1 = dynamics.reduced_state_at(ground, source_1, jc_spec, tau)
    rho_a2 = dynamics.reduced_state_at(ground, source_2, jc_spec, tau)
    eps = measures.relative_entropy_bits(source_1, source_2)

    report = measures.approximate_deh_chain(rho_a1, rho_a2, fock_states.excited_state(), eps=eps)
    assert report.holds
