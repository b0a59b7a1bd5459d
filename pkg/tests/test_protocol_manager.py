import math

import numpy as np
import pytest

from managers.protocol_manager import ProtocolManager
from models.hamiltonian import TimeGrid
from models.reports import P_E
from models.scenario import WignerConfig
from models.states import DensityMatrix, SourceEnsemble, StateVector
from physics import dynamics, fock_states
from physics.errors import InvariantViolationError, NormalizationError
from tests.helpers import HALF_PI, random_low_fock_state
from utils.event_bus import BOUND_VIOLATED, EventBus


@pytest.fixture
def protocol():
    return ProtocolManager()


def random_pure_state(rng, space, levels=6) -> StateVector:
    amplitudes = np.zeros(space.dim, dtype=complex)
    amplitudes[:levels] = rng.normal(size=levels) + 1j * rng.normal(size=levels)
    return StateVector.normalized(amplitudes)


def test_coherent_phase_does_not_change_populations(ground, jc_spec, grid, space):
    ensemble = fock_states.phase_ensemble(1.0, [0.0, math.pi / 4, math.pi / 2], space)
    channels = [dynamics.propagate_bipartite(ground, rho, jc_spec, grid, with_entropies=False).channel(P_E)
                for rho in ensemble.states]
    for other in channels[1:]:
        assert np.max(np.abs(channels[0] - other)) <= 1e-10


def test_single_photon_harvests_at_quarter_period(protocol, ground, jc_spec, grid, space):
    source = fock_states.fock_state(1, space).projector()
    series = dynamics.propagate_bipartite(ground, source, jc_spec, grid, with_entropies=False)
    assert np.max(np.abs(series.channel(P_E) - np.sin(grid.times) ** 2)) <= 1e-8

    report = protocol.verify_deh(SourceEnsemble.single(source), jc_spec, HALF_PI, tolerance=1e-8)
    assert report.achieved
    assert report.min_fidelity >= 1 - 1e-8


def test_verify_deh_reports_every_member(protocol, jc_spec, space):
    ensemble = SourceEnsemble.from_states(
        [(0.5, fock_states.fock_state(1, space).projector()), (0.5, fock_states.fock_state(4, space).projector())])
    report = protocol.verify_deh(ensemble, jc_spec, HALF_PI, tolerance=1e-3)
    assert report.per_member_fidelity[0] == pytest.approx(1.0, abs=1e-10)
    assert report.per_member_fidelity[1] == pytest.approx(math.sin(math.pi) ** 2, abs=1e-10)
    assert not report.achieved


def test_threaded_verification_is_identical(jc_spec, space):
    ensemble = fock_states.phase_ensemble(1.0, np.linspace(0, math.pi, 6), space)
    serial = ProtocolManager(threads=1).verify_deh(ensemble, jc_spec, 1.3, 1e-3)
    threaded = ProtocolManager(threads=4).verify_deh(ensemble, jc_spec, 1.3, 1e-3)
    assert serial.per_member_fidelity == threaded.per_member_fidelity


def test_optimal_tau_for_single_photon(protocol, jc_spec, space):
    ensemble = SourceEnsemble.single(fock_states.fock_state(1, space).projector())
    tau, value = protocol.find_optimal_tau(ensemble, jc_spec, TimeGrid(t_end=5.0, samples=501))
    assert tau == pytest.approx(HALF_PI, abs=1e-5)
    assert value >= 1 - 1e-10


def test_vacuum_source_has_flat_zero_objective(protocol, jc_spec, space):
    vacuum = SourceEnsemble.single(fock_states.fock_state(0, space).projector())
    report = protocol.verify_deh(vacuum, jc_spec, HALF_PI, tolerance=1e-3)
    assert report.min_fidelity == pytest.approx(0.0, abs=1e-12)
    assert not report.achieved

    window = TimeGrid(t_end=5.0, samples=101)
    tau, value = protocol.find_optimal_tau(vacuum, jc_spec, window)
    assert tau == window.times[0]
    assert value == pytest.approx(0.0, abs=1e-12)


def test_thermal_source_never_harvests(protocol, ground, jc_spec, space):
    thermal = fock_states.thermal_state(1.0, space)
    window = TimeGrid(t_end=50.0, samples=2001)
    populations = dynamics.excited_population(ground, thermal, jc_spec, window.times)
    assert np.max(populations) <= 0.5 + 1e-8

    _, value = protocol.find_optimal_tau(SourceEnsemble.single(thermal), jc_spec, window)
    assert value <= 0.5 + 1e-8
    assert not protocol.verify_deh(SourceEnsemble.single(thermal), jc_spec, HALF_PI, 1e-3).achieved


def test_decompositions_of_one_source_are_indistinguishable(protocol, jc_spec, grid, space):
    report = protocol.decomposition_invariance_check(
        fock_states.coherent_mixture(1.0, space), fock_states.cat_ensemble(1.0, space), jc_spec, grid)
    assert report.decomposition_distance <= 1e-10
    assert report.max_trajectory_deviation <= 1e-9
    assert report.passed


def test_different_sources_fail_decomposition_check(protocol, jc_spec, short_grid, space):
    report = protocol.decomposition_invariance_check(
        fock_states.coherent_mixture(1.0, space), fock_states.cat_ensemble(1.2, space), jc_spec, short_grid)
    assert not report.passed
    assert math.isnan(report.max_trajectory_deviation)


def test_fidelity_is_affine_at_every_sample(rng, ground, jc_spec, short_grid, space):
    for _ in range(20):
        members = [random_low_fock_state(rng, space) for _ in range(3)]
        weights = rng.dirichlet(np.ones(3))
        mixed = DensityMatrix.from_array(sum(w * m.matrix for w, m in zip(weights, members)))
        per_member = [dynamics.excited_population(ground, m, jc_spec, short_grid.times) for m in members]
        expected = np.tensordot(weights, per_member, axes=1)
        mixture = dynamics.excited_population(ground, mixed, jc_spec, short_grid.times)
        assert np.max(np.abs(mixture - expected)) <= 1e-10


def test_convex_closure(protocol, jc_spec, space):
    members = SourceEnsemble.from_states(
        [(0.5, fock_states.fock_state(1, space).projector()), (0.5, fock_states.fock_state(0, space).projector())])
    reports = protocol.convex_closure_check(members, [[1.0, 0.0], [0.75, 0.25], [0.5, 0.5]], jc_spec, HALF_PI, 1e-3)
    fidelities = [r.min_fidelity for r in reports]
    assert fidelities == pytest.approx([1.0, 0.75, 0.5], abs=1e-10)
    assert [r.achieved for r in reports] == [True, False, False]


def test_convex_closure_rejects_bad_weights(protocol, jc_spec, space):
    members = fock_states.coherent_mixture(1.0, space)
    with pytest.raises(NormalizationError):
        protocol.convex_closure_check(members, [[0.7, 0.7]], jc_spec, 1.0, 1e-3)
    with pytest.raises(NormalizationError):
        protocol.convex_closure_check(members, [[1.0]], jc_spec, 1.0, 1e-3)


@pytest.mark.parametrize("m", [2, 3, 4])
def test_superposition_closure_reconstructs_mixture(rng, protocol, jc_spec, space, m):
    states = [random_pure_state(rng, space) for _ in range(m)]
    raw = rng.normal(size=m) + 1j * rng.normal(size=m)
    amplitudes = raw / np.linalg.norm(raw)
    report = protocol.superposition_closure_check(states, amplitudes, jc_spec, HALF_PI, 1e-3)
    assert len(report.per_member_fidelity) == 2 ** (m - 1)


def test_superposition_of_harvesting_states_still_harvests(protocol, jc_spec, space):
    one = fock_states.fock_state(1, space)
    report = protocol.superposition_closure_check([one, one], [0.6, 0.8], jc_spec, HALF_PI, 1e-6)
    assert report.achieved


def test_entropy_cycle_for_weak_mixture(protocol, jc_spec, grid, space):
    alpha = math.sqrt(0.1)
    rho_b = fock_states.mix(fock_states.coherent_mixture(alpha, space))
    report = protocol.entropy_cycle(rho_b, jc_spec, grid, alternative=fock_states.cat_ensemble(alpha, space))
    assert report.s_ab_drift <= 1e-8
    assert report.decomposition_deviation <= 1e-8
    assert 0.0 < report.return_time <= grid.t_end
    assert report.return_entropy >= 0.0


def test_return_point_after_first_maximum():
    times = np.arange(6.0)
    assert ProtocolManager._return_point(times, np.array([0.0, 0.5, 0.8, 0.3, 0.1, 0.4])) == (0.1, 4.0)
    assert ProtocolManager._return_point(times[:4], np.array([0.0, 1.0, 2.0, 3.0])) == (1.0, 1.0)


def test_robustness_sweep_obeys_data_processing(jc_spec, short_grid, space):
    bus = EventBus()
    violations = []
    bus.register(BOUND_VIOLATED, violations.append)
    protocol = ProtocolManager(event_bus=bus)
    base = fock_states.mix(fock_states.coherent_mixture(0.8, space))
    perturbations = [fock_states.mix(fock_states.coherent_mixture(0.8 + 0.05 * k, space)) for k in range(1, 11)]
    config = WignerConfig(points=61)

    rows = protocol.robustness_sweep(base, perturbations, jc_spec, short_grid, config)

    assert len(rows) == 10
    for row in rows:
        assert row.rel_entropy_out_max <= row.rel_entropy_in + 1e-9
        assert row.joint_hs_drift <= 1e-9
        assert row.pinsker_holds and row.pinsker_lhs <= row.rel_entropy_in + 1e-9
        assert all(math.isfinite(v) for v in (row.wigner_lhs, row.wigner_rhs, row.hs_in, row.hs_out_max))
        assert row.chain_eps == pytest.approx(row.rel_entropy_in / math.log(2), rel=1e-12)
        expected_delta = math.sqrt(2 * math.log(2) * row.chain_mu) + math.sqrt(2 * math.log(2) * row.chain_eps)
        assert row.chain_delta == pytest.approx(expected_delta, rel=1e-12)
        assert math.isfinite(row.chain_lhs)
        assert row.chain_holds == (row.chain_lhs <= row.chain_rhs + 1e-9)
    bounds = [event["bound"] for event in violations]
    assert bounds.count("wigner_l2") == sum(not row.wigner_holds for row in rows)
    assert bounds.count("deh_chain") == sum(not row.chain_holds for row in rows)


def test_mixture_and_cat_panels_coincide(protocol, space):
    panels, gap = protocol.wigner_panels(1.0, space, WignerConfig(points=101))
    assert set(panels) == {"coherent_mixture", "even_cat", "odd_cat", "cat_decomposition"}
    assert gap <= 1e-10
    assert panels["odd_cat"].value_at(0.0, 0.0) < 0


def test_affinity_violation_is_detected(protocol, jc_spec, space, monkeypatch):
    members = fock_states.coherent_mixture(1.0, space)
    calls = iter([0.2, 0.4, 0.9])
    monkeypatch.setattr(protocol, "_fidelity_at", lambda rho, spec, tau: next(calls))
    with pytest.raises(InvariantViolationError):
        protocol.convex_closure_check(members, [[0.5, 0.5]], jc_spec, 1.0, 1e-3)
