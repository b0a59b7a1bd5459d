# managers/protocol_manager.py
import logging
import math
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.optimize

from models.hamiltonian import HamiltonianSpec, TimeGrid
from models.reports import (
    BOUND_TOL,
    DECOMPOSITION_TOL,
    S_A,
    S_AB,
    DehReport,
    EntropyCycleReport,
    InvarianceReport,
    RobustnessRow,
    TimeSeries,
    WignerGrid,
)
from models.scenario import WignerConfig
from models.states import DensityMatrix, FockSpace, SourceEnsemble, StateVector
from physics import dynamics, fock_states, linalg_core, measures, phase_space
from physics.errors import InvariantViolationError, NormalizationError
from utils.event_bus import BOUND_VIOLATED, EventBus
from utils.parallel import ordered_map

logger = logging.getLogger(__name__)

AFFINITY_TOL = 1e-10
RECONSTRUCTION_TOL = 1e-12
ENTROPY_DRIFT_TOL = 1e-8
TAU_RESOLUTION = 1e-6
# objective values closer than this count as ties
OBJECTIVE_TIE_TOL = 1e-12


class ProtocolManager:
    """
    Runs the harvesting protocol checks: deterministic harvesting at a stopping
    time, optimal stopping times, decomposition invariance, closure under
    mixing and superposition, source robustness and the entropy cycle.

    Every check starts the qubit in |g> and propagates each source member
    independently, so members (and perturbations) are mapped over the thread
    pool and reassembled in input order.
    """

    def __init__(self, threads: int = 1, event_bus: Optional[EventBus] = None):
        """
        Initialize the protocol manager.

        Args:
            threads: Worker threads for member-wise propagation
            event_bus: Optional bus notified when a recorded bound is violated
        """
        self.threads = max(1, int(threads))
        self.event_bus = event_bus
        self.ground = fock_states.ground_state().projector()
        self.excited = fock_states.excited_state()

    def _map(self, fn, items):
        return ordered_map(fn, items, self.threads)

    def _fidelity_at(self, rho_b: DensityMatrix, spec: HamiltonianSpec, tau: float) -> float:
        rho_a = dynamics.reduced_state_at(self.ground, rho_b, spec, tau)
        return measures.fidelity_to_pure(rho_a, self.excited)

    def verify_deh(self, ensemble: SourceEnsemble, spec: HamiltonianSpec,
                   tau: float, tolerance: float) -> DehReport:
        """
        Check that every member drives the qubit to |e> at ``tau``.

        Args:
            ensemble: Source preparations
            spec: Field-kind Hamiltonian
            tau: Stopping time in units of 1/g
            tolerance: Fidelity threshold is 1 - tolerance

        Returns:
            DehReport with one fidelity per member
        """
        fidelities = self._map(lambda rho: self._fidelity_at(rho, spec, tau), ensemble.states)
        report = DehReport.from_fidelities(tau, fidelities, tolerance)
        logger.info(f"DEH at tau={tau:.6g}: min fidelity {report.min_fidelity:.10f}, achieved={report.achieved}")
        return report

    def _objective(self, ensemble: SourceEnsemble, spec: HamiltonianSpec):
        def populations(times) -> np.ndarray:
            per_member = [dynamics.excited_population(self.ground, rho, spec, times) for rho in ensemble.states]
            return np.clip(np.min(per_member, axis=0), 0.0, 1.0)
        return populations

    def find_optimal_tau(self, ensemble: SourceEnsemble, spec: HamiltonianSpec,
                         window: TimeGrid) -> Tuple[float, float]:
        """
        Stopping time maximizing the worst member's fidelity over ``window``.

        A coarse scan over the window samples picks the earliest best sample;
        a bounded scalar search on the neighbouring bracket refines it to
        1e-6 / g and is kept only when it improves the objective.

        Returns:
            (tau_star, min_fidelity)
        """
        objective = self._objective(ensemble, spec)
        times = window.times
        coarse = objective(times)
        best = int(np.argmax(coarse >= coarse.max() - OBJECTIVE_TIE_TOL))
        tau_star, value = float(times[best]), float(coarse[best])

        lower = times[max(best - 1, 0)]
        upper = times[min(best + 1, times.size - 1)]
        if value > OBJECTIVE_TIE_TOL and upper > lower:
            result = scipy.optimize.minimize_scalar(
                lambda t: -float(objective(t)[0]),
                bounds=(lower, upper),
                method="bounded",
                options={"xatol": TAU_RESOLUTION / spec.g},
            )
            if -result.fun > value:
                tau_star, value = float(result.x), float(-result.fun)
        logger.info(f"Optimal tau {tau_star:.8g} with min fidelity {value:.10f}")
        return tau_star, value

    def _reduced_trajectory(self, ensemble: SourceEnsemble, spec: HamiltonianSpec,
                            grid: TimeGrid) -> np.ndarray:
        """Weighted average of member-wise reduced trajectories, shape (samples, 2, 2)."""
        runs = self._map(
            lambda rho: dynamics.propagate_bipartite(self.ground, rho, spec, grid, with_entropies=False),
            ensemble.states,
        )
        stacked = [np.stack([r.matrix for r in run.rho_a]) for run in runs]
        return sum(w * s for w, s in zip(ensemble.weights, stacked))

    def decomposition_invariance_check(self, decomp_a: SourceEnsemble, decomp_b: SourceEnsemble,
                                       spec: HamiltonianSpec, grid: TimeGrid) -> InvarianceReport:
        """
        Compare the reduced trajectories produced by two decompositions of one source.

        Returns a failed report without propagating when the decompositions
        realize different states.
        """
        distance = measures.hs_distance(fock_states.mix(decomp_a), fock_states.mix(decomp_b))
        if distance > DECOMPOSITION_TOL:
            logger.info(f"Decompositions realize different sources (HS distance {distance:.3e})")
            return InvarianceReport.from_distances(distance, math.nan)

        trajectory_a = self._reduced_trajectory(decomp_a, spec, grid)
        trajectory_b = self._reduced_trajectory(decomp_b, spec, grid)
        deviation = float(np.max(np.linalg.norm(trajectory_a - trajectory_b, axis=(1, 2))))
        report = InvarianceReport.from_distances(distance, deviation)
        logger.info(f"Decomposition invariance: deviation {deviation:.3e}, passed={report.passed}")
        return report

    def convex_closure_check(self, members: SourceEnsemble, weights_grid: Sequence[Sequence[float]],
                             spec: HamiltonianSpec, tau: float, tolerance: float) -> List[DehReport]:
        """
        Verify harvesting for mixtures of ``members`` under each weight vector.

        Raises:
            NormalizationError: for a weight vector that is not a distribution over the members
            InvariantViolationError: if a mixture's fidelity differs from the
                weighted member average by more than 1e-10
        """
        vectors = [np.asarray(w, dtype=float) for w in weights_grid]
        for w in vectors:
            if w.shape != (len(members.members),) or np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
                raise NormalizationError(f"weight vector {w.tolist()} is not a distribution over "
                                         f"{len(members.members)} members")

        member_fidelities = np.array(self._map(lambda rho: self._fidelity_at(rho, spec, tau), members.states))
        reports = []
        for w in vectors:
            mixed = DensityMatrix.from_array(sum(p * rho.matrix for p, rho in zip(w, members.states)))
            fidelity = self._fidelity_at(mixed, spec, tau)
            expected = float(w @ member_fidelities)
            if abs(fidelity - expected) > AFFINITY_TOL:
                raise InvariantViolationError(
                    f"mixture fidelity {fidelity!r} differs from weighted member average {expected!r}")
            reports.append(DehReport.from_fidelities(tau, [fidelity], tolerance))
        return reports

    def superposition_closure_check(self, states: Sequence[StateVector], amplitudes: Sequence[complex],
                                    spec: HamiltonianSpec, tau: float, tolerance: float) -> DehReport:
        """
        Build the sign-pattern superposition ensemble and report its member fidelities.

        The mixture identity sum_r p_r |psi_r><psi_r| = sum_k |a_k|^2 |phi_k><phi_k|
        is always asserted. When the base mixture itself reaches 1 - tolerance,
        the weighted member fidelities must reproduce its fidelity.

        Raises:
            InvariantViolationError: if either identity fails
        """
        ensemble = fock_states.superposition_ensemble(states, amplitudes)
        coeffs = np.asarray(amplitudes, dtype=complex)
        base = DensityMatrix.from_array(
            sum(abs(a) ** 2 * s.projector().matrix for a, s in zip(coeffs, states)))
        gap = float(np.max(np.abs(fock_states.mix(ensemble).matrix - base.matrix)))
        if gap > RECONSTRUCTION_TOL:
            raise InvariantViolationError(f"superposition ensemble misses the base mixture by {gap:.3e}")

        report = self.verify_deh(ensemble, spec, tau, tolerance)
        base_fidelity = self._fidelity_at(base, spec, tau)
        if base_fidelity >= 1.0 - tolerance:
            averaged = float(ensemble.weights @ np.array(report.per_member_fidelity))
            if abs(averaged - base_fidelity) > AFFINITY_TOL:
                raise InvariantViolationError(
                    f"superposition members average {averaged!r}, base mixture reaches {base_fidelity!r}")
        else:
            logger.info(f"Base mixture fidelity {base_fidelity:.6f} below threshold; exactness not asserted")
        return report

    def _robustness_row(self, base: DensityMatrix, perturbed: DensityMatrix, spec: HamiltonianSpec,
                        grid: TimeGrid, base_run: TimeSeries, base_wigner: WignerGrid,
                        wigner_config: WignerConfig, eta: float) -> RobustnessRow:
        smoothed_base = measures.smooth(base, eta)
        smoothed = measures.smooth(perturbed, eta)
        run = dynamics.propagate_bipartite(self.ground, smoothed, spec, grid, with_entropies=False)

        hs_out = [measures.hs_distance(a, b) for a, b in zip(base_run.rho_a, run.rho_a)]
        rel_in = measures.relative_entropy(smoothed_base, smoothed)
        rel_out = [measures.relative_entropy(a, b) for a, b in zip(base_run.rho_a, run.rho_a)]

        difference = np.kron(self.ground.matrix, smoothed_base.matrix - smoothed.matrix)
        joint = [float(np.linalg.norm(d)) for d in linalg_core.evolve_many(difference, dynamics.field_eigensystem(spec),
                                                                           grid.times)]
        joint_drift = float(np.max(np.abs(np.array(joint) - joint[0])))

        perturbed_wigner = phase_space.wigner(
            perturbed, wigner_config.q_range, wigner_config.p_range, wigner_config.points,
            method=wigner_config.method, padding=wigner_config.padding)
        scale = math.sqrt(2 * math.pi)
        wigner_rhs = phase_space.wigner_l2_distance(base_wigner, perturbed_wigner) / scale
        wigner_lhs = measures.hs_distance(base_run.rho_a[-1], run.rho_a[-1]) / scale

        pinsker = measures.pinsker_check(smoothed_base, smoothed)
        chain = measures.approximate_deh_chain(
            base_run.rho_a[-1], run.rho_a[-1], fock_states.excited_state(),
            eps=measures.relative_entropy_bits(smoothed_base, smoothed))

        row = RobustnessRow(
            hs_in=measures.hs_distance(base, perturbed),
            hs_out_max=float(max(hs_out)),
            wigner_lhs=wigner_lhs,
            wigner_rhs=wigner_rhs,
            wigner_holds=bool(wigner_lhs <= wigner_rhs + BOUND_TOL),
            rel_entropy_in=rel_in,
            rel_entropy_out_max=float(max(rel_out)),
            joint_hs_drift=joint_drift,
            pinsker_lhs=pinsker.lhs,
            pinsker_holds=pinsker.holds,
            chain_mu=chain.mu,
            chain_eps=chain.eps,
            chain_delta=chain.delta,
            chain_lhs=chain.lhs,
            chain_rhs=chain.rhs,
            chain_holds=chain.holds,
        )
        if row.rel_entropy_out_max > row.rel_entropy_in + BOUND_TOL:
            raise InvariantViolationError(
                f"relative entropy grew from {row.rel_entropy_in!r} to {row.rel_entropy_out_max!r}")
        if not row.pinsker_holds:
            raise InvariantViolationError(
                f"Pinsker inequality fails on the source pair: {pinsker.lhs!r} > {pinsker.rhs!r}")
        if not row.wigner_holds:
            logger.warning(f"Wigner-level inequality violated: {wigner_lhs:.6g} > {wigner_rhs:.6g}")
            if self.event_bus:
                self.event_bus.publish(BOUND_VIOLATED, {"bound": "wigner_l2", "lhs": wigner_lhs, "rhs": wigner_rhs})
        if not row.chain_holds:
            logger.warning(f"Harvesting bound chain violated: {chain.lhs:.6g} > {chain.rhs:.6g}")
            if self.event_bus:
                self.event_bus.publish(BOUND_VIOLATED, {"bound": "deh_chain", "lhs": chain.lhs, "rhs": chain.rhs})
        return row

    def robustness_sweep(self, base: DensityMatrix, perturbations: Sequence[DensityMatrix],
                         spec: HamiltonianSpec, grid: TimeGrid, wigner_config: WignerConfig,
                         eta: float = measures.DEFAULT_ETA) -> List[RobustnessRow]:
        """
        Measure how a source perturbation propagates to the harvester.

        Sources are smoothed by ``eta`` before propagation so relative entropies
        stay finite. The data-processing inequality is asserted; the
        Wigner-level inequality is recorded in each row.

        Raises:
            InvariantViolationError: if the output relative entropy exceeds the input one
        """
        base_run = dynamics.propagate_bipartite(self.ground, measures.smooth(base, eta), spec, grid,
                                                with_entropies=False)
        base_wigner = phase_space.wigner(base, wigner_config.q_range, wigner_config.p_range,
                                         wigner_config.points, method=wigner_config.method,
                                         padding=wigner_config.padding)
        rows = self._map(
            lambda rho: self._robustness_row(base, rho, spec, grid, base_run, base_wigner, wigner_config, eta),
            perturbations,
        )
        logger.info(f"Robustness sweep over {len(rows)} perturbations complete")
        return rows

    @staticmethod
    def _return_point(times: np.ndarray, entropy: np.ndarray) -> Tuple[float, float]:
        """Minimum of S_A after its first local maximum, or over t > 0 if S_A never rises."""
        start = 1
        for i in range(1, entropy.size - 1):
            if entropy[i] >= entropy[i - 1] and entropy[i] > entropy[i + 1]:
                start = i + 1
                break
        index = start + int(np.argmin(entropy[start:]))
        return float(entropy[index]), float(times[index])

    def entropy_cycle(self, rho_b: DensityMatrix, spec: HamiltonianSpec, grid: TimeGrid,
                      alternative: Optional[SourceEnsemble] = None) -> EntropyCycleReport:
        """
        Track S_A, S_B and S_AB over the protocol.

        Args:
            rho_b: Source state
            spec: Field-kind Hamiltonian
            grid: Time grid
            alternative: Optional decomposition of ``rho_b``; its member-wise
                S_A trajectory is compared with the mixture's

        Raises:
            InvariantViolationError: if S_AB drifts by more than 1e-8
        """
        series = dynamics.propagate_bipartite(self.ground, rho_b, spec, grid, with_entropies=True)
        s_ab = series.channel(S_AB)
        drift = float(np.max(np.abs(s_ab - s_ab[0])))
        if drift > ENTROPY_DRIFT_TOL:
            raise InvariantViolationError(f"joint entropy drifted by {drift:.3e}")

        s_a = series.channel(S_A)
        return_entropy, return_time = self._return_point(series.times, s_a)

        deviation = None
        if alternative is not None:
            trajectory = self._reduced_trajectory(alternative, spec, grid)
            alt_entropy = np.array([measures.von_neumann_entropy(DensityMatrix.from_array(m)) for m in trajectory])
            deviation = float(np.max(np.abs(alt_entropy - s_a)))
        logger.info(f"Entropy cycle: S_AB drift {drift:.3e}, S_A returns to {return_entropy:.6g} at t={return_time:.6g}")
        return EntropyCycleReport(series=series, s_ab_drift=drift, return_entropy=return_entropy,
                                  return_time=return_time, decomposition_deviation=deviation)

    def wigner_panels(self, alpha: complex, space: FockSpace,
                      wigner_config: WignerConfig) -> Tuple[Dict[str, WignerGrid], float]:
        """
        Wigner grids of the coherent mixture, the weighted even and odd cats and
        their sum, plus the largest pointwise gap between the mixture and the sum.
        """
        def grid_of(rho: DensityMatrix) -> WignerGrid:
            return phase_space.wigner(rho, wigner_config.q_range, wigner_config.p_range, wigner_config.points,
                                      method=wigner_config.method, padding=wigner_config.padding)

        cats = fock_states.cat_ensemble(alpha, space)
        mixture, even, odd = self._map(
            grid_of, [fock_states.mix(fock_states.coherent_mixture(alpha, space))] + cats.states)
        weighted_even = phase_space.combine([even], [cats.weights[0]])
        weighted_odd = phase_space.combine([odd], [cats.weights[1]])
        decomposition = phase_space.combine([even, odd], cats.weights)
        gap = float(np.max(np.abs(mixture.values - decomposition.values)))
        panels = {
            "coherent_mixture": mixture,
            "even_cat": weighted_even,
            "odd_cat": weighted_odd,
            "cat_decomposition": decomposition,
        }
        return panels, gap
