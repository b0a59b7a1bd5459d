# managers/scenario_manager.py
import logging
import math
from typing import Any, Callable, Dict, List, Optional

import numpy as np

from managers.data_manager import DataManager
from managers.protocol_manager import ProtocolManager
from models.hamiltonian import TimeGrid
from models.reports import P_E, S_A, S_AB, S_B
from models.scenario import CatEnsembleSource, CoherentMixtureSource, OutputSpec, ScenarioConfig, SuperpositionSource
from physics import dynamics, fock_states, phase_space
from utils.event_bus import OUTPUT_WRITTEN, SCENARIO_FAILED, SCENARIO_FINISHED, SCENARIO_STARTED, EventBus
from utils.parallel import ordered_map

logger = logging.getLogger(__name__)

# Default file names when a scenario declares no outputs.
DEFAULT_OUTPUTS = {
    "fidelity": (("fidelity", "fidelity.csv"),),
    "entropy": (("entropy", "entropy.csv"), ("report", "entropy_report.json")),
    "wigner": (("wigner", "wigner.csv"),),
    "verify": (("report", "verify.json"),),
    "robustness": (("report", "robustness.json"),),
    "semiclassical": (("report", "semiclassical.json"), ("trajectory", "semiclassical.csv")),
}


class ScenarioManager:
    """
    Executes one scenario end to end: builds the sources, runs the matching
    protocol entry point and writes every declared output channel.
    """

    def __init__(self, data_manager: DataManager, threads: int = 1, event_bus: Optional[EventBus] = None):
        """
        Initialize the scenario manager.

        Args:
            data_manager: Writes outputs under the run's output directory
            threads: Worker threads handed to the protocol layer
            event_bus: Bus for lifecycle events; a private one is created if omitted
        """
        self.data_manager = data_manager
        self.event_bus = event_bus or EventBus()
        self.threads = threads
        self.protocol = ProtocolManager(threads=threads, event_bus=self.event_bus)
        self._runners: Dict[str, Callable[[ScenarioConfig], Dict[str, Callable[[str], str]]]] = {
            "fidelity": self._run_fidelity,
            "entropy": self._run_entropy,
            "wigner": self._run_wigner,
            "verify": self._run_verify,
            "robustness": self._run_robustness,
            "semiclassical": self._run_semiclassical,
        }

    @staticmethod
    def outputs_for(scenario: ScenarioConfig) -> List[OutputSpec]:
        if scenario.outputs:
            return list(scenario.outputs)
        return [OutputSpec(channel=c, path=p) for c, p in DEFAULT_OUTPUTS[scenario.kind]]

    def run(self, scenario: ScenarioConfig) -> List[str]:
        """
        Run a scenario and write its outputs.

        Returns:
            Paths of the written files, in declaration order

        Raises:
            HarvestError: any validation or physics failure, after publishing ``scenario_failed``
        """
        self.event_bus.publish(SCENARIO_STARTED, {"name": scenario.name, "kind": scenario.kind})
        logger.info(f"Running {scenario.kind} scenario '{scenario.name}'")
        try:
            writers = self._runners[scenario.kind](scenario)
            written = []
            for output in self.outputs_for(scenario):
                path = writers[output.channel](output.path)
                written.append(path)
                self.event_bus.publish(OUTPUT_WRITTEN, {"name": scenario.name, "channel": output.channel,
                                                        "path": path})
        except Exception as e:
            self.event_bus.publish(SCENARIO_FAILED, {"name": scenario.name, "error": str(e)})
            raise
        self.event_bus.publish(SCENARIO_FINISHED, {"name": scenario.name, "outputs": written})
        return written

    def _csv(self, header, columns) -> Callable[[str], str]:
        return lambda path: self.data_manager.write_csv(path, header, columns)

    def _json(self, payload) -> Callable[[str], str]:
        return lambda path: self.data_manager.write_json(path, payload)

    def _run_fidelity(self, scenario: ScenarioConfig):
        spec, grid = scenario.spec, scenario.grid
        ground = fock_states.ground_state().projector()
        ensemble = scenario.build_ensemble()
        runs = ordered_map(
            lambda rho: dynamics.propagate_bipartite(ground, rho, spec, grid, with_entropies=False),
            ensemble.states, self.threads)
        times = grid.times
        count = len(runs)
        return {
            "fidelity": self._csv(["t"] + [f"fidelity_{i}" for i in range(count)],
                                  [times] + [run.channel("fidelity") for run in runs]),
            "populations": self._csv(["t"] + [f"P_e_{i}" for i in range(count)],
                                     [times] + [run.channel(P_E) for run in runs]),
        }

    def _run_entropy(self, scenario: ScenarioConfig):
        alternative = scenario.entropy.alternative
        report = self.protocol.entropy_cycle(
            scenario.build_state(), scenario.spec, scenario.grid,
            alternative=scenario.build_ensemble(alternative) if alternative is not None else None,
        )
        series = report.series
        payload = {"scenario": scenario.name, **report.model_dump(exclude={"series"})}
        return {
            "entropy": self._csv(["t", S_A, S_B, S_AB],
                                 [series.times, series.channel(S_A), series.channel(S_B), series.channel(S_AB)]),
            "report": self._json(payload),
        }

    def _run_wigner(self, scenario: ScenarioConfig):
        config = scenario.wigner
        rho = scenario.build_state()
        grid = phase_space.wigner(rho, config.q_range, config.p_range, config.points,
                                  method=config.method, padding=config.padding)
        q = np.repeat(grid.q_axis, grid.p_axis.size)
        p = np.tile(grid.p_axis, grid.q_axis.size)

        def report(path: str) -> str:
            check = phase_space.purity_identity_check(rho, grid)
            payload = {
                "scenario": scenario.name,
                "origin_value": grid.value_at(0.0, 0.0),
                "normalization": phase_space.wigner_normalization(grid),
                "purity": rho.purity(),
                "purity_mismatch": check.lhs,
                "purity_identity_holds": check.holds,
                "minimum": float(grid.values.min()),
            }
            if isinstance(scenario.source, (CoherentMixtureSource, CatEnsembleSource)):
                # same state, two decompositions: their grids must coincide
                _, gap = self.protocol.wigner_panels(scenario.source.alpha, scenario.space, config)
                payload["decomposition_gap"] = gap
            return self.data_manager.write_json(path, payload)

        return {"wigner": self._csv(["q", "p", "W"], [q, p, grid.values.ravel()]), "report": report}

    def _run_verify(self, scenario: ScenarioConfig):
        options = scenario.verify
        spec, tolerance = scenario.spec, scenario.tolerances.deh
        payload: Dict[str, Any] = {"scenario": scenario.name, "check": options.check}

        if options.check == "deh":
            ensemble = scenario.build_ensemble()
            tau = options.tau
            if tau is None:
                tau, best = self.protocol.find_optimal_tau(ensemble, spec, scenario.grid)
                payload["optimal_tau"] = {"tau_star": tau, "min_fidelity": best}
            payload.update(self.protocol.verify_deh(ensemble, spec, tau, tolerance).model_dump())
        elif options.check == "decomposition":
            report = self.protocol.decomposition_invariance_check(
                scenario.build_ensemble(), scenario.build_ensemble(options.alternative), spec, scenario.grid)
            payload.update(report.model_dump())
        elif options.check == "convex":
            tau = self._tau_or_optimal(scenario)
            reports = self.protocol.convex_closure_check(
                scenario.build_ensemble(), options.weights_grid, spec, tau, tolerance)
            payload.update({"tau": tau, "weights_grid": options.weights_grid,
                            "reports": [r.model_dump() for r in reports]})
        else:
            source: SuperpositionSource = scenario.source
            tau = self._tau_or_optimal(scenario)
            report = self.protocol.superposition_closure_check(
                source.pure_states(scenario.space), source.complex_amplitudes, spec, tau, tolerance)
            payload.update(report.model_dump())
        return {"report": self._json(payload)}

    def _tau_or_optimal(self, scenario: ScenarioConfig) -> float:
        if scenario.verify.tau is not None:
            return scenario.verify.tau
        tau, _ = self.protocol.find_optimal_tau(scenario.build_ensemble(), scenario.spec, scenario.grid)
        return tau

    def _run_robustness(self, scenario: ScenarioConfig):
        options = scenario.robustness
        rows = self.protocol.robustness_sweep(
            scenario.build_state(),
            [scenario.build_state(p) for p in options.perturbations],
            scenario.spec, scenario.grid, scenario.wigner, eta=options.smoothing_eta,
        )
        payload = {
            "scenario": scenario.name,
            "smoothing_eta": options.smoothing_eta,
            "rows": [row.model_dump() for row in rows],
            "wigner_violations": sum(not row.wigner_holds for row in rows),
            "chain_violations": sum(not row.chain_holds for row in rows),
        }
        return {"report": self._json(payload)}

    def _run_semiclassical(self, scenario: ScenarioConfig):
        options = scenario.semiclassical
        spec = scenario.spec
        threshold = scenario.tolerances.semiclassical

        if spec.kind == "semiclassical":
            series = dynamics.propagate_semiclassical(
                fock_states.ground_state().projector(), spec, scenario.grid, substeps=options.substeps,
                convergence_tol=options.convergence_tol, max_substeps=options.max_substeps)
            times = series.times
            p_e = series.channel(P_E)
            rotating = np.sin(spec.drive_amplitude * times) ** 2
            deviation = float(np.max(np.abs(p_e - rotating)))
            payload = {"scenario": scenario.name, "kind": spec.kind, "max_rwa_deviation": deviation,
                       "within_tolerance": deviation <= threshold, "tolerance": threshold}
            return {"report": self._json(payload),
                    "trajectory": self._csv(["t", "P_e", "P_e_rotating_wave"], [times, p_e, rotating])}

        alpha = options.alpha_mag
        grid = TimeGrid(t_end=options.rabi_phase_end / (spec.g * alpha), samples=scenario.grid.samples)
        report = dynamics.semiclassical_limit_compare(alpha, spec, grid, periods=2.0)
        payload = {
            "scenario": scenario.name,
            "rabi_phase_end": options.rabi_phase_end,
            "within_tolerance": report.max_deviation <= threshold,
            "tolerance": threshold,
            **report.model_dump(exclude={"times", "p_e_full", "p_e_semiclassical"}),
        }
        if not math.isfinite(report.max_deviation) or report.max_deviation > threshold:
            logger.warning(f"Semiclassical deviation {report.max_deviation:.4g} exceeds {threshold:g}")
        return {"report": self._json(payload),
                "trajectory": self._csv(["t", "P_e_full", "P_e_semiclassical"],
                                        [report.times, report.p_e_full, report.p_e_semiclassical])}
