"""
Qubit-field Hamiltonians (Jaynes-Cummings with RWA, full Rabi, semiclassical
drive) and propagation of the qubit's reduced state over a time grid.

hbar = 1; frequencies in units of g; the qubit is subsystem A (index slowest).
"""

import functools
import logging
import math
from typing import Dict, Tuple, Union

import numpy as np
import scipy.stats

from models.hamiltonian import HamiltonianSpec, TimeGrid
from models.reports import FIDELITY, P_E, S_A, S_AB, S_B, SemiclassicalReport, TimeSeries
from models.states import DensityMatrix, EigenSystem, FockSpace, StateVector
from physics import linalg_core
from physics.errors import (
    ConvergenceError,
    DimensionMismatchError,
    DomainError,
    InvalidSpecError,
    TruncationError,
)
from physics.fock_states import (
    EXCITED,
    RUNTIME_LEAKAGE_TOL,
    annihilation,
    coherent_state,
    excited_state,
    ground_state,
    number_operator,
    qubit_sigma_minus,
    qubit_sigma_plus,
    qubit_sigma_z,
    truncation_check,
)
from physics.linalg_core import PAULI_X
from physics.measures import fidelity_to_pure, von_neumann_entropy

logger = logging.getLogger(__name__)

QUBIT_DIM = 2
RABI_GUARD_LEVELS = 12
DEFAULT_CONVERGENCE_TOL = 1e-8
DEFAULT_MAX_SUBSTEPS = 2 ** 17
TRUNCATION_MARGIN_SIGMAS = 10.0
SUBSTEP_CHUNK = 2 ** 18


def build_hamiltonian(spec: HamiltonianSpec) -> Union[np.ndarray, Tuple[np.ndarray, np.ndarray]]:
    """
    Hamiltonian matrix for ``spec``.

    Field kinds return one Hermitian matrix of dimension 2 (n_max + 1). The
    semiclassical kind returns ``(H_static, H_drive)`` with
    H(t) = H_static + 2 A cos(omega t + phi) H_drive.
    """
    sz = qubit_sigma_z()
    if spec.kind == "semiclassical":
        return spec.omega0 / 2 * sz, PAULI_X.copy()

    space = FockSpace(n_max=spec.n_max)
    a = annihilation(space)
    identity_a = np.eye(QUBIT_DIM)
    identity_b = np.eye(space.dim)
    free = (spec.omega0 / 2 * np.kron(sz, identity_b)
            + spec.omega_c * np.kron(identity_a, number_operator(space)))
    if spec.kind == "jc_rwa":
        coupling = (np.kron(qubit_sigma_plus(), a)
                    + np.kron(qubit_sigma_minus(), a.conj().T))
    elif spec.kind == "rabi_full":
        coupling = np.kron(PAULI_X, a + a.conj().T)
    else:
        raise InvalidSpecError(f"unknown Hamiltonian kind {spec.kind!r}")
    return linalg_core.symmetrize(free + spec.g * coupling)


def _require_field_kind(spec: HamiltonianSpec) -> None:
    if not spec.is_field_kind:
        raise InvalidSpecError(f"{spec.kind} has no field mode; use propagate_semiclassical")


def _guard_levels(spec: HamiltonianSpec) -> int:
    return RABI_GUARD_LEVELS if spec.kind == "rabi_full" else 2


@functools.lru_cache(maxsize=16)
def field_eigensystem(spec: HamiltonianSpec) -> EigenSystem:
    """Eigendecomposition of the field-kind Hamiltonian, cached per spec."""
    _require_field_kind(spec)
    return linalg_core.eig_hermitian(build_hamiltonian(spec))


def _check_source(rho_a0: DensityMatrix, rho_b0: DensityMatrix, spec: HamiltonianSpec) -> FockSpace:
    space = FockSpace(n_max=spec.n_max)
    if rho_a0.dim != QUBIT_DIM or rho_b0.dim != space.dim:
        raise DimensionMismatchError(
            f"expected a qubit and a {space.dim}-level field, got dimensions {rho_a0.dim} and {rho_b0.dim}"
        )
    leakage = truncation_check(rho_b0, space, guard=_guard_levels(spec))
    if leakage > RUNTIME_LEAKAGE_TOL:
        raise TruncationError(f"initial source populates the top Fock levels ({leakage:.3e})", leakage=leakage)
    return space


def excited_population(
    rho_a0: DensityMatrix,
    rho_b0: DensityMatrix,
    spec: HamiltonianSpec,
    times,
) -> np.ndarray:
    """
    P_e(t) = <e| Tr_B U(t) (rho_A0 (x) rho_B0) U(t)^H |e> at arbitrary times.

    Works in the eigenbasis: with Q = V^H (|e><e| (x) I) V and R = V^H rho V,
    P_e(t) = sum_jk Q_kj R_jk exp(-i (l_j - l_k) t), O(d^2) per time.
    """
    space = _check_source(rho_a0, rho_b0, spec)
    eig = field_eigensystem(spec)
    v = eig.eigenvectors
    rotated = v.conj().T @ np.kron(rho_a0.matrix, rho_b0.matrix) @ v
    # rows of V belonging to |e> (x) |n>
    excited_rows = v[EXCITED * space.dim:(EXCITED + 1) * space.dim, :]
    weights = (excited_rows.conj().T @ excited_rows).T * rotated
    phases = np.exp(-1j * np.outer(np.atleast_1d(np.asarray(times, dtype=float)), eig.eigenvalues))
    return np.real(np.einsum("tj,jk,tk->t", phases, weights, phases.conj()))


def reduced_state_at(rho_a0: DensityMatrix, rho_b0: DensityMatrix, spec: HamiltonianSpec, t: float) -> DensityMatrix:
    """rho_A(t) = Tr_B U(t) (rho_A0 (x) rho_B0) U(t)^H at a single time."""
    space = _check_source(rho_a0, rho_b0, spec)
    rho_ab0 = DensityMatrix.from_array(np.kron(rho_a0.matrix, rho_b0.matrix))
    rho_ab = linalg_core.evolve(rho_ab0, field_eigensystem(spec), t)
    return linalg_core.partial_trace_b(rho_ab, QUBIT_DIM, space.dim)


def propagate_bipartite(
    rho_a0: DensityMatrix,
    rho_b0: DensityMatrix,
    spec: HamiltonianSpec,
    grid: TimeGrid,
    with_entropies: bool = True,
) -> TimeSeries:
    """
    Evolve rho_A0 (x) rho_B0 under the constant field Hamiltonian and record the
    reduced qubit state at every grid time.

    Channels: ``P_e`` and ``fidelity`` (both <e|rho_A|e>), and, when
    ``with_entropies`` is set, ``S_A``, ``S_B`` and ``S_AB`` in nats.

    Raises:
        TruncationError: if rho_B0 (or rho_B at the final sample) populates
            the top Fock levels beyond 1e-6.
    """
    _require_field_kind(spec)
    space = _check_source(rho_a0, rho_b0, spec)
    guard = _guard_levels(spec)

    eig = field_eigensystem(spec)
    rho_ab0 = np.kron(rho_a0.matrix, rho_b0.matrix)
    excited = excited_state()

    reduced = []
    channels: Dict[str, list] = {P_E: [], S_A: [], S_B: [], S_AB: []}
    for rho_ab in linalg_core.evolve_many(rho_ab0, eig, grid.times):
        rho_a = DensityMatrix.from_array(linalg_core.trace_out_b(rho_ab, QUBIT_DIM, space.dim))
        reduced.append(rho_a)
        channels[P_E].append(fidelity_to_pure(rho_a, excited))
        if with_entropies:
            rho_b = DensityMatrix.from_array(linalg_core.trace_out_a(rho_ab, QUBIT_DIM, space.dim))
            channels[S_A].append(von_neumann_entropy(rho_a))
            channels[S_B].append(von_neumann_entropy(rho_b))
            channels[S_AB].append(von_neumann_entropy(DensityMatrix.from_array(rho_ab)))
        last_rho_ab = rho_ab

    last_rho_b = DensityMatrix.from_array(linalg_core.trace_out_a(last_rho_ab, QUBIT_DIM, space.dim))
    final_leakage = truncation_check(last_rho_b, space, guard=guard)
    logger.debug(f"Final-sample leakage of rho_B: {final_leakage:.3e}")
    if final_leakage > RUNTIME_LEAKAGE_TOL:
        raise TruncationError(
            f"source populates the top Fock levels at t={grid.t_end:g} ({final_leakage:.3e})",
            leakage=final_leakage,
        )

    scalars = {P_E: np.array(channels[P_E]), FIDELITY: np.array(channels[P_E])}
    if with_entropies:
        for name in (S_A, S_B, S_AB):
            scalars[name] = np.array(channels[name])
    return TimeSeries(grid=grid, rho_a=reduced, scalars=scalars)


def _step_unitaries(h_static: np.ndarray, h_drive: np.ndarray, amplitude: float,
                    frequency: float, phase: float, midpoints: np.ndarray, h: float) -> np.ndarray:
    """
    exp(-i H(t_mid) h) for every midpoint, in closed form for 2x2 generators.

    H = c0 I + c . sigma gives exp(-i H h) = exp(-i c0 h) (cos(|c| h) I - i sin(|c| h) c_hat . sigma).
    """
    drive = 2 * amplitude * np.cos(frequency * midpoints + phase)
    generators = h_static[None, :, :] + drive[:, None, None] * h_drive[None, :, :]
    c0 = np.real(generators[:, 0, 0] + generators[:, 1, 1]) / 2
    cz = np.real(generators[:, 0, 0] - generators[:, 1, 1]) / 2
    cx = np.real(generators[:, 0, 1])
    cy = -np.imag(generators[:, 0, 1])
    norm = np.sqrt(cx ** 2 + cy ** 2 + cz ** 2)
    cos_term = np.cos(norm * h)
    # sin(|c| h) / |c|, finite at |c| = 0
    sinc_term = h * np.sinc(norm * h / np.pi)
    global_phase = np.exp(-1j * c0 * h)
    steps = np.empty((midpoints.size, 2, 2), dtype=complex)
    steps[:, 0, 0] = cos_term - 1j * sinc_term * cz
    steps[:, 1, 1] = cos_term + 1j * sinc_term * cz
    steps[:, 0, 1] = -1j * sinc_term * (cx - 1j * cy)
    steps[:, 1, 0] = -1j * sinc_term * (cx + 1j * cy)
    return steps * global_phase[:, None, None]


def _ordered_product(steps: np.ndarray) -> np.ndarray:
    """Time-ordered products along axis 1 (later steps to the left); axis length is a power of two."""
    while steps.shape[1] > 1:
        steps = np.matmul(steps[:, 1::2], steps[:, 0::2])
    return steps[:, 0]


def _interval_propagators(spec: HamiltonianSpec, grid: TimeGrid, substeps: int) -> np.ndarray:
    h_static, h_drive = build_hamiltonian(spec)
    dt = grid.step
    h = dt / substeps
    starts = grid.times[:-1]
    intervals_per_chunk = max(1, SUBSTEP_CHUNK // substeps)
    blocks = []
    for first in range(0, starts.size, intervals_per_chunk):
        chunk = starts[first:first + intervals_per_chunk]
        midpoints = (chunk[:, None] + (np.arange(substeps)[None, :] + 0.5) * h).ravel()
        steps = _step_unitaries(h_static, h_drive, spec.drive_amplitude,
                                spec.resolved_drive_frequency, spec.phase, midpoints, h)
        blocks.append(_ordered_product(steps.reshape(chunk.size, substeps, 2, 2)))
    return np.concatenate(blocks)


def _semiclassical_populations(rho_a0: DensityMatrix, interval_props: np.ndarray):
    states = [rho_a0.matrix]
    rho = rho_a0.matrix
    for u in interval_props:
        rho = u @ rho @ u.conj().T
        states.append(rho)
    return states, np.array([np.real(s[EXCITED, EXCITED]) for s in states])


def propagate_semiclassical(
    rho_a0: DensityMatrix,
    spec: HamiltonianSpec,
    grid: TimeGrid,
    substeps: int = 8,
    convergence_tol: float = DEFAULT_CONVERGENCE_TOL,
    max_substeps: int = DEFAULT_MAX_SUBSTEPS,
) -> TimeSeries:
    """
    Evolve the qubit under H(t) = (omega0/2) sigma_z + 2 A cos(omega t + phi) sigma_x.

    Each grid interval is a time-ordered product of midpoint exponentials.
    The substep count doubles until doubling changes no P_e sample by more
    than ``convergence_tol``.

    Raises:
        ConvergenceError: if ``max_substeps`` is reached without convergence.
    """
    if spec.kind != "semiclassical":
        raise InvalidSpecError(f"propagate_semiclassical needs a semiclassical spec, got {spec.kind}")
    if rho_a0.dim != QUBIT_DIM:
        raise DimensionMismatchError(f"expected a qubit state, got dimension {rho_a0.dim}")
    if substeps < 1:
        raise DomainError(f"substeps must be positive, got {substeps}")
    current = 1 << (substeps - 1).bit_length()

    states, populations = _semiclassical_populations(rho_a0, _interval_propagators(spec, grid, current))
    while True:
        refined = current * 2
        if refined > max_substeps:
            raise ConvergenceError(
                f"P_e did not converge to {convergence_tol:g} within {max_substeps} substeps per interval"
            )
        fine_states, fine_populations = _semiclassical_populations(
            rho_a0, _interval_propagators(spec, grid, refined))
        change = float(np.max(np.abs(fine_populations - populations)))
        logger.debug(f"Semiclassical substeps {current} -> {refined}: max P_e change {change:.3e}")
        states, populations, current = fine_states, fine_populations, refined
        if change < convergence_tol:
            break

    reduced = [DensityMatrix.from_array(s) for s in states]
    entropies = np.array([von_neumann_entropy(r) for r in reduced])
    return TimeSeries(grid=grid, rho_a=reduced,
                      scalars={P_E: populations, FIDELITY: populations.copy(), S_A: entropies})


def semiclassical_prediction(alpha_mag: float, g: float, times: np.ndarray) -> np.ndarray:
    """P_e = sin^2(g |alpha| t)."""
    return np.sin(g * alpha_mag * times) ** 2


def poisson_rabi_sum(alpha_mag: float, g: float, times: np.ndarray, n_max: int) -> np.ndarray:
    """Resonant JCM oracle P_e(t) = sum_n p_n sin^2(g sqrt(n) t) for a coherent source."""
    n = np.arange(n_max + 1)
    weights = scipy.stats.poisson.pmf(n, alpha_mag ** 2)
    return np.sin(g * np.outer(times, np.sqrt(n))) ** 2 @ weights


def semiclassical_limit_compare(
    alpha_mag: float,
    spec_full: HamiltonianSpec,
    grid: TimeGrid,
    periods: float = 2.0,
) -> SemiclassicalReport:
    """
    Compare the resonant JCM with a coherent source |alpha| against sin^2(g|alpha|t).

    The grid must end by periods * pi / (2 g |alpha|). The collapse-time
    estimate is the Gaussian-envelope time sqrt(2)/g.

    Raises:
        DomainError: for |alpha| = 0 or a grid beyond the allowed window.
        TruncationError: if n_max < |alpha|^2 + 10 |alpha|.
    """
    if spec_full.kind != "jc_rwa":
        raise InvalidSpecError(f"semiclassical comparison needs jc_rwa, got {spec_full.kind}")
    if not alpha_mag > 0:
        raise DomainError("semiclassical comparison needs |alpha| > 0")
    required = alpha_mag ** 2 + TRUNCATION_MARGIN_SIGMAS * alpha_mag
    if spec_full.n_max < required:
        raise TruncationError(
            f"n_max={spec_full.n_max} below |alpha|^2 + 10|alpha| = {required:.1f}")
    window = periods * math.pi / (2 * spec_full.g * alpha_mag)
    if grid.t_end > window * (1 + 1e-12):
        raise DomainError(f"grid ends at {grid.t_end:g}, beyond the comparison window {window:g}")

    space = FockSpace(n_max=spec_full.n_max)
    psi0 = np.kron(ground_state().amplitudes, coherent_state(alpha_mag, space).amplitudes)
    eig = linalg_core.eig_hermitian(build_hamiltonian(spec_full))
    amplitudes = linalg_core.evolve_state_many(StateVector.normalized(psi0), eig, grid.times)
    excited_block = amplitudes[:, EXCITED * space.dim:(EXCITED + 1) * space.dim]
    p_e_full = np.sum(np.abs(excited_block) ** 2, axis=1)
    top = np.sum(np.abs(amplitudes.reshape(-1, QUBIT_DIM, space.dim)[:, :, -2:]) ** 2, axis=(1, 2))
    if float(top.max()) > RUNTIME_LEAKAGE_TOL:
        raise TruncationError(f"coherent source reaches the top Fock levels ({top.max():.3e})",
                              leakage=float(top.max()))

    p_e_semi = semiclassical_prediction(alpha_mag, spec_full.g, grid.times)
    oracle = poisson_rabi_sum(alpha_mag, spec_full.g, grid.times, spec_full.n_max)
    report = SemiclassicalReport(
        alpha_mag=alpha_mag,
        max_deviation=float(np.max(np.abs(p_e_full - p_e_semi))),
        collapse_time_estimate=math.sqrt(2.0) / spec_full.g,
        oracle_deviation=float(np.max(np.abs(p_e_full - oracle))),
        times=grid.times,
        p_e_full=p_e_full,
        p_e_semiclassical=p_e_semi,
    )
    logger.info(f"Semiclassical comparison |alpha|={alpha_mag}: max deviation {report.max_deviation:.4g}")
    return report
