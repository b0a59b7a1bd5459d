"""
Dense complex linear algebra: Kronecker products, partial traces, Hermitian
eigendecomposition and eigenbasis propagation.

Bipartite indices are A-major: joint index = i_A * dim_B + i_B. hbar = 1.
"""

import logging
from typing import Iterable, Iterator

import numpy as np
import scipy.linalg

from models.states import DensityMatrix, EigenSystem, StateVector, as_complex_matrix
from physics.errors import DimensionMismatchError, NonHermitianError

logger = logging.getLogger(__name__)

HERMITIAN_INPUT_TOL = 1e-8

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def symmetrize(matrix: np.ndarray) -> np.ndarray:
    """Return (M + M^H) / 2."""
    return (matrix + matrix.conj().T) / 2


def tensor(a, b) -> np.ndarray:
    """Kronecker product a (x) b with the A-major index convention."""
    return np.kron(as_complex_matrix(a), as_complex_matrix(b))


def _check_bipartite(matrix: np.ndarray, dim_a: int, dim_b: int) -> None:
    if dim_a < 1 or dim_b < 1 or matrix.shape != (dim_a * dim_b, dim_a * dim_b):
        raise DimensionMismatchError(
            f"operator of shape {matrix.shape} is not a {dim_a}x{dim_b} bipartite operator"
        )


def trace_out_b(matrix: np.ndarray, dim_a: int, dim_b: int) -> np.ndarray:
    """Partial trace over B of any bipartite operator (no state invariants assumed)."""
    matrix = np.asarray(matrix)
    _check_bipartite(matrix, dim_a, dim_b)
    return np.einsum("ikjk->ij", matrix.reshape(dim_a, dim_b, dim_a, dim_b))


def trace_out_a(matrix: np.ndarray, dim_a: int, dim_b: int) -> np.ndarray:
    """Partial trace over A of any bipartite operator."""
    matrix = np.asarray(matrix)
    _check_bipartite(matrix, dim_a, dim_b)
    return np.einsum("kikj->ij", matrix.reshape(dim_a, dim_b, dim_a, dim_b))


def partial_trace_b(rho_ab: DensityMatrix, dim_a: int, dim_b: int) -> DensityMatrix:
    """Reduced state rho_A = Tr_B rho_AB."""
    return DensityMatrix.from_array(trace_out_b(rho_ab.matrix, dim_a, dim_b))


def partial_trace_a(rho_ab: DensityMatrix, dim_a: int, dim_b: int) -> DensityMatrix:
    """Reduced state rho_B = Tr_A rho_AB."""
    return DensityMatrix.from_array(trace_out_a(rho_ab.matrix, dim_a, dim_b))


def eig_hermitian(h) -> EigenSystem:
    """
    Diagonalize a Hermitian matrix.

    The input is symmetrized before decomposition; inputs whose anti-Hermitian
    part exceeds 1e-8 * max|H| are rejected.

    Raises:
        NonHermitianError: if ``h`` is not Hermitian within tolerance.
    """
    h = as_complex_matrix(h)
    if h.shape[0] != h.shape[1]:
        raise DimensionMismatchError(f"cannot diagonalize non-square matrix of shape {h.shape}")
    scale = float(np.max(np.abs(h)))
    asym = float(np.max(np.abs(h - h.conj().T)))
    if asym > HERMITIAN_INPUT_TOL * scale:
        raise NonHermitianError(f"matrix is not Hermitian: max |H - H^H| = {asym:.3e}")
    eigenvalues, eigenvectors = scipy.linalg.eigh(symmetrize(h))
    logger.debug(f"Diagonalized {h.shape[0]}x{h.shape[0]} generator, spectrum "
                 f"[{eigenvalues[0]:.6g}, {eigenvalues[-1]:.6g}]")
    return EigenSystem(eigenvalues=eigenvalues, eigenvectors=eigenvectors)


def propagator(eig: EigenSystem, t: float) -> np.ndarray:
    """U(t) = V diag(exp(-i lambda_k t)) V^H."""
    v = eig.eigenvectors
    return (v * np.exp(-1j * eig.eigenvalues * t)) @ v.conj().T


def _check_dims(dim: int, eig: EigenSystem) -> None:
    if dim != eig.dim:
        raise DimensionMismatchError(f"state dimension {dim} does not match generator dimension {eig.dim}")


def evolve(rho: DensityMatrix, eig: EigenSystem, t: float) -> DensityMatrix:
    """U(t) rho U(t)^H for the generator diagonalized in ``eig``."""
    _check_dims(rho.dim, eig)
    u = propagator(eig, t)
    return DensityMatrix.from_array(u @ rho.matrix @ u.conj().T)


def evolve_many(rho, eig: EigenSystem, times: Iterable[float]) -> Iterator[np.ndarray]:
    """
    Yield U(t) rho U(t)^H for every t as symmetrized arrays.

    ``rho`` may be a DensityMatrix or any square operator; it is rotated into
    the eigenbasis once and only the phases change per sample.
    """
    matrix = rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)
    _check_dims(matrix.shape[0], eig)
    v = eig.eigenvectors
    rotated = v.conj().T @ matrix @ v
    for t in times:
        phases = np.exp(-1j * eig.eigenvalues * t)
        yield symmetrize(v @ (phases[:, None] * rotated * phases.conj()[None, :]) @ v.conj().T)


def evolve_state(psi: StateVector, eig: EigenSystem, t: float) -> StateVector:
    """U(t) |psi>."""
    _check_dims(psi.dim, eig)
    return StateVector.normalized(propagator(eig, t) @ psi.amplitudes)


def evolve_state_many(psi: StateVector, eig: EigenSystem, times: Iterable[float]) -> np.ndarray:
    """Amplitudes U(t)|psi> for all ``times`` stacked as rows."""
    _check_dims(psi.dim, eig)
    v = eig.eigenvectors
    coefficients = v.conj().T @ psi.amplitudes
    phases = np.exp(-1j * np.outer(np.asarray(list(times), dtype=float), eig.eigenvalues))
    return (phases * coefficients[None, :]) @ v.T
