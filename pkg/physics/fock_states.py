"""
Field states on a truncated Fock space and the qubit operators they couple to.

Qubit basis convention: index 0 is |g>, index 1 is |e>.
"""

import itertools
import logging
import math
from typing import Sequence

import numpy as np
import scipy.stats

from models.states import (
    DensityMatrix,
    FockSpace,
    SourceEnsemble,
    StateVector,
)
from physics.errors import (
    DegenerateStateError,
    DimensionMismatchError,
    DomainError,
    NormalizationError,
    TruncationError,
)

logger = logging.getLogger(__name__)

LEAKAGE_TOL = 1e-8
RUNTIME_LEAKAGE_TOL = 1e-6
AMPLITUDE_TOL = 1e-12
ZERO_NORM_TOL = 1e-14
MAX_SUPERPOSED_STATES = 12

GROUND = 0
EXCITED = 1


def ground_state() -> StateVector:
    return StateVector(amplitudes=[1.0, 0.0])


def excited_state() -> StateVector:
    return StateVector(amplitudes=[0.0, 1.0])


def qubit_sigma_z() -> np.ndarray:
    """|e><e| - |g><g|."""
    return np.diag([-1.0, 1.0]).astype(complex)


def qubit_sigma_plus() -> np.ndarray:
    """|e><g|."""
    return np.array([[0, 0], [1, 0]], dtype=complex)


def qubit_sigma_minus() -> np.ndarray:
    """|g><e|."""
    return qubit_sigma_plus().T.copy()


def annihilation(space: FockSpace) -> np.ndarray:
    """a|n> = sqrt(n)|n-1> on the truncated space."""
    return np.diag(np.sqrt(np.arange(1, space.dim)), k=1).astype(complex)


def creation(space: FockSpace) -> np.ndarray:
    return annihilation(space).conj().T


def number_operator(space: FockSpace) -> np.ndarray:
    return np.diag(np.arange(space.dim)).astype(complex)


def fock_state(n: int, space: FockSpace) -> StateVector:
    if not 0 <= n <= space.n_max:
        raise DomainError(f"Fock level {n} outside 0..{space.n_max}")
    amplitudes = np.zeros(space.dim, dtype=complex)
    amplitudes[n] = 1.0
    return StateVector(amplitudes=amplitudes)


def _coherent_amplitudes(alpha: complex, dim: int) -> np.ndarray:
    """Unnormalized-by-truncation coefficients exp(-|alpha|^2/2) alpha^n / sqrt(n!)."""
    ratios = np.empty(dim, dtype=complex)
    ratios[0] = math.exp(-abs(alpha) ** 2 / 2)
    ratios[1:] = alpha / np.sqrt(np.arange(1, dim))
    return np.cumprod(ratios)


def coherent_leakage(alpha: complex, space: FockSpace) -> float:
    """Poisson weight above n_max, sum_{n > n_max} |c_n|^2."""
    return float(scipy.stats.poisson.sf(space.n_max, abs(alpha) ** 2))


def _require_coherent_fits(alpha: complex, space: FockSpace) -> None:
    leakage = coherent_leakage(alpha, space)
    if leakage > LEAKAGE_TOL:
        raise TruncationError(
            f"coherent amplitude |alpha|={abs(alpha):.4g} leaks {leakage:.3e} above n_max={space.n_max}",
            leakage=leakage,
        )


def coherent_state(alpha: complex, space: FockSpace) -> StateVector:
    """
    Coherent state |alpha>, renormalized after truncation.

    Raises:
        TruncationError: when more than 1e-8 of the Poisson weight lies above n_max.
    """
    _require_coherent_fits(alpha, space)
    return StateVector.normalized(_coherent_amplitudes(alpha, space.dim))


def cat_normalization(alpha: complex, parity: str) -> float:
    """N_pm = 2 (1 pm exp(-2|alpha|^2))."""
    sign = _parity_sign(parity)
    return 2.0 * (1.0 + sign * math.exp(-2.0 * abs(alpha) ** 2))


def _parity_sign(parity: str) -> int:
    if parity == "even":
        return 1
    if parity == "odd":
        return -1
    raise DomainError(f"parity must be 'even' or 'odd', got {parity!r}")


def cat_state(alpha: complex, parity: str, space: FockSpace) -> StateVector:
    """
    (|alpha> pm |-alpha>) / sqrt(2 (1 pm exp(-2|alpha|^2))) with the exact normalization.

    Raises:
        TruncationError: when |alpha| does not fit in the space.
        DegenerateStateError: for the odd cat at alpha = 0.
    """
    sign = _parity_sign(parity)
    _require_coherent_fits(alpha, space)
    combined = _coherent_amplitudes(alpha, space.dim) + sign * _coherent_amplitudes(-alpha, space.dim)
    # the parity sector opposite to the cat is zero analytically
    n = np.arange(space.dim)
    combined[(n % 2) != (0 if sign > 0 else 1)] = 0.0
    if np.linalg.norm(combined) <= ZERO_NORM_TOL:
        raise DegenerateStateError(f"{parity} cat state with alpha={alpha} is the zero vector")
    return StateVector.normalized(combined / math.sqrt(cat_normalization(alpha, parity)))


def thermal_leakage(n_bar: float, space: FockSpace) -> float:
    """Geometric tail (n_bar / (1 + n_bar))^(n_max + 1)."""
    if n_bar == 0:
        return 0.0
    return float((n_bar / (1.0 + n_bar)) ** (space.n_max + 1))


def thermal_state(n_bar: float, space: FockSpace) -> DensityMatrix:
    """
    Diagonal Gibbs state with p_n = n_bar^n / (1 + n_bar)^(n+1), renormalized after truncation.
    """
    if n_bar < 0:
        raise DomainError(f"mean photon number must be non-negative, got {n_bar}")
    leakage = thermal_leakage(n_bar, space)
    if leakage > LEAKAGE_TOL:
        raise TruncationError(
            f"thermal state n_bar={n_bar} leaks {leakage:.3e} above n_max={space.n_max}",
            leakage=leakage,
        )
    n = np.arange(space.dim)
    if n_bar == 0:
        populations = (n == 0).astype(float)
    else:
        ratio = n_bar / (1.0 + n_bar)
        populations = ratio ** n / (1.0 + n_bar)
    populations = populations / populations.sum()
    return DensityMatrix(matrix=np.diag(populations))


def n_bar_from_beta(beta: float, omega_c: float) -> float:
    """n_bar = 1 / (exp(beta omega_c) - 1)."""
    if beta <= 0 or omega_c <= 0:
        raise DomainError("beta and omega_c must be positive")
    return 1.0 / math.expm1(beta * omega_c)


def beta_from_n_bar(n_bar: float, omega_c: float) -> float:
    """Inverse of n_bar_from_beta."""
    if n_bar <= 0 or omega_c <= 0:
        raise DomainError("n_bar and omega_c must be positive")
    return math.log1p(1.0 / n_bar) / omega_c


def mix(ensemble: SourceEnsemble) -> DensityMatrix:
    """Sum_i p_i rho_i."""
    weights = ensemble.weights
    total = float(weights.sum())
    if abs(total - 1.0) > 1e-12 or np.any(weights < 0):
        raise NormalizationError(f"ensemble weights sum to {total!r}")
    mixed = sum(m.weight * m.state.matrix for m in ensemble.members)
    return DensityMatrix.from_array(mixed)


def coherent_mixture(alpha: complex, space: FockSpace) -> SourceEnsemble:
    """1/2 |alpha><alpha| + 1/2 |-alpha><-alpha|."""
    return SourceEnsemble.from_states(
        [(0.5, coherent_state(alpha, space).projector()),
         (0.5, coherent_state(-alpha, space).projector())],
        label=f"coherent_mixture(alpha={alpha})",
    )


def cat_ensemble(alpha: complex, space: FockSpace) -> SourceEnsemble:
    """
    Even/odd cat decomposition of the coherent mixture, weights (1 pm exp(-2|alpha|^2)) / 2.
    """
    overlap = math.exp(-2.0 * abs(alpha) ** 2)
    return SourceEnsemble.from_states(
        [((1.0 + overlap) / 2, cat_state(alpha, "even", space).projector()),
         ((1.0 - overlap) / 2, cat_state(alpha, "odd", space).projector())],
        label=f"cat_ensemble(alpha={alpha})",
    )


def phase_ensemble(alpha_mag: float, phases: Sequence[float], space: FockSpace) -> SourceEnsemble:
    """Equal-weight ensemble of |alpha_mag e^{i phi}> over ``phases``."""
    weight = 1.0 / len(phases)
    return SourceEnsemble.from_states(
        [(weight, coherent_state(alpha_mag * np.exp(1j * phi), space).projector()) for phi in phases],
        label=f"phase_ensemble(|alpha|={alpha_mag})",
    )


def superposition_ensemble(states: Sequence[StateVector], amplitudes: Sequence[complex]) -> SourceEnsemble:
    """
    Sign-pattern ensemble whose mixture equals sum_k |a_k|^2 |phi_k><phi_k|.

    Member r is the normalized sum_k (-1)^{r_k} a_k |phi_k> with weight
    N_r / 2^(m-1), N_r its squared norm. Patterns are enumerated with
    r_1 = 0; the complementary pattern differs by a global sign and carries the
    same projector, so its weight is folded in. Members with N_r <= 1e-14 are
    dropped with their weight.

    Raises:
        NormalizationError: if sum_k |a_k|^2 != 1.
        DomainError: for more than 12 states.
    """
    m = len(states)
    if m == 0 or m != len(amplitudes):
        raise DimensionMismatchError(f"{m} states for {len(amplitudes)} amplitudes")
    if m > MAX_SUPERPOSED_STATES:
        raise DomainError(f"too many states ({m}); at most {MAX_SUPERPOSED_STATES} are supported")
    dims = {s.dim for s in states}
    if len(dims) != 1:
        raise DimensionMismatchError(f"states have mixed dimensions {sorted(dims)}")
    coeffs = np.asarray(amplitudes, dtype=complex)
    norm_sq = float(np.sum(np.abs(coeffs) ** 2))
    if abs(norm_sq - 1.0) > AMPLITUDE_TOL:
        raise NormalizationError(f"amplitudes have sum |a_k|^2 = {norm_sq!r}, expected 1")

    basis = np.stack([s.amplitudes for s in states])
    members = []
    dropped = 0
    for tail in itertools.product((1, -1), repeat=m - 1):
        signs = np.array((1,) + tail)
        vector = (signs * coeffs) @ basis
        n_r = float(np.vdot(vector, vector).real)
        if n_r <= ZERO_NORM_TOL:
            dropped += 1
            continue
        members.append((n_r / 2 ** (m - 1), StateVector.normalized(vector).projector()))
    total = sum(w for w, _ in members)
    members = [(w / total, state) for w, state in members]
    if dropped:
        logger.debug(f"Dropped {dropped} zero-norm sign patterns out of {2 ** (m - 1)}")
    return SourceEnsemble.from_states(members, label=f"superposition(m={m})")


def truncation_check(state: DensityMatrix, space: FockSpace, guard: int = 2) -> float:
    """Population in the top ``guard`` Fock levels."""
    if state.dim != space.dim:
        raise DimensionMismatchError(f"state dimension {state.dim} does not match Fock dimension {space.dim}")
    populations = np.real(np.diag(state.matrix))
    return float(max(populations[-guard:].sum(), 0.0))
