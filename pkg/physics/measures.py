"""
Distinguishability and entropy functionals, plus checkers for the Pinsker and
Audenaert bounds and the approximate-harvesting bound chain.

Entropies are in nats unless a name says ``bits``.
"""

import logging
import math
from typing import Optional

import numpy as np
import scipy.linalg

from models.reports import BoundReport, ChainReport
from models.states import DensityMatrix, StateVector
from physics.errors import DimensionMismatchError, DomainError

logger = logging.getLogger(__name__)

SUPPORT_TOL = 1e-10
KERNEL_TOL = 1e-12
DEFAULT_ETA = 1e-9
LN2 = math.log(2.0)


def _check_same_dim(rho: DensityMatrix, sigma: DensityMatrix) -> None:
    if rho.dim != sigma.dim:
        raise DimensionMismatchError(f"states have dimensions {rho.dim} and {sigma.dim}")


def fidelity_to_pure(rho: DensityMatrix, psi: StateVector) -> float:
    """<psi|rho|psi>, clipped to [0, 1]."""
    if rho.dim != psi.dim:
        raise DimensionMismatchError(f"state dimension {rho.dim} does not match target dimension {psi.dim}")
    value = float(np.real(np.vdot(psi.amplitudes, rho.matrix @ psi.amplitudes)))
    return min(max(value, 0.0), 1.0)


def von_neumann_entropy(rho: DensityMatrix) -> float:
    """-sum lambda ln lambda with eigenvalues clamped to [0, 1]."""
    eigenvalues = np.clip(scipy.linalg.eigvalsh(rho.matrix), 0.0, 1.0)
    nonzero = eigenvalues[eigenvalues > 0]
    return float(-np.sum(nonzero * np.log(nonzero)))


def purity(rho: DensityMatrix) -> float:
    return rho.purity()


def relative_entropy(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """
    S(rho || sigma) = Tr[rho (ln rho - ln sigma)] in nats.

    Evaluated in sigma's eigenbasis. Returns ``math.inf`` when rho has weight
    above 1e-10 on an eigenvector of sigma whose eigenvalue is at most 1e-12.
    """
    _check_same_dim(rho, sigma)
    sigma_values, sigma_vectors = scipy.linalg.eigh(sigma.matrix)
    weights = np.real(np.einsum("ij,jk,ki->i", sigma_vectors.conj().T, rho.matrix, sigma_vectors))
    kernel = sigma_values <= KERNEL_TOL
    if np.any(weights[kernel] > SUPPORT_TOL):
        return math.inf
    cross = float(np.sum(weights[~kernel] * np.log(sigma_values[~kernel])))
    return max(-von_neumann_entropy(rho) - cross, 0.0)


def relative_entropy_bits(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    return relative_entropy(rho, sigma) / LN2


def trace_norm(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """||rho - sigma||_1 (sum of absolute eigenvalues)."""
    _check_same_dim(rho, sigma)
    return float(np.sum(np.abs(scipy.linalg.eigvalsh(rho.matrix - sigma.matrix))))


def trace_distance(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """
    Halved trace norm, 1/2 ||rho - sigma||_1, a metric bounded by 1.

    The bound checkers below use the unhalved norm ``trace_norm``.
    """
    return trace_norm(rho, sigma) / 2


def hs_distance(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """sqrt(Tr[(rho - sigma)^2])."""
    _check_same_dim(rho, sigma)
    return float(np.linalg.norm(rho.matrix - sigma.matrix, ord="fro"))


def smooth(rho: DensityMatrix, eta: float = DEFAULT_ETA) -> DensityMatrix:
    """(1 - eta) rho + eta I/d, a full-rank neighbour of rho."""
    if not 0.0 <= eta <= 1.0:
        raise DomainError(f"smoothing weight must lie in [0, 1], got {eta}")
    return DensityMatrix.from_array((1.0 - eta) * rho.matrix + eta * np.eye(rho.dim) / rho.dim)


def pinsker_check(rho: DensityMatrix, sigma: DensityMatrix) -> BoundReport:
    """1/2 ||rho - sigma||_1^2 <= ln 2 * S_bits(rho || sigma) (= S in nats)."""
    lhs = 0.5 * trace_norm(rho, sigma) ** 2
    rhs = relative_entropy(rho, sigma)
    if math.isinf(rhs):
        logger.debug("Pinsker check with infinite relative entropy holds trivially")
    return BoundReport.from_sides(lhs, rhs)


def audenaert_bound(t_norm: float, dim: int, lambda_min: float) -> float:
    """
    T log d + min(-T log T, 1/e) - T log(lambda_min) / 2, base-2 logs (bits).

    ``t_norm`` is the unhalved trace norm ||rho - sigma||_1 in [0, 2].
    """
    if not 0.0 <= t_norm <= 2.0:
        raise DomainError(f"trace norm must lie in [0, 2], got {t_norm}")
    if dim < 1:
        raise DomainError(f"dimension must be positive, got {dim}")
    if not 0.0 < lambda_min <= 1.0:
        raise DomainError(f"lambda_min must lie in (0, 1], got {lambda_min}")
    if t_norm == 0.0:
        return 0.0
    entropy_term = min(-t_norm * math.log2(t_norm), 1.0 / math.e)
    return t_norm * math.log2(dim) + entropy_term - t_norm * math.log2(lambda_min) / 2


def approximate_deh_chain(
    rho_a1: DensityMatrix,
    rho_a2: DensityMatrix,
    target: StateVector,
    eps: float,
    mu: Optional[float] = None,
) -> ChainReport:
    """
    Bound S_bits(target || rho_a2) from mu = S_bits(target || rho_a1) and the
    source divergence eps (bits).

    delta = sqrt(2 ln2 mu) + sqrt(2 ln2 eps) bounds ||target - rho_a2||_1 by
    Pinsker and the triangle inequality; Audenaert's expression then bounds the
    relative entropy. If delta exceeds 2 the bound is vacuous (rhs = inf). An
    infinite measured divergence is reported as a violated bound.
    """
    target_state = target.projector()
    if mu is None:
        mu = relative_entropy_bits(target_state, rho_a1)
    if mu < 0 or eps < 0:
        raise DomainError(f"mu and eps must be non-negative, got mu={mu}, eps={eps}")
    delta = math.sqrt(2 * LN2 * mu) + math.sqrt(2 * LN2 * eps)
    lhs = relative_entropy_bits(target_state, rho_a2)
    lambda_min = float(scipy.linalg.eigvalsh(rho_a2.matrix)[0])

    if delta == 0.0:
        rhs = 0.0
    elif delta > 2.0 or lambda_min <= KERNEL_TOL:
        rhs = math.inf
    else:
        rhs = audenaert_bound(delta, rho_a2.dim, lambda_min)
    if math.isinf(lhs):
        logger.warning("Target has support outside rho_a2; relative entropy is infinite")

    base = BoundReport.from_sides(lhs, rhs)
    return ChainReport(
        **base.model_dump(),
        mu=mu,
        eps=eps,
        delta=delta,
        target_distance=trace_norm(target_state, rho_a1),
        pair_distance=trace_norm(rho_a1, rho_a2),
    )
