"""
Wigner functions of single-mode field states on rectangular (q, p) grids.

Conventions: hbar = 1, a = (q + i p) / sqrt(2), so the vacuum Wigner function is
exp(-q^2 - p^2) / pi.
"""

import logging
import math
from typing import Tuple

import numpy as np
import scipy.linalg

from models.reports import BoundReport, WignerGrid
from models.states import DensityMatrix, FockSpace
from physics.errors import CoverageError, DomainError, GridMismatchError, TruncationError
from physics.fock_states import annihilation, creation

logger = logging.getLogger(__name__)

DEFAULT_RANGE = (-6.0, 6.0)
DEFAULT_POINTS = 201
IMAGINARY_TOL = 1e-10
PURITY_TOL = 1e-3
PADDING_GUARD = 5
PADDING_LEAKAGE_TOL = 1e-10


def _axis(bounds: Tuple[float, float], points: int) -> np.ndarray:
    low, high = bounds
    if points < 3:
        raise DomainError(f"need at least 3 points per axis, got {points}")
    if not high > low:
        raise DomainError(f"axis range {bounds} is empty")
    return np.linspace(low, high, points)


def _laguerre_series(order: int, x: np.ndarray, coefficients: np.ndarray) -> np.ndarray:
    """
    Clenshaw evaluation of sum_n c_n (-1)^n sqrt(n! / (n + order)!) L_n^order(x).
    """
    if len(coefficients) == 1:
        y0, y1 = coefficients[0], 0
    elif len(coefficients) == 2:
        y0, y1 = coefficients[0], coefficients[1]
    else:
        k = len(coefficients)
        y0, y1 = coefficients[-2], coefficients[-1]
        for i in range(3, len(coefficients) + 1):
            k -= 1
            y0, y1 = (
                coefficients[-i] - y1 * math.sqrt((k - 1) * (order + k - 1) / ((order + k) * k)),
                y0 - y1 * ((order + 2 * k - 1) - x) / math.sqrt((order + k) * k),
            )
    return y0 - y1 * ((order + 1) - x) / math.sqrt(order + 1)


def _wigner_laguerre(matrix: np.ndarray, q: np.ndarray, p: np.ndarray) -> np.ndarray:
    """
    Displaced-parity sum (1/pi) sum_n (-1)^n <n|D^H rho D|n> evaluated in closed form.

    Uses the generalized-Laguerre matrix elements of the displaced parity
    operator, summed by Horner's scheme over the diagonals of rho.
    """
    dim = matrix.shape[0]
    qq, pp = np.meshgrid(q, p, indexing="ij")
    two_beta = math.sqrt(2.0) * (qq + 1j * pp)
    x = np.abs(two_beta) ** 2
    if dim == 1:
        return np.real(matrix[0, 0]) * np.exp(-x / 2) / math.pi
    weighted = matrix * (2 * np.ones((dim, dim)) - np.eye(dim))
    total = weighted[0, -1] * np.ones_like(two_beta)
    order = dim - 1
    while order > 0:
        order -= 1
        total = _laguerre_series(order, x, np.diag(weighted, order)) + total * two_beta / math.sqrt(order + 1)
    # only the upper diagonals were summed, so W is the real part
    return np.real(total) * np.exp(-x / 2) / math.pi


def _displacement(beta: complex, space: FockSpace) -> np.ndarray:
    return scipy.linalg.expm(beta * creation(space) - np.conj(beta) * annihilation(space))


def _wigner_displaced_parity(matrix: np.ndarray, q: np.ndarray, p: np.ndarray, padding: int) -> np.ndarray:
    """
    Literal displaced-parity evaluation on a Fock space padded by ``padding`` levels.

    Raises:
        TruncationError: if a displaced state populates the top padded levels.
    """
    dim = matrix.shape[0]
    padded_space = FockSpace(n_max=dim + padding - 1)
    padded = np.zeros((padded_space.dim, padded_space.dim), dtype=complex)
    padded[:dim, :dim] = matrix
    parity = (-1.0) ** np.arange(padded_space.dim)
    values = np.empty((q.size, p.size), dtype=complex)
    for i, qi in enumerate(q):
        for j, pj in enumerate(p):
            d = _displacement((qi + 1j * pj) / math.sqrt(2.0), padded_space)
            displaced = d.conj().T @ padded @ d
            diagonal = np.diag(displaced)
            leakage = float(np.real(diagonal[-PADDING_GUARD:]).sum())
            if leakage > PADDING_LEAKAGE_TOL:
                raise TruncationError(
                    f"displaced state at (q={qi:.3g}, p={pj:.3g}) leaks {leakage:.3e} into the padding",
                    leakage=leakage,
                )
            values[i, j] = np.sum(parity * diagonal) / math.pi
    return values


def wigner(
    rho: DensityMatrix,
    q_range: Tuple[float, float] = DEFAULT_RANGE,
    p_range: Tuple[float, float] = DEFAULT_RANGE,
    points_per_axis: int = DEFAULT_POINTS,
    method: str = "laguerre",
    padding: int = 40,
    normalization_budget: float = 1e-3,
) -> WignerGrid:
    """
    Wigner function W(q, p) = (1/pi) sum_n (-1)^n <n| D^H(beta) rho D(beta) |n>,
    beta = (q + i p) / sqrt(2).

    ``method="laguerre"`` (default) evaluates the sum in closed form for the
    truncated rho; ``method="displaced_parity"`` builds D(beta) explicitly on a
    padded space and is meant for spot checks on small grids.
    """
    q = _axis(q_range, points_per_axis)
    p = _axis(p_range, points_per_axis)
    if method == "laguerre":
        values = _wigner_laguerre(rho.matrix, q, p)
    elif method == "displaced_parity":
        values = _wigner_displaced_parity(rho.matrix, q, p, padding)
        residue = float(np.max(np.abs(np.imag(values))))
        if residue > IMAGINARY_TOL:
            raise DomainError(f"Wigner function has imaginary residue {residue:.3e}")
    else:
        raise DomainError(f"unknown Wigner method {method!r}")
    logger.debug(f"Wigner grid {points_per_axis}x{points_per_axis} via {method}")
    return WignerGrid(q_axis=q, p_axis=p, values=np.real(values),
                      normalization_budget=normalization_budget)


def wigner_normalization(grid: WignerGrid) -> float:
    """Riemann sum of W over the grid."""
    return float(np.sum(grid.values) * grid.cell_area)


def wigner_marginals(grid: WignerGrid) -> Tuple[np.ndarray, np.ndarray]:
    """Quadrature distributions (integral of W over p, integral of W over q)."""
    return grid.values.sum(axis=1) * grid.dp, grid.values.sum(axis=0) * grid.dq


def _check_same_grid(a: WignerGrid, b: WignerGrid) -> None:
    if (a.q_axis.shape != b.q_axis.shape or a.p_axis.shape != b.p_axis.shape
            or not np.array_equal(a.q_axis, b.q_axis) or not np.array_equal(a.p_axis, b.p_axis)):
        raise GridMismatchError("Wigner grids do not share axes")


def wigner_l2_norm(grid: WignerGrid) -> float:
    return float(math.sqrt(np.sum(grid.values ** 2) * grid.cell_area))


def wigner_l2_distance(a: WignerGrid, b: WignerGrid) -> float:
    """sqrt(sum (W_a - W_b)^2 dq dp)."""
    _check_same_grid(a, b)
    return float(math.sqrt(np.sum((a.values - b.values) ** 2) * a.cell_area))


def combine(grids, weights) -> WignerGrid:
    """Weighted sum of grids sharing axes."""
    grids = list(grids)
    for other in grids[1:]:
        _check_same_grid(grids[0], other)
    values = sum(w * g.values for w, g in zip(weights, grids))
    first = grids[0]
    return WignerGrid(q_axis=first.q_axis, p_axis=first.p_axis, values=values,
                      normalization_budget=first.normalization_budget)


def purity_identity_check(rho: DensityMatrix, grid: WignerGrid) -> BoundReport:
    """
    Compare 2 pi * integral of W^2 with Tr(rho^2); the report's lhs is the
    absolute mismatch and rhs the 1e-3 budget.

    Raises:
        CoverageError: if the grid misses more than the normalization budget of
            the state's weight.
    """
    norm = wigner_normalization(grid)
    if abs(norm - 1.0) > grid.normalization_budget:
        raise CoverageError(
            f"grid integrates to {norm:.6f}; it does not cover the state's support"
        )
    grid_purity = 2 * math.pi * wigner_l2_norm(grid) ** 2
    mismatch = abs(grid_purity - rho.purity())
    return BoundReport.from_sides(mismatch, PURITY_TOL, tol=0.0)
