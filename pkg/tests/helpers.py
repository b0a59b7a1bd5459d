import math

import numpy as np

from models.states import DensityMatrix, FockSpace


def random_density_matrix(rng, dim: int, rank: int = None) -> DensityMatrix:
    """Random mixed state from a Ginibre matrix of the given rank."""
    rank = rank or dim
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ g.conj().T
    return DensityMatrix.from_array(rho / np.trace(rho).real)


def random_low_fock_state(rng, space: FockSpace, levels: int = 6) -> DensityMatrix:
    """Random state supported on the lowest ``levels`` Fock levels."""
    block = random_density_matrix(rng, levels).matrix
    full = np.zeros((space.dim, space.dim), dtype=complex)
    full[:levels, :levels] = block
    return DensityMatrix.from_array(full)


def random_qubit_state(rng, max_radius: float = 0.9) -> DensityMatrix:
    """Qubit state with Bloch radius at most ``max_radius``."""
    direction = rng.normal(size=3)
    direction /= np.linalg.norm(direction)
    radius = max_radius * rng.uniform() ** (1 / 3)
    x, y, z = radius * direction
    return DensityMatrix.from_array(0.5 * np.array([[1 + z, x - 1j * y], [x + 1j * y, 1 - z]]))


HALF_PI = math.pi / 2
