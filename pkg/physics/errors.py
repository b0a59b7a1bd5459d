"""
Exception hierarchy shared by the numerical kernels, the protocol layer and the CLI.
"""

from typing import Optional


class HarvestError(Exception):
    """Base class for every physics or numerics failure raised by this package."""


class DimensionMismatchError(HarvestError, ValueError):
    """Operands have incompatible Hilbert-space dimensions."""


class NonHermitianError(HarvestError, ValueError):
    """A generator or state expected to be Hermitian is not."""


class InvalidStateError(HarvestError, ValueError):
    """A state violates positivity, trace or normalization invariants."""


class NormalizationError(HarvestError, ValueError):
    """Weights or amplitudes do not sum to one."""


class DegenerateStateError(HarvestError, ValueError):
    """A construction produced the zero vector."""


class InvalidSpecError(HarvestError, ValueError):
    """A Hamiltonian or grid description is inconsistent."""


class DomainError(HarvestError, ValueError):
    """A scalar argument lies outside the domain of a formula."""


class GridMismatchError(HarvestError, ValueError):
    """Two phase-space grids do not share axes."""


class CoverageError(HarvestError):
    """A phase-space grid does not cover the support of a state."""


class ConvergenceError(HarvestError):
    """The time-dependent integrator failed its substep-doubling self-check."""


class InvariantViolationError(HarvestError):
    """A property that must hold exactly (up to tolerance) was violated."""


class TruncationError(HarvestError):
    """Population reached the top of the retained Fock ladder."""

    def __init__(self, message: str, leakage: Optional[float] = None):
        super().__init__(message)
        self.leakage = leakage


class ConfigError(HarvestError, ValueError):
    """A configuration file or override is malformed."""


class ConfigParseError(HarvestError):
    """A scenario or configuration file is missing or is not valid JSON."""
