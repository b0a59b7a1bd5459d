from typing import List

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from physics.errors import InvalidStateError

# ComplexMatrix is a 2-D complex numpy array; see as_complex_matrix.
ComplexMatrix = np.ndarray

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-10
PSD_TOL = 1e-10
NORM_TOL = 1e-12
WEIGHT_TOL = 1e-12


def as_complex_matrix(value) -> np.ndarray:
    """Copy ``value`` into a read-only complex matrix, rejecting bad shapes and NaN/Inf."""
    matrix = np.array(value, dtype=complex)
    if matrix.ndim != 2 or matrix.shape[0] == 0 or matrix.shape[1] == 0:
        raise ValueError(f"expected a non-empty 2-D matrix, got shape {matrix.shape}")
    if not np.all(np.isfinite(matrix)):
        raise ValueError("matrix has non-finite entries")
    matrix.setflags(write=False)
    return matrix


class FockSpace(BaseModel):
    """Truncated single-mode Fock space spanned by |0>, ..., |n_max>."""
    model_config = ConfigDict(frozen=True)

    n_max: int = Field(ge=0)

    @property
    def dim(self) -> int:
        return self.n_max + 1


class StateVector(BaseModel):
    """Normalized pure state."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    amplitudes: np.ndarray

    @field_validator("amplitudes", mode="before")
    @classmethod
    def _coerce(cls, v):
        vec = np.array(v, dtype=complex)
        if vec.ndim != 1 or vec.size == 0:
            raise ValueError(f"expected a non-empty 1-D vector, got shape {vec.shape}")
        if not np.all(np.isfinite(vec)):
            raise ValueError("state vector has non-finite entries")
        vec.setflags(write=False)
        return vec

    @model_validator(mode="after")
    def _check_norm(self) -> "StateVector":
        norm_sq = float(np.vdot(self.amplitudes, self.amplitudes).real)
        if abs(norm_sq - 1.0) > NORM_TOL:
            raise ValueError(f"state vector not normalized: <psi|psi> = {norm_sq!r}")
        return self

    @classmethod
    def normalized(cls, vector) -> "StateVector":
        """Build a StateVector from an arbitrary non-zero vector."""
        vec = np.asarray(vector, dtype=complex)
        norm = np.linalg.norm(vec)
        if norm == 0.0:
            raise ValueError("cannot normalize the zero vector")
        return cls(amplitudes=vec / norm)

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]

    def projector(self) -> "DensityMatrix":
        return DensityMatrix.from_array(np.outer(self.amplitudes, self.amplitudes.conj()))


class DensityMatrix(BaseModel):
    """
    Hermitian, positive semidefinite, unit-trace operator.

    Instances are immutable; the underlying array is flagged read-only.
    """
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    matrix: np.ndarray

    @field_validator("matrix", mode="before")
    @classmethod
    def _coerce(cls, v):
        return as_complex_matrix(v)

    @model_validator(mode="after")
    def _check_invariants(self) -> "DensityMatrix":
        m = self.matrix
        if m.shape[0] != m.shape[1]:
            raise ValueError(f"density matrix must be square, got {m.shape}")
        asym = float(np.max(np.abs(m - m.conj().T)))
        if asym > HERMITIAN_TOL:
            raise ValueError(f"density matrix not Hermitian (max |M - M^H| = {asym:.3e})")
        trace = complex(np.trace(m))
        if abs(trace - 1.0) > TRACE_TOL:
            raise ValueError(f"density matrix trace is {trace!r}, expected 1")
        smallest = float(np.linalg.eigvalsh(m)[0])
        if smallest < -PSD_TOL:
            raise ValueError(f"density matrix not positive semidefinite (eigenvalue {smallest:.3e})")
        return self

    @classmethod
    def from_array(cls, matrix) -> "DensityMatrix":
        """
        Symmetrize ``matrix`` as (M + M^H)/2 and validate it.

        Raises:
            InvalidStateError: if the result is not square, has non-finite
                entries, or is not a unit-trace positive semidefinite operator
        """
        m = np.asarray(matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise InvalidStateError(f"density matrix must be square, got shape {m.shape}")
        try:
            return cls(matrix=(m + m.conj().T) / 2)
        except ValidationError as e:
            raise InvalidStateError(f"not a density matrix: {e.errors()[0]['msg']}") from e

    @classmethod
    def maximally_mixed(cls, dim: int) -> "DensityMatrix":
        return cls(matrix=np.eye(dim) / dim)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def purity(self) -> float:
        """Tr(rho^2)."""
        return float(np.real(np.sum(self.matrix * self.matrix.T)))

    def population(self, index: int) -> float:
        return float(self.matrix[index, index].real)


class EigenSystem(BaseModel):
    """Eigenvalues (ascending) and orthonormal eigenvectors (columns) of a Hermitian matrix."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @model_validator(mode="after")
    def _check_shapes(self) -> "EigenSystem":
        n = self.eigenvalues.shape[0]
        if self.eigenvectors.shape != (n, n):
            raise ValueError(
                f"eigenvector matrix shape {self.eigenvectors.shape} does not match {n} eigenvalues"
            )
        if n > 1 and np.any(np.diff(self.eigenvalues) < 0):
            raise ValueError("eigenvalues must be sorted ascending")
        return self

    @property
    def dim(self) -> int:
        return self.eigenvalues.shape[0]


class EnsembleMember(BaseModel):
    """One weighted preparation of a source ensemble."""
    model_config = ConfigDict(frozen=True)

    weight: float = Field(ge=0.0)
    state: DensityMatrix


class SourceEnsemble(BaseModel):
    """Weighted list of field states realizing one mixed source."""
    model_config = ConfigDict(frozen=True)

    members: List[EnsembleMember]
    label: str = ""

    @model_validator(mode="after")
    def _check_members(self) -> "SourceEnsemble":
        if not self.members:
            raise ValueError("ensemble needs at least one member")
        total = sum(m.weight for m in self.members)
        if abs(total - 1.0) > WEIGHT_TOL:
            raise ValueError(f"ensemble weights sum to {total!r}, expected 1")
        dims = {m.state.dim for m in self.members}
        if len(dims) != 1:
            raise ValueError(f"ensemble members have mixed dimensions {sorted(dims)}")
        return self

    @classmethod
    def from_states(cls, weighted_states, label: str = "") -> "SourceEnsemble":
        """Build from an iterable of (weight, DensityMatrix) pairs."""
        return cls(
            members=[EnsembleMember(weight=w, state=s) for w, s in weighted_states],
            label=label,
        )

    @classmethod
    def single(cls, state: DensityMatrix, label: str = "") -> "SourceEnsemble":
        return cls.from_states([(1.0, state)], label=label)

    @property
    def dim(self) -> int:
        return self.members[0].state.dim

    @property
    def weights(self) -> np.ndarray:
        return np.array([m.weight for m in self.members])

    @property
    def states(self) -> List[DensityMatrix]:
        return [m.state for m in self.members]
