from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

HamiltonianKind = Literal["jc_rwa", "rabi_full", "semiclassical"]
FIELD_KINDS = ("jc_rwa", "rabi_full")


class HamiltonianSpec(BaseModel):
    """
    Declarative description of the qubit dynamics.

    Frequencies and couplings are in units of g (hbar = 1). ``omega_c`` and
    ``n_max`` apply to the field kinds; ``drive_amplitude``, ``phase`` and
    ``drive_frequency`` to the semiclassical drive, whose frequency defaults to
    ``omega0`` (resonance).
    """
    model_config = ConfigDict(frozen=True)

    kind: HamiltonianKind = "jc_rwa"
    omega0: float = 10.0
    omega_c: Optional[float] = 10.0
    g: float = 1.0
    drive_amplitude: float = 0.0
    phase: float = 0.0
    drive_frequency: Optional[float] = None
    n_max: int = 30

    @model_validator(mode="after")
    def _check_spec(self) -> "HamiltonianSpec":
        if not self.g > 0:
            raise ValueError(f"coupling g must be positive, got {self.g}")
        if self.kind in FIELD_KINDS:
            if self.n_max < 1:
                raise ValueError(f"n_max must be at least 1 for {self.kind}, got {self.n_max}")
            if self.omega_c is None:
                raise ValueError(f"omega_c is required for {self.kind}")
        return self

    @property
    def is_field_kind(self) -> bool:
        return self.kind in FIELD_KINDS

    @property
    def field_dim(self) -> int:
        return self.n_max + 1

    @property
    def resolved_drive_frequency(self) -> float:
        return self.omega0 if self.drive_frequency is None else self.drive_frequency


class TimeGrid(BaseModel):
    """Uniform time grid in units of 1/g."""
    model_config = ConfigDict(frozen=True)

    t_start: float = 0.0
    t_end: float
    samples: int = Field(ge=2)

    @model_validator(mode="after")
    def _check_range(self) -> "TimeGrid":
        if not self.t_end > self.t_start:
            raise ValueError(f"t_end ({self.t_end}) must exceed t_start ({self.t_start})")
        return self

    @property
    def times(self) -> np.ndarray:
        return np.linspace(self.t_start, self.t_end, self.samples)

    @property
    def step(self) -> float:
        return (self.t_end - self.t_start) / (self.samples - 1)
