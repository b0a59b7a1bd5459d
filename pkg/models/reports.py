import math
from typing import Dict, List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from models.hamiltonian import TimeGrid
from models.states import DensityMatrix

BOUND_TOL = 1e-9
DECOMPOSITION_TOL = 1e-10
TRAJECTORY_TOL = 1e-9

# Scalar channel names carried by TimeSeries.
FIDELITY = "fidelity"
P_E = "P_e"
S_A = "S_A"
S_B = "S_B"
S_AB = "S_AB"


class TimeSeries(BaseModel):
    """Sampled reduced-qubit trajectory plus named scalar channels."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    grid: TimeGrid
    rho_a: List[DensityMatrix]
    scalars: Dict[str, np.ndarray] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _check_lengths(self) -> "TimeSeries":
        n = self.grid.samples
        if len(self.rho_a) != n:
            raise ValueError(f"{len(self.rho_a)} reduced states for {n} grid samples")
        for name, values in self.scalars.items():
            if len(values) != n:
                raise ValueError(f"channel {name!r} has {len(values)} samples, expected {n}")
        return self

    @property
    def times(self) -> np.ndarray:
        return self.grid.times

    def channel(self, name: str) -> np.ndarray:
        return self.scalars[name]


class WignerGrid(BaseModel):
    """Wigner function W(q, p) sampled on a rectangular grid; ``values[i, j]`` is W(q_i, p_j)."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    q_axis: np.ndarray
    p_axis: np.ndarray
    values: np.ndarray
    normalization_budget: float = 1e-3

    @model_validator(mode="after")
    def _check_grid(self) -> "WignerGrid":
        for name, axis in (("q", self.q_axis), ("p", self.p_axis)):
            if axis.ndim != 1 or axis.size < 2:
                raise ValueError(f"{name} axis needs at least two points")
            steps = np.diff(axis)
            if np.any(steps <= 0):
                raise ValueError(f"{name} axis spacing must be positive")
            if not np.allclose(steps, steps[0], rtol=1e-9, atol=0.0):
                raise ValueError(f"{name} axis must be uniformly spaced")
        if self.values.shape != (self.q_axis.size, self.p_axis.size):
            raise ValueError(
                f"values shape {self.values.shape} does not match axes "
                f"({self.q_axis.size}, {self.p_axis.size})"
            )
        if not np.all(np.isfinite(self.values)):
            raise ValueError("Wigner values must be finite")
        return self

    @property
    def dq(self) -> float:
        return float(self.q_axis[1] - self.q_axis[0])

    @property
    def dp(self) -> float:
        return float(self.p_axis[1] - self.p_axis[0])

    @property
    def cell_area(self) -> float:
        return self.dq * self.dp

    def value_at(self, q: float, p: float) -> float:
        """Value at the grid node nearest to (q, p)."""
        i = int(np.argmin(np.abs(self.q_axis - q)))
        j = int(np.argmin(np.abs(self.p_axis - p)))
        return float(self.values[i, j])


class BoundReport(BaseModel):
    """An inequality lhs <= rhs evaluated numerically."""
    lhs: float
    rhs: float
    holds: bool
    slack: float

    @classmethod
    def from_sides(cls, lhs: float, rhs: float, tol: float = BOUND_TOL) -> "BoundReport":
        # an unbounded measured side can never satisfy the inequality
        if math.isinf(lhs) and lhs > 0:
            return cls(lhs=lhs, rhs=rhs, holds=False, slack=-math.inf)
        if math.isinf(rhs) and rhs > 0:
            return cls(lhs=lhs, rhs=rhs, holds=True, slack=math.inf)
        return cls(lhs=lhs, rhs=rhs, holds=bool(lhs <= rhs + tol), slack=rhs - lhs)


class ChainReport(BoundReport):
    """Approximate-harvesting bound chain: measured S(target||rho_a2) against the derived bound."""
    mu: float
    eps: float
    delta: float
    target_distance: float
    pair_distance: float


class DehReport(BaseModel):
    tau: float
    per_member_fidelity: List[float]
    min_fidelity: float
    achieved: bool
    tolerance: float

    @model_validator(mode="after")
    def _check_consistency(self) -> "DehReport":
        if not self.per_member_fidelity:
            raise ValueError("report needs at least one member fidelity")
        if self.min_fidelity != min(self.per_member_fidelity):
            raise ValueError("min_fidelity must equal the smallest member fidelity")
        if self.achieved != (self.min_fidelity >= 1.0 - self.tolerance):
            raise ValueError("achieved flag inconsistent with min_fidelity and tolerance")
        return self

    @classmethod
    def from_fidelities(cls, tau: float, fidelities: List[float], tolerance: float) -> "DehReport":
        values = [float(f) for f in fidelities]
        lowest = min(values)
        return cls(
            tau=tau,
            per_member_fidelity=values,
            min_fidelity=lowest,
            achieved=lowest >= 1.0 - tolerance,
            tolerance=tolerance,
        )


class InvarianceReport(BaseModel):
    max_trajectory_deviation: float
    decomposition_distance: float
    passed: bool

    @classmethod
    def from_distances(cls, decomposition_distance: float, max_trajectory_deviation: float) -> "InvarianceReport":
        return cls(
            decomposition_distance=decomposition_distance,
            max_trajectory_deviation=max_trajectory_deviation,
            passed=(decomposition_distance <= DECOMPOSITION_TOL
                    and max_trajectory_deviation <= TRAJECTORY_TOL),
        )


class RobustnessRow(BaseModel):
    """Source-perturbation measurements for one perturbed preparation."""
    hs_in: float
    hs_out_max: float
    wigner_lhs: float
    wigner_rhs: float
    wigner_holds: bool
    rel_entropy_in: float
    rel_entropy_out_max: float
    joint_hs_drift: float
    # 1/2 ||rho_B1 - rho_B2||_1^2 against rel_entropy_in (nats)
    pinsker_lhs: float
    pinsker_holds: bool
    # harvesting bound chain at the final sample, target |e>
    chain_mu: float
    chain_eps: float
    chain_delta: float
    chain_lhs: float
    chain_rhs: float
    chain_holds: bool


class EntropyCycleReport(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    series: TimeSeries
    s_ab_drift: float
    return_entropy: float
    return_time: float
    decomposition_deviation: Optional[float] = None


class SemiclassicalReport(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    alpha_mag: float
    max_deviation: float
    collapse_time_estimate: float
    oracle_deviation: float
    times: np.ndarray
    p_e_full: np.ndarray
    p_e_semiclassical: np.ndarray
