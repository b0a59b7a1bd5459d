import math
from typing import Annotated, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from models.hamiltonian import HamiltonianSpec, TimeGrid
from models.states import DensityMatrix, FockSpace, SourceEnsemble, StateVector
from physics import fock_states

ScenarioKind = Literal["fidelity", "entropy", "wigner", "verify", "robustness", "semiclassical"]
Parity = Literal["even", "odd"]

# Output channels each scenario kind can write.
CHANNELS = {
    "fidelity": ("fidelity", "populations"),
    "entropy": ("entropy", "report"),
    "wigner": ("wigner", "report"),
    "verify": ("report",),
    "robustness": ("report",),
    "semiclassical": ("report", "trajectory"),
}


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class PureState(_Strict):
    """A named pure field state: Fock |n>, coherent |alpha e^{i phase}> or a cat."""
    kind: Literal["fock", "coherent", "cat"]
    n: int = Field(default=0, ge=0)
    alpha: float = 1.0
    phase: float = 0.0
    parity: Parity = "even"

    def build(self, space: FockSpace) -> StateVector:
        if self.kind == "fock":
            return fock_states.fock_state(self.n, space)
        alpha = self.alpha * complex(math.cos(self.phase), math.sin(self.phase))
        if self.kind == "coherent":
            return fock_states.coherent_state(alpha, space)
        return fock_states.cat_state(alpha, self.parity, space)


class FockSource(_Strict):
    kind: Literal["fock"]
    n: int = Field(ge=0)

    def ensemble(self, space: FockSpace) -> SourceEnsemble:
        return SourceEnsemble.single(fock_states.fock_state(self.n, space).projector(), label=f"fock_{self.n}")


class CoherentSource(_Strict):
    """One coherent member per phase, equally weighted."""
    kind: Literal["coherent"]
    alpha_mag: float = Field(default=1.0, ge=0.0)
    phases: List[float] = Field(default_factory=lambda: [0.0], min_length=1)

    def ensemble(self, space: FockSpace) -> SourceEnsemble:
        return fock_states.phase_ensemble(self.alpha_mag, self.phases, space)


class CatSource(_Strict):
    kind: Literal["cat"]
    alpha: float = 1.0
    parity: Parity = "even"

    def ensemble(self, space: FockSpace) -> SourceEnsemble:
        state = fock_states.cat_state(self.alpha, self.parity, space)
        return SourceEnsemble.single(state.projector(), label=f"cat_{self.parity}")


class CoherentMixtureSource(_Strict):
    """1/2 |alpha><alpha| + 1/2 |-alpha><-alpha|."""
    kind: Literal["coherent_mixture"]
    alpha: float = 1.0

    def ensemble(self, space: FockSpace) -> SourceEnsemble:
        return fock_states.coherent_mixture(self.alpha, space)


class CatEnsembleSource(_Strict):
    """The same mixed state as CoherentMixtureSource, decomposed into even and odd cats."""
    kind: Literal["cat_ensemble"]
    alpha: float = 1.0

    def ensemble(self, space: FockSpace) -> SourceEnsemble:
        return fock_states.cat_ensemble(self.alpha, space)


class ThermalSource(_Strict):
    """Gibbs state given by its mean photon number or by beta (with the field frequency)."""
    kind: Literal["thermal"]
    n_bar: Optional[float] = Field(default=None, ge=0.0)
    beta: Optional[float] = Field(default=None, gt=0.0)
    omega_c: float = Field(default=10.0, gt=0.0)

    @model_validator(mode="after")
    def _one_parameter(self) -> "ThermalSource":
        if (self.n_bar is None) == (self.beta is None):
            raise ValueError("thermal source needs exactly one of n_bar or beta")
        return self

    @property
    def resolved_n_bar(self) -> float:
        if self.n_bar is not None:
            return self.n_bar
        return fock_states.n_bar_from_beta(self.beta, self.omega_c)

    def ensemble(self, space: FockSpace) -> SourceEnsemble:
        state = fock_states.thermal_state(self.resolved_n_bar, space)
        return SourceEnsemble.single(state, label="thermal")


class WeightedState(_Strict):
    weight: float = Field(ge=0.0)
    state: PureState


class MixtureSource(_Strict):
    kind: Literal["mixture"]
    members: List[WeightedState] = Field(min_length=1)

    def ensemble(self, space: FockSpace) -> SourceEnsemble:
        return SourceEnsemble.from_states(
            [(m.weight, m.state.build(space).projector()) for m in self.members], label="mixture")


class SuperpositionSource(_Strict):
    """Sign-pattern superpositions of ``states``; amplitudes are reals or [re, im] pairs."""
    kind: Literal["superposition"]
    states: List[PureState] = Field(min_length=1, max_length=fock_states.MAX_SUPERPOSED_STATES)
    amplitudes: List[Union[float, Tuple[float, float]]]

    @model_validator(mode="after")
    def _matching_lengths(self) -> "SuperpositionSource":
        if len(self.amplitudes) != len(self.states):
            raise ValueError(f"{len(self.amplitudes)} amplitudes for {len(self.states)} states")
        return self

    @property
    def complex_amplitudes(self) -> List[complex]:
        return [complex(*a) if isinstance(a, tuple) else complex(a) for a in self.amplitudes]

    def pure_states(self, space: FockSpace) -> List[StateVector]:
        return [s.build(space) for s in self.states]

    def ensemble(self, space: FockSpace) -> SourceEnsemble:
        return fock_states.superposition_ensemble(self.pure_states(space), self.complex_amplitudes)


Source = Annotated[
    Union[FockSource, CoherentSource, CatSource, CoherentMixtureSource, CatEnsembleSource,
          ThermalSource, MixtureSource, SuperpositionSource],
    Field(discriminator="kind"),
]


class OutputSpec(_Strict):
    channel: str
    path: str


class Tolerances(_Strict):
    deh: float = Field(default=1e-3, gt=0.0, lt=1.0)
    semiclassical: float = Field(default=0.02, gt=0.0)


class WignerConfig(_Strict):
    q_range: Tuple[float, float] = (-6.0, 6.0)
    p_range: Tuple[float, float] = (-6.0, 6.0)
    points: int = Field(default=201, ge=3)
    method: Literal["laguerre", "displaced_parity"] = "laguerre"
    padding: int = Field(default=40, ge=0)

    @field_validator("q_range", "p_range")
    @classmethod
    def _ordered(cls, value: Tuple[float, float]) -> Tuple[float, float]:
        if not value[1] > value[0]:
            raise ValueError(f"range {value} must be increasing")
        return value


class VerifyOptions(_Strict):
    """
    Which protocol check a verify scenario runs.

    ``deh`` verifies at ``tau`` (or at the optimal tau over the grid when tau
    is omitted); ``decomposition`` compares the source with ``alternative``;
    ``convex`` mixes the source's members with each row of ``weights_grid``;
    ``superposition`` needs a superposition source.
    """
    check: Literal["deh", "decomposition", "convex", "superposition"] = "deh"
    tau: Optional[float] = None
    alternative: Optional[Source] = None
    weights_grid: List[List[float]] = Field(default_factory=list)

    @model_validator(mode="after")
    def _check_options(self) -> "VerifyOptions":
        if self.check == "decomposition" and self.alternative is None:
            raise ValueError("decomposition check needs an alternative source")
        if self.check == "convex" and not self.weights_grid:
            raise ValueError("convex check needs at least one weight vector")
        return self


class EntropyOptions(_Strict):
    alternative: Optional[Source] = None


class RobustnessOptions(_Strict):
    perturbations: List[Source] = Field(min_length=1)
    smoothing_eta: float = Field(default=1e-9, gt=0.0, lt=1.0)


class SemiclassicalOptions(_Strict):
    """
    JCM-versus-semiclassical comparison for a coherent source of magnitude
    ``alpha_mag`` over g |alpha| t in [0, rabi_phase_end]; the default ends at
    the first complete excitation. With a semiclassical Hamiltonian the driven
    qubit is propagated instead.
    """
    alpha_mag: float = Field(default=10.0, gt=0.0)
    rabi_phase_end: float = Field(default=math.pi / 2, gt=0.0, le=math.pi * (1 + 1e-12))
    substeps: int = Field(default=8, ge=1)
    max_substeps: int = Field(default=2 ** 17, ge=2)
    convergence_tol: float = Field(default=1e-8, gt=0.0)


class ScenarioConfig(_Strict):
    """One declarative scenario; every field validates before any computation starts."""
    name: str = Field(min_length=1)
    kind: ScenarioKind
    hamiltonian: HamiltonianSpec = Field(default_factory=HamiltonianSpec)
    source: Optional[Source] = None
    grid: TimeGrid = Field(default_factory=lambda: TimeGrid(t_end=25.0, samples=1001))
    outputs: List[OutputSpec] = Field(default_factory=list)
    n_max: Optional[int] = Field(default=None, ge=1)
    tolerances: Tolerances = Field(default_factory=Tolerances)
    wigner: WignerConfig = Field(default_factory=WignerConfig)
    verify: VerifyOptions = Field(default_factory=VerifyOptions)
    entropy: EntropyOptions = Field(default_factory=EntropyOptions)
    robustness: Optional[RobustnessOptions] = None
    semiclassical: SemiclassicalOptions = Field(default_factory=SemiclassicalOptions)

    @model_validator(mode="after")
    def _check_scenario(self) -> "ScenarioConfig":
        if self.kind != "semiclassical" and self.source is None:
            raise ValueError(f"{self.kind} scenario needs a source")
        if self.kind == "robustness" and self.robustness is None:
            raise ValueError("robustness scenario needs robustness.perturbations")
        if self.kind == "verify" and self.verify.check == "superposition" \
                and not isinstance(self.source, SuperpositionSource):
            raise ValueError("superposition check needs a superposition source")
        allowed = CHANNELS[self.kind]
        for output in self.outputs:
            if output.channel not in allowed:
                raise ValueError(f"{self.kind} scenario has no channel {output.channel!r}; allowed: {allowed}")
        paths = [o.path for o in self.outputs]
        if len(set(paths)) != len(paths):
            raise ValueError("output paths must be distinct")
        return self

    @property
    def spec(self) -> HamiltonianSpec:
        """The Hamiltonian with the top-level ``n_max`` applied."""
        if self.n_max is None:
            return self.hamiltonian
        return self.hamiltonian.model_copy(update={"n_max": self.n_max})

    @property
    def space(self) -> FockSpace:
        return FockSpace(n_max=self.spec.n_max)

    def build_ensemble(self, source=None) -> SourceEnsemble:
        """Realize ``source`` (the scenario's own by default) on the scenario's Fock space."""
        return (source or self.source).ensemble(self.space)

    def build_state(self, source=None) -> DensityMatrix:
        return fock_states.mix(self.build_ensemble(source))
