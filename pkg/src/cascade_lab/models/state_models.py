"""State and result models produced by the simulators and the fitters.

These hold numpy arrays, so they allow arbitrary types; arrays passed as
lists are coerced on construction.
"""

from enum import Enum
from typing import Dict, List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator


class _ArrayModel(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)


def _real(value) -> np.ndarray:
    return np.asarray(value, dtype=float)


class ShellState(_ArrayModel):
    """Complex GOY amplitudes u_n at time t."""

    u: np.ndarray
    t: float = 0.0

    @field_validator("u", mode="before")
    @classmethod
    def coerce_complex(cls, value):
        return np.asarray(value, dtype=complex)


class WealthState(_ArrayModel):
    """Nonnegative shell wealths W_k at time t."""

    W: np.ndarray
    t: float = 0.0

    @field_validator("W", mode="before")
    @classmethod
    def coerce_arrays(cls, value):
        return _real(value)


class SpectrumSeries(_ArrayModel):
    """Per-shell spectrum or flux samples, optionally time averaged."""

    k: np.ndarray
    value: np.ndarray
    n_samples: int = 1

    @field_validator("k", "value", mode="before")
    @classmethod
    def coerce_arrays(cls, value):
        return _real(value)


class EnergySeries(_ArrayModel):
    """Total energy sampled along a trajectory."""

    t: np.ndarray
    energy: np.ndarray

    @field_validator("t", "energy", mode="before")
    @classmethod
    def coerce_arrays(cls, value):
        return _real(value)


class GoyRunResult(_ArrayModel):
    """Time averages and diagnostics of one GOY trajectory."""

    spectrum: SpectrumSeries
    flux: SpectrumSeries
    energy: EnergySeries
    final_state: ShellState
    injection: float = Field(description="Time-averaged sum of Re(u* f)")
    dissipation: float = Field(description="Time-averaged sum of nu k^2 |u|^2")
    energy_cv: float = Field(description="Coefficient of variation of retained energy")
    n_steps: int


class RelaxationStop(str, Enum):
    """Why a finance relaxation ended."""

    CONVERGED = "converged"
    HORIZON = "horizon"
    BLOW_UP = "blow-up"
    STEP_LIMIT = "step limit"


class SteadyStateReport(_ArrayModel):
    """Outcome of relaxing the finance model towards its steady state."""

    W_star: WealthState
    flux: np.ndarray = Field(description="Money flux across every shell boundary")
    converged: bool
    residual_norm: float
    iterations: int
    time_used: float
    clamped_steps: int = 0
    diverged: bool = Field(False, description="Finite-time blow-up detected")
    stop_reason: RelaxationStop = RelaxationStop.CONVERGED
    notes: List[str] = Field(default_factory=list)

    @field_validator("flux", mode="before")
    @classmethod
    def coerce_arrays(cls, value):
        return _real(value)


class WealthDistribution(_ArrayModel):
    """Per-entity wealth W(k) and entity counts n(k), sorted by wealth."""

    W: np.ndarray
    n: np.ndarray
    k: np.ndarray

    @field_validator("W", "n", "k", mode="before")
    @classmethod
    def coerce_arrays(cls, value):
        return _real(value)

    def pairs(self) -> List[Tuple[float, float]]:
        return [(float(w), float(c)) for w, c in zip(self.W, self.n)]


class AgentPopulation(_ArrayModel):
    """Agents of the exchange baseline; owned by exactly one run."""

    wealth: np.ndarray
    total: float
    rng: np.random.Generator
    exchanges: int = 0

    @field_validator("wealth", mode="before")
    @classmethod
    def coerce_arrays(cls, value):
        return _real(value)

    @classmethod
    def uniform(cls, n_agents: int, mean_wealth: float, seed: int) -> "AgentPopulation":
        wealth = np.full(n_agents, float(mean_wealth))
        return cls(
            wealth=wealth,
            total=float(mean_wealth) * n_agents,
            rng=np.random.default_rng(seed),
        )


class Histogram(_ArrayModel):
    """Binned counts; the last bin is closed, the others half-open."""

    edges: np.ndarray
    counts: np.ndarray
    scheme: Literal["linear", "log"]

    @field_validator("edges", mode="before")
    @classmethod
    def coerce_arrays(cls, value):
        return _real(value)

    @property
    def centers(self) -> np.ndarray:
        if self.scheme == "log":
            return np.sqrt(self.edges[:-1] * self.edges[1:])
        return 0.5 * (self.edges[:-1] + self.edges[1:])

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.edges)

    def density(self) -> np.ndarray:
        total = self.counts.sum()
        if total == 0:
            return np.zeros_like(self.widths)
        return self.counts / (total * self.widths)


class FitResult(BaseModel):
    """Least-squares line through transformed data."""

    kind: Literal["loglog", "semilog"]
    slope: float
    intercept: float
    slope_stderr: float
    r_squared: float
    range_used: Tuple[float, float]
    n_points: int

    def predict(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.kind == "loglog":
            return np.exp(self.intercept) * x**self.slope
        return np.exp(self.intercept + self.slope * x)

    def to_record(self) -> Dict[str, object]:
        return self.model_dump()


class TreeLevel(BaseModel):
    """One level of the fiscal hierarchy."""

    level: int
    nodes: int
    level_budget: float
    per_node_wealth: float


class PaoFit(BaseModel):
    """Kolmogorov constant estimated from a measured spectrum."""

    k_ko: float
    goodness: float = Field(description="RMS residual of ln E over the fitted shells")
    n_points: int


class CheckResult(BaseModel):
    """Outcome of one acceptance check."""

    name: str
    passed: bool
    detail: str = ""
    measured: Dict[str, float] = Field(default_factory=dict)
    seconds: float = 0.0


class RunOutputs(BaseModel):
    """What a simulator hands back to the run engine."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    files: List[str] = Field(default_factory=list)
    fits: Dict[str, FitResult] = Field(default_factory=dict)
    diagnostics: Dict[str, float] = Field(default_factory=dict)
    warnings: List[str] = Field(default_factory=list)
    payload: Optional[Dict[str, object]] = None
