"""Configuration models shared by every simulator.

The config file is sectioned TOML; each section maps onto one of the frozen
models below. Field types are checked by pydantic, while semantic invariants
(dt > 0, lambda > 1, ...) are left to ``validate_config`` so that an invalid
config can still be built, inspected and reported on as data.
"""

from enum import Enum
from typing import Annotated, Any, List, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator


class ModelKind(str, Enum):
    """Simulators that a config can select."""

    GOY = "goy"
    FINANCE = "finance"
    EQUILIBRIUM = "equilibrium"
    PAO = "pao"
    TREE = "tree"


class ViscousTreatment(str, Enum):
    """How the linear viscous term of the GOY model is advanced."""

    INTEGRATING_FACTOR = "integrating_factor"
    EXPLICIT = "explicit"


class FinanceMode(str, Enum):
    """Right-hand side used by the finance shell model."""

    LITERAL = "literal"
    FLUX_FORM = "flux_form"


class SinkLaw(str, Enum):
    """How wealth leaves the last (smallest-scale) shell."""

    OUTFLOW = "outflow"
    LINEAR = "linear"


class ExchangeSchedule(str, Enum):
    """Order in which equilibrium exchanges are drawn."""

    MATCHED = "matched"
    SEQUENTIAL = "sequential"


class _Frozen(BaseModel):
    model_config = ConfigDict(frozen=True, populate_by_name=True, extra="forbid")


class ShellGrid(_Frozen):
    """Geometric wavenumber ladder k_n = k0 * lambda**n."""

    k0: float = Field(1.0, description="Base wavenumber")
    lambda_: float = Field(2.0, alias="lambda", description="Inter-shell ratio")
    n_shells: int = Field(22, description="Number of shells")

    def wavenumbers(self) -> np.ndarray:
        return np.asarray(shell_wavenumbers(self), dtype=float)


def shell_wavenumbers(grid: ShellGrid) -> List[float]:
    """Return [k0 * lambda**n for n in 0..n_shells-1].

    Built by repeated multiplication so consecutive ratios equal lambda to
    within one rounding.
    """
    values: List[float] = []
    k = float(grid.k0)
    for _ in range(grid.n_shells):
        values.append(k)
        k = k * grid.lambda_
    return values


class ForcingTerm(_Frozen):
    """Constant complex forcing applied to one GOY shell."""

    shell: int = Field(description="Shell index receiving the forcing")
    re: float = Field(description="Real part of the forcing amplitude")
    im: float = Field(0.0, description="Imaginary part of the forcing amplitude")

    @property
    def amplitude(self) -> complex:
        return complex(self.re, self.im)


def _default_forcing() -> List[ForcingTerm]:
    return [
        ForcingTerm(shell=1, re=5e-3, im=5e-3),
        ForcingTerm(shell=2, re=5e-3, im=5e-3),
    ]


class GoyParams(_Frozen):
    """Parameters of the GOY shell model."""

    kind: Literal["goy"] = "goy"
    grid: ShellGrid = Field(default_factory=ShellGrid)
    a1: float = Field(1.0, description="Coupling to the two larger-k neighbours")
    a2: float = Field(-0.5, description="Coupling to the straddling neighbours")
    a3: float = Field(-0.5, description="Coupling to the two smaller-k neighbours")
    nu: float = Field(1e-7, description="Kinematic viscosity")
    forcing: List[ForcingTerm] = Field(default_factory=_default_forcing)
    viscous: ViscousTreatment = ViscousTreatment.INTEGRATING_FACTOR
    init_amplitude: float = Field(
        1e-2, description="Scale of the seeded initial amplitudes u_n ~ k_n^(-1/3)"
    )
    spinup_time: float = Field(
        300.0, description="Time integrated before t = 0 to reach the steady state"
    )
    spinup_dt: float = Field(
        5e-4, description="Step used during spin-up (integrating-factor scheme only)"
    )
    plateau_tolerance: float = Field(
        0.1, description="Flux-plateau tolerance used to pick the inertial range"
    )

    @property
    def is_conservative(self) -> bool:
        return abs(self.a1 + self.a2 + self.a3) <= 1e-14 * (
            abs(self.a1) + abs(self.a2) + abs(self.a3)
        )

    @property
    def forced_shells(self) -> List[int]:
        return sorted({term.shell for term in self.forcing})

    def forcing_vector(self) -> np.ndarray:
        f = np.zeros(self.grid.n_shells, dtype=complex)
        for term in self.forcing:
            f[term.shell] += term.amplitude
        return f


class FinanceParams(_Frozen):
    """Parameters of the hierarchical finance shell model."""

    kind: Literal["finance"] = "finance"
    grid: ShellGrid = Field(default_factory=ShellGrid)
    a: float = Field(1.0, description="Coupling amplitude")
    alpha: float = Field(-1.0, description="Coupling exponent")
    b: float = Field(0.0, description="Loss amplitude")
    beta: float = Field(2.0, description="Loss exponent")
    q: float = Field(1.0, description="Injection rate at the largest scale")
    mode: FinanceMode = FinanceMode.FLUX_FORM
    sink_law: SinkLaw = SinkLaw.OUTFLOW
    sink: Optional[float] = Field(
        None, description="Linear absorption at the last shell (default 10*a)"
    )
    initial_wealth: float = Field(1.0, description="Uniform initial shell wealth")
    tolerance: float = Field(1e-8, description="Steady-state residual tolerance")
    check_every: int = Field(100, description="Steps between residual checks")
    auto_step: bool = Field(
        True,
        description="Step from the local cascade rates instead of integrator.dt "
        "and relax over the suggested horizon, capped by integrator.t_end",
    )
    max_steps: int = Field(
        10_000_000, description="Step budget; reaching it stops the relaxation"
    )
    blowup_factor: float = Field(
        1e3,
        description="Growth of max W beyond this multiple of its reference scale "
        "(initial or fixed-point wealth) is reported as a finite-time blow-up",
    )

    @property
    def sink_coefficient(self) -> float:
        return 10.0 * self.a if self.sink is None else self.sink


class EquilibriumParams(_Frozen):
    """Parameters of the kinetic pool-and-split exchange baseline."""

    kind: Literal["equilibrium"] = "equilibrium"
    n_agents: int = Field(10_000, description="Population size")
    mean_wealth: float = Field(1.0, description="Initial (and mean) wealth")
    n_steps: int = Field(10_000_000, description="Number of pairwise exchanges")
    n_bins: int = Field(50, description="Histogram bins")
    schedule: ExchangeSchedule = ExchangeSchedule.MATCHED
    recheck_every: int = Field(
        100, description="Sweeps between exact recomputations of the total"
    )


class PaoParams(_Frozen):
    """Kolmogorov/Pao closure parameters; k_d is always derived."""

    kind: Literal["pao"] = "pao"
    k_ko: float = Field(1.6, description="Kolmogorov constant")
    eps_u: float = Field(1.0, description="Energy injection/dissipation rate")
    nu: float = Field(1e-4, description="Kinematic viscosity")
    n_points: int = Field(50, description="Samples in pao_curves.csv")
    k_min_factor: float = Field(0.01, description="Lowest sampled k in units of k_d")
    k_max_factor: float = Field(10.0, description="Highest sampled k in units of k_d")

    @property
    def k_d(self) -> float:
        return (self.eps_u / self.nu**3) ** 0.25


class TreeParams(_Frozen):
    """Fiscal hierarchy: a top budget split down a B-ary tree."""

    kind: Literal["tree"] = "tree"
    levels: int = Field(6, description="Number of levels below the top")
    branching: int = Field(3, description="Children per node")
    budget: float = Field(1.0, description="Budget entering the top level")
    pilferage: float = Field(0.0, description="Fraction lost at each level")


ModelParams = Annotated[
    Union[GoyParams, FinanceParams, EquilibriumParams, PaoParams, TreeParams],
    Field(discriminator="kind"),
]

PARAMS_BY_KIND = {
    ModelKind.GOY: GoyParams,
    ModelKind.FINANCE: FinanceParams,
    ModelKind.EQUILIBRIUM: EquilibriumParams,
    ModelKind.PAO: PaoParams,
    ModelKind.TREE: TreeParams,
}


class IntegratorSettings(_Frozen):
    """Time stepping shared by the ODE simulators."""

    dt: float = Field(1e-4, description="Time step")
    t_end: Optional[float] = Field(
        None,
        description="Integration horizon; unset uses the model's own (200 for GOY, "
        "the relaxation schedule for finance). Always a hard cap when set.",
    )
    transient_fraction: float = Field(
        0.5, description="Fraction of samples discarded before averaging"
    )
    sample_every: int = Field(100, description="Steps between recorded samples")

    def horizon(self, default: float) -> float:
        return self.t_end if self.t_end is not None else default


class OutputSettings(_Frozen):
    """Where artifacts go and which ones are written."""

    directory: str = Field("output", description="Output directory")
    write_csv: bool = True
    emit_plots: bool = False


class SimConfig(_Frozen):
    """Complete, immutable description of one run."""

    model: ModelKind
    grid: ShellGrid = Field(default_factory=ShellGrid)
    model_params: ModelParams
    integrator: IntegratorSettings = Field(default_factory=IntegratorSettings)
    seed: int = Field(42, description="64-bit RNG seed, recorded for every model")
    output: OutputSettings = Field(default_factory=OutputSettings)

    @model_validator(mode="before")
    @classmethod
    def _attach_grid(cls, data: Any) -> Any:
        # Shell-based params carry the grid; share the top-level one when the
        # params arrive as a plain mapping without their own.
        if not isinstance(data, dict):
            return data
        params = data.get("model_params")
        if isinstance(params, dict):
            params = dict(params)
            params.setdefault("kind", _kind_value(data.get("model")))
            if params["kind"] in ("goy", "finance") and "grid" not in params:
                params["grid"] = data.get("grid", {})
            data = {**data, "model_params": params}
        return data


def _kind_value(model: Any) -> Any:
    return model.value if isinstance(model, ModelKind) else model
