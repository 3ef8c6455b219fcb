from .config_models import (
    EquilibriumParams,
    ExchangeSchedule,
    FinanceMode,
    FinanceParams,
    ForcingTerm,
    GoyParams,
    IntegratorSettings,
    ModelKind,
    OutputSettings,
    PaoParams,
    ShellGrid,
    SimConfig,
    SinkLaw,
    TreeParams,
    ViscousTreatment,
    shell_wavenumbers,
)
from .run_result import RunIssue, RunManifest, RunStatus
from .state_models import (
    AgentPopulation,
    CheckResult,
    EnergySeries,
    FitResult,
    GoyRunResult,
    Histogram,
    PaoFit,
    RelaxationStop,
    RunOutputs,
    ShellState,
    SpectrumSeries,
    SteadyStateReport,
    TreeLevel,
    WealthDistribution,
    WealthState,
)

__all__ = [
    "AgentPopulation",
    "CheckResult",
    "EnergySeries",
    "EquilibriumParams",
    "ExchangeSchedule",
    "FinanceMode",
    "FinanceParams",
    "FitResult",
    "ForcingTerm",
    "GoyParams",
    "GoyRunResult",
    "Histogram",
    "IntegratorSettings",
    "ModelKind",
    "OutputSettings",
    "PaoFit",
    "PaoParams",
    "RelaxationStop",
    "RunIssue",
    "RunManifest",
    "RunOutputs",
    "RunStatus",
    "ShellGrid",
    "ShellState",
    "SimConfig",
    "SinkLaw",
    "SpectrumSeries",
    "SteadyStateReport",
    "TreeLevel",
    "TreeParams",
    "ViscousTreatment",
    "WealthDistribution",
    "WealthState",
    "shell_wavenumbers",
]
