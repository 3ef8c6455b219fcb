"""Multiscale cascade laboratory.

Shell models of turbulence, their closed-form closures, and the analogous
cascade of money through a hierarchy of financial entities, each checked by
fitting the scaling laws it predicts on its own output.
"""

from cascade_lab._version import __version__
from cascade_lab.core.config_loader import build_config, load_config, validate_config
from cascade_lab.core.plugin_registry import SimulatorRegistry
from cascade_lab.core.run_engine import RunEngine
from cascade_lab.simulators.base_simulator import BaseSimulator
from cascade_lab.simulators.equilibrium_simulator import EquilibriumSimulator
from cascade_lab.simulators.finance_simulator import FinanceSimulator
from cascade_lab.simulators.goy_simulator import GoySimulator
from cascade_lab.simulators.pao_simulator import PaoSimulator
from cascade_lab.simulators.tree_simulator import TreeSimulator

# Public API
__all__ = [
    # Core components
    "RunEngine",
    "SimulatorRegistry",
    "BaseSimulator",
    "build_config",
    "load_config",
    "validate_config",
    # Simulators
    "GoySimulator",
    "FinanceSimulator",
    "PaoSimulator",
    "EquilibriumSimulator",
    "TreeSimulator",
    # Version
    "__version__",
]
