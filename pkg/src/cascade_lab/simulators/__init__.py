from .base_simulator import BaseSimulator
from .equilibrium_simulator import EquilibriumSimulator
from .finance_simulator import FinanceSimulator
from .goy_simulator import GoySimulator
from .pao_simulator import PaoSimulator
from .tree_simulator import TreeSimulator

__all__ = [
    "BaseSimulator",
    "EquilibriumSimulator",
    "FinanceSimulator",
    "GoySimulator",
    "PaoSimulator",
    "TreeSimulator",
]
