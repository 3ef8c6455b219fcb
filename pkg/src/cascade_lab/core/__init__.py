from .errors import CascadeLabError, ConfigValidationError, RunError
from .plugin_registry import SimulatorRegistry
from .run_engine import RunEngine

__all__ = [
    "CascadeLabError",
    "ConfigValidationError",
    "RunEngine",
    "RunError",
    "SimulatorRegistry",
]
