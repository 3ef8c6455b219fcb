from typing import Dict, List, Optional

from cascade_lab.models.config_models import ModelKind, SimConfig
from cascade_lab.simulators.base_simulator import BaseSimulator


class SimulatorRegistry:
    """Central registry for all model simulators.

    Each model tag maps to exactly one simulator; a config is routed by its
    ``model`` field.
    """

    def __init__(self):
        self._simulators: Dict[ModelKind, BaseSimulator] = {}

    def register_simulator(self, simulator: BaseSimulator) -> None:
        """Register a simulator under the model tag it declares.

        Raises:
            ValueError: If simulator is not a BaseSimulator instance, or its
                model already has a simulator
        """
        if not isinstance(simulator, BaseSimulator):
            raise ValueError("Simulator must be an instance of BaseSimulator")
        if simulator.model in self._simulators:
            existing = self._simulators[simulator.model].__class__.__name__
            raise ValueError(f"Model {simulator.model.value} is already run by {existing}")

        self._simulators[simulator.model] = simulator

    def get_simulator(self, cfg: SimConfig) -> Optional[BaseSimulator]:
        """Return the simulator for the config's model, or None."""
        return self._simulators.get(cfg.model)

    def models(self) -> List[ModelKind]:
        """Registered model tags in registration order."""
        return list(self._simulators)

    def clear(self) -> None:
        """Remove all registered simulators."""
        self._simulators.clear()
