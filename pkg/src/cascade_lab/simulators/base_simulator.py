import logging
from abc import ABC, abstractmethod
from pathlib import Path

from cascade_lab.core.errors import CascadeLabError
from cascade_lab.models.config_models import ModelKind, SimConfig
from cascade_lab.models.state_models import RunOutputs


class BaseSimulator(ABC):
    """Base class for all model simulators.

    Each simulator is responsible for:
    1. Declaring the model it runs (``model``)
    2. Running the model and writing its CSV artifacts (``simulate``)

    Simulators do NOT write fits.json or the manifest - that is the
    RunEngine's responsibility.
    """

    #: Model tag this simulator runs.
    model: ModelKind

    def __init__(self):
        self.logger = logging.getLogger(self.__class__.__module__)

    def handles(self, cfg: SimConfig) -> bool:
        return cfg.model == self.model

    def run(self, cfg: SimConfig, output_dir: Path) -> RunOutputs:
        """Run a config completely.

        Template method that defines the run algorithm. Subclasses should not
        override this method.

        Raises:
            CascadeLabError: If this simulator cannot run the config, or the
                model itself fails
        """
        if not self.handles(cfg):
            raise CascadeLabError(
                f"Simulator {self.__class__.__name__} cannot run model {cfg.model.value}"
            )

        output_dir = Path(output_dir)
        output_dir.mkdir(parents=True, exist_ok=True)
        self.logger.info(f"{self.__class__.__name__} starting (seed={cfg.seed})")

        outputs = self.simulate(cfg, output_dir)
        for warning in outputs.warnings:
            self.logger.warning(warning)
        return outputs

    @abstractmethod
    def simulate(self, cfg: SimConfig, output_dir: Path) -> RunOutputs:
        """Run the model and write its artifacts into output_dir.

        Returns:
            RunOutputs listing the files written (relative names), the fits
            and scalar diagnostics, and any warnings

        Raises:
            CascadeLabError: If the model cannot complete
        """
        pass
