import json
import logging
from concurrent.futures import ThreadPoolExecutor, as_completed
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple, Union

from slugify import slugify

from cascade_lab._version import __version__
from cascade_lab.core.config_loader import apply_overrides, config_to_mapping, expand_sweep
from cascade_lab.core.errors import CascadeLabError, ConfigValidationError, RunError
from cascade_lab.core.plugin_registry import SimulatorRegistry
from cascade_lab.exporters.plot_script import emit_plot_script, plot_script_name
from cascade_lab.models.config_models import SimConfig
from cascade_lab.models.run_result import RunManifest, RunStatus
from cascade_lab.models.state_models import RunOutputs
from cascade_lab.simulators.equilibrium_simulator import EquilibriumSimulator
from cascade_lab.simulators.finance_simulator import FinanceSimulator
from cascade_lab.simulators.goy_simulator import GoySimulator
from cascade_lab.simulators.pao_simulator import PaoSimulator
from cascade_lab.simulators.tree_simulator import TreeSimulator

MANIFEST_FILE = "manifest.json"
FITS_FILE = "fits.json"
SWEEP_MANIFEST_FILE = "sweep_manifest.json"


def sweep_label(combo: Mapping[str, Any]) -> str:
    """Directory name for one sweep combination.

    Signs and decimal points survive slugification as ``m`` and ``p``, so
    alpha=-1 and alpha=1 (or 0.5 and 5) get distinct labels:
    ``{"finance.alpha": -0.5}`` -> ``finance-alpha-m0p5``.
    """
    parts = []
    for key, value in combo.items():
        text = str(value).replace("-", "m").replace(".", "p")
        parts.append(f"{key}={text}")
    return slugify("-".join(parts))


class RunEngine:
    """Orchestrates a run from a validated config to its artifacts.

    Manages the run pipeline:
    1. Simulator selection through the registry
    2. Simulation and CSV output
    3. fits.json and the optional plot script
    4. manifest.json, written whether the run succeeds or fails
    """

    def __init__(self):
        self.logger = logging.getLogger(__name__)
        self.registry = SimulatorRegistry()

        for simulator in (
            GoySimulator(),
            FinanceSimulator(),
            PaoSimulator(),
            EquilibriumSimulator(),
            TreeSimulator(),
        ):
            self.registry.register_simulator(simulator)

    def run(
        self, cfg: SimConfig, output_dir: Optional[Union[str, Path]] = None
    ) -> Tuple[RunManifest, RunOutputs]:
        """Run one config and write every artifact into output_dir.

        Args:
            cfg: validated config
            output_dir: overrides cfg.output.directory

        Returns:
            (manifest, simulator outputs)

        Raises:
            CascadeLabError: Whatever the simulator raised on purpose
            RunError: Wrapping any unexpected failure
        """
        output_path = Path(output_dir if output_dir is not None else cfg.output.directory)
        output_path.mkdir(parents=True, exist_ok=True)

        manifest = RunManifest(
            model=cfg.model.value,
            seed=cfg.seed,
            config=config_to_mapping(cfg),
            software_version=__version__,
            output_dir=str(output_path),
        )

        simulator = self.registry.get_simulator(cfg)
        try:
            if simulator is None:
                raise CascadeLabError(f"No simulator registered for model {cfg.model.value}")
            self.logger.info(f"Running {cfg.model.value} with {simulator.__class__.__name__}")
            outputs = simulator.run(cfg, output_path)
        except CascadeLabError as e:
            self._fail(manifest, output_path, "simulate", e)
            raise
        except Exception as e:
            self.logger.error(f"Run failed: {str(e)}", exc_info=True)
            self._fail(manifest, output_path, "simulate", e)
            raise RunError(f"{cfg.model.value} run failed: {str(e)}") from e

        for name in outputs.files:
            manifest.add_generated_file(name)
        for warning in outputs.warnings:
            manifest.add_warning(warning)
        manifest.diagnostics.update(outputs.diagnostics)

        self._write_json(
            output_path / FITS_FILE,
            {name: fit.to_record() for name, fit in outputs.fits.items()},
        )
        manifest.add_generated_file(FITS_FILE)

        if cfg.output.emit_plots:
            try:
                emit_plot_script(manifest, outputs.fits, output_path)
                manifest.add_generated_file(plot_script_name(cfg.model.value))
            except CascadeLabError as e:
                self._fail(manifest, output_path, "plot", e)
                raise

        manifest.add_generated_file(MANIFEST_FILE)
        manifest.finish()
        self._write_manifest(manifest, output_path)
        self.logger.info(
            f"{cfg.model.value} run finished: {manifest.status.value} "
            f"in {manifest.wall_seconds:.2f}s, {len(manifest.generated_files)} files"
        )
        return manifest, outputs

    def run_sweep(
        self,
        cfg: SimConfig,
        sweep: Mapping[str, Sequence[Any]],
        output_dir: Optional[Union[str, Path]] = None,
        max_workers: Optional[int] = None,
    ) -> Tuple[RunManifest, List[RunManifest]]:
        """Run the cartesian product of overrides concurrently.

        Each combination runs into its own slugified subdirectory; a sweep
        manifest listing the run manifests is written once all have joined.
        Failed combinations are recorded, not raised.
        """
        root = Path(output_dir if output_dir is not None else cfg.output.directory)
        combos = expand_sweep(sweep)
        # Configs are built up front so an invalid value fails the whole sweep.
        runs = [(sweep_label(combo), apply_overrides(cfg, combo)) for combo in combos]
        labels = [label for label, _ in runs]
        duplicates = sorted({label for label in labels if labels.count(label) > 1})
        if duplicates:
            raise ConfigValidationError(
                "Sweep combinations share an output directory",
                [f"{label} is produced {labels.count(label)} times" for label in duplicates],
            )
        root.mkdir(parents=True, exist_ok=True)

        sweep_manifest = RunManifest(
            model=cfg.model.value,
            seed=cfg.seed,
            config={"base": config_to_mapping(cfg), "sweep": {k: list(v) for k, v in sweep.items()}},
            software_version=__version__,
            output_dir=str(root),
        )
        self.logger.info(f"Sweep of {len(runs)} runs over {', '.join(sweep)}")

        manifests: Dict[str, RunManifest] = {}
        with ThreadPoolExecutor(max_workers=max_workers) as executor:
            future_to_label = {}
            for label, run_cfg in runs:
                future = executor.submit(RunEngine().run, run_cfg, root / label)
                future_to_label[future] = label

            for future in as_completed(future_to_label):
                label = future_to_label[future]
                try:
                    run_manifest, _ = future.result()
                    manifests[label] = run_manifest
                    for name in run_manifest.generated_files:
                        sweep_manifest.add_generated_file(f"{label}/{name}")
                    self.logger.info(f"  {label}: {run_manifest.status.value}")
                except CascadeLabError as e:
                    sweep_manifest.add_error(label, str(e))
                    self.logger.warning(f"  {label}: failed ({e})")

        ordered = [manifests[label] for label in sorted(manifests)]
        for label in sorted(manifests):
            for warning in manifests[label].warnings:
                sweep_manifest.add_warning(f"{label}: {warning}")

        sweep_manifest.add_generated_file(SWEEP_MANIFEST_FILE)
        sweep_manifest.finish()
        self._write_json(root / SWEEP_MANIFEST_FILE, sweep_manifest.model_dump(mode="json"))
        return sweep_manifest, ordered

    def _fail(self, manifest: RunManifest, output_path: Path, stage: str, error: Exception) -> None:
        manifest.add_error(stage, str(error), {"type": error.__class__.__name__})
        manifest.add_generated_file(MANIFEST_FILE)
        manifest.finish()
        self._write_manifest(manifest, output_path)

    def _write_manifest(self, manifest: RunManifest, output_path: Path) -> None:
        self._write_json(output_path / MANIFEST_FILE, manifest.model_dump(mode="json"))

    @staticmethod
    def _write_json(path: Path, payload: Dict[str, Any]) -> None:
        with open(path, "w") as f:
            json.dump(payload, f, indent=2)


def run_succeeded(manifest: RunManifest) -> bool:
    return manifest.status != RunStatus.FAILED
