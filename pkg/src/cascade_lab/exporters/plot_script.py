"""Gnuplot scripts reproducing the standard figure panels from run CSVs."""

import logging
from pathlib import Path
from typing import Dict, Mapping, Union

from jinja2 import Environment, PackageLoader, StrictUndefined

from cascade_lab.core.errors import PlotScriptError
from cascade_lab.models.run_result import RunManifest
from cascade_lab.models.state_models import FitResult

logger = logging.getLogger(__name__)

# CSV files each model's template reads.
REQUIRED_CSV: Dict[str, tuple] = {
    "goy": ("goy_spectrum.csv", "goy_energy.csv"),
    "finance": ("finance_steady.csv", "finance_distribution.csv"),
    "pao": ("pao_curves.csv",),
    "equilibrium": ("equilibrium_hist.csv",),
    "tree": ("tree_cascade.csv",),
}

_environment = Environment(
    loader=PackageLoader("cascade_lab", "templates"),
    undefined=StrictUndefined,
    trim_blocks=True,
    lstrip_blocks=True,
    keep_trailing_newline=True,
)


def plot_script_name(model: str) -> str:
    return f"{model}_plots.gp"


def emit_plot_script(
    manifest: RunManifest,
    fits: Mapping[str, FitResult],
    output_dir: Union[str, Path],
) -> Path:
    """Render ``<model>_plots.gp`` next to the CSVs of a finished run.

    Raises:
        PlotScriptError: If a CSV the script needs is not listed in the
            manifest or is missing on disk
    """
    output_dir = Path(output_dir)
    required = REQUIRED_CSV.get(manifest.model)
    if required is None:
        raise PlotScriptError(f"No plot template for model {manifest.model}")

    for name in required:
        if name not in manifest.generated_files:
            raise PlotScriptError(f"{name} is not among the run's generated files")
        if not (output_dir / name).exists():
            raise PlotScriptError(f"Missing CSV {output_dir / name}")

    template = _environment.get_template(f"{manifest.model}.gp.j2")
    script = template.render(
        files=dict(zip((Path(n).stem for n in required), required)),
        fits={name: fit for name, fit in fits.items()},
        diagnostics=manifest.diagnostics,
        image=f"{manifest.model}_plots.png",
        seed=manifest.seed,
    )
    target = output_dir / plot_script_name(manifest.model)
    target.write_text(script, encoding="utf-8")
    logger.info(f"Wrote plot script {target}")
    return target
