"""Fiscal hierarchy: a top budget handed down a B-ary tree of entities."""

import math
from pathlib import Path
from typing import List

import numpy as np

from cascade_lab.core import statfit
from cascade_lab.core.errors import DomainError, FitError
from cascade_lab.exporters.csv_writer import write_columns
from cascade_lab.models.config_models import ModelKind, SimConfig, TreeParams
from cascade_lab.models.state_models import FitResult, RunOutputs, TreeLevel
from cascade_lab.simulators.base_simulator import BaseSimulator

CASCADE_FILE = "tree_cascade.csv"


def tree_cascade(
    levels: int, branching: int, budget: float, pilferage: float = 0.0
) -> List[TreeLevel]:
    """Allocation at levels 0..levels.

    Level l keeps budget Q (1 - p)^l, shared equally by branching^l nodes.

    Raises:
        DomainError: If levels < 1, branching < 2 or pilferage outside [0, 1)
    """
    if levels < 1 or branching < 2 or not 0 <= pilferage < 1:
        raise DomainError(
            f"Need levels >= 1, branching >= 2 and 0 <= pilferage < 1 "
            f"(got {levels}, {branching}, {pilferage})"
        )
    result = []
    for level in range(levels + 1):
        nodes = branching**level
        level_budget = budget * (1.0 - pilferage) ** level
        result.append(
            TreeLevel(
                level=level,
                nodes=nodes,
                level_budget=level_budget,
                per_node_wealth=level_budget / nodes,
            )
        )
    return result


def predicted_tree_slope(branching: int, pilferage: float) -> float:
    """Slope of ln(nodes) against ln(per-node wealth)."""
    ln_b = math.log(branching)
    return -ln_b / (ln_b - math.log(1.0 - pilferage))


def tree_fit(allocation: List[TreeLevel]) -> FitResult:
    counts = np.array([level.nodes for level in allocation], dtype=float)
    wealth = np.array([level.per_node_wealth for level in allocation])
    return statfit.loglog_fit(wealth, counts)


class TreeSimulator(BaseSimulator):
    model = ModelKind.TREE

    def simulate(self, cfg: SimConfig, output_dir: Path) -> RunOutputs:
        p: TreeParams = cfg.model_params
        allocation = tree_cascade(p.levels, p.branching, p.budget, p.pilferage)
        outputs = RunOutputs(payload={"levels": allocation})

        if cfg.output.write_csv:
            write_columns(
                output_dir / CASCADE_FILE,
                {
                    "level": [level.level for level in allocation],
                    "nodes": [level.nodes for level in allocation],
                    "level_budget": [level.level_budget for level in allocation],
                    "per_node_wealth": [level.per_node_wealth for level in allocation],
                },
                int_columns=("level", "nodes"),
            )
            outputs.files.append(CASCADE_FILE)

        outputs.diagnostics["tree.predicted_slope"] = predicted_tree_slope(
            p.branching, p.pilferage
        )
        outputs.diagnostics["tree.bottom_budget"] = allocation[-1].level_budget
        try:
            outputs.fits["tree.count.slope"] = tree_fit(allocation)
        except FitError as e:
            outputs.warnings.append(f"Tree slope not fitted: {e}")
        return outputs
