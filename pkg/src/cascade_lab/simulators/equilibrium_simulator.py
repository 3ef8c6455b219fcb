"""Kinetic pool-and-split wealth exchange.

Two agents pool their wealth S and split it as (eps S, S - eps S) with eps
uniform in [0, 1). Total wealth is conserved, and the stationary law is the
exponential (Gibbs) distribution exp(-W/<W>)/<W>.
"""

import logging
import math
from pathlib import Path
from typing import Optional, Tuple

import numpy as np

from cascade_lab.core import statfit
from cascade_lab.core.errors import DomainError, FitError
from cascade_lab.exporters.csv_writer import write_columns
from cascade_lab.models.config_models import (
    EquilibriumParams,
    ExchangeSchedule,
    ModelKind,
    SimConfig,
)
from cascade_lab.models.state_models import (
    AgentPopulation,
    FitResult,
    Histogram,
    RunOutputs,
)
from cascade_lab.simulators.base_simulator import BaseSimulator

logger = logging.getLogger(__name__)

HISTOGRAM_FILE = "equilibrium_hist.csv"
QUANTILE_RANGE = (0.1, 0.9)


def apply_exchange(wealth: np.ndarray, i, j, eps) -> None:
    """Pool-and-split agents i and j in place (arrays of disjoint pairs allowed)."""
    pooled = wealth[i] + wealth[j]
    share = eps * pooled
    wealth[i] = share
    wealth[j] = pooled - share


def exchange_step(pop: AgentPopulation) -> AgentPopulation:
    """One exchange between two distinct agents drawn uniformly."""
    n = pop.wealth.size
    i = int(pop.rng.integers(n))
    j = int(pop.rng.integers(n - 1))
    if j >= i:
        j += 1
    apply_exchange(pop.wealth, i, j, pop.rng.random())
    pop.exchanges += 1
    return pop


def exchange_sweep(pop: AgentPopulation, n_pairs: Optional[int] = None) -> AgentPopulation:
    """Exchanges on disjoint random pairs at once, floor(n/2) by default.

    Disjoint exchanges commute, so a sweep is a sequence of exchange_step moves.
    """
    n = pop.wealth.size
    n_pairs = n // 2 if n_pairs is None else min(n_pairs, n // 2)
    order = pop.rng.permutation(n)
    i = order[0 : 2 * n_pairs : 2]
    j = order[1 : 2 * n_pairs : 2]
    apply_exchange(pop.wealth, i, j, pop.rng.random(n_pairs))
    pop.exchanges += n_pairs
    return pop


def recheck_total(pop: AgentPopulation) -> float:
    """Recompute the total exactly; returns its drift relative to the cached one."""
    exact = math.fsum(pop.wealth)
    drift = abs(exact - pop.total) / pop.total if pop.total else 0.0
    return drift


def evolve(pop: AgentPopulation, p: EquilibriumParams) -> Tuple[AgentPopulation, float]:
    """Apply p.n_steps exchanges; returns the population and its worst total drift."""
    worst = 0.0
    if p.schedule == ExchangeSchedule.SEQUENTIAL:
        for step in range(1, p.n_steps + 1):
            exchange_step(pop)
            if step % (p.recheck_every * max(pop.wealth.size // 2, 1)) == 0:
                worst = max(worst, recheck_total(pop))
    else:
        per_sweep = pop.wealth.size // 2
        sweeps, remainder = divmod(p.n_steps, per_sweep)
        for sweep in range(1, sweeps + 1):
            exchange_sweep(pop)
            if sweep % p.recheck_every == 0:
                worst = max(worst, recheck_total(pop))
        if remainder:
            exchange_sweep(pop, remainder)
    worst = max(worst, recheck_total(pop))
    return pop, worst


def gibbs_pdf(W, mean_wealth: float):
    """exp(-W/<W>) / <W>.

    Raises:
        DomainError: For negative W or nonpositive mean_wealth
    """
    w = np.asarray(W, dtype=float)
    if mean_wealth <= 0:
        raise DomainError(f"mean_wealth must be > 0, got {mean_wealth}")
    if np.any(w < 0):
        raise DomainError("Wealth must be >= 0")
    density = np.exp(-w / mean_wealth) / mean_wealth
    return float(density) if np.ndim(W) == 0 else density


def gibbs_bin_average(edges: np.ndarray, mean_wealth: float) -> np.ndarray:
    """Mean of gibbs_pdf over each bin."""
    cdf = -np.exp(-np.asarray(edges, dtype=float) / mean_wealth)
    return np.diff(cdf) / np.diff(edges)


def gini_coefficient(wealth) -> float:
    """Gini index; 0 for equal wealth, 1/2 for the exponential law."""
    w = np.sort(np.asarray(wealth, dtype=float))
    total = w.sum()
    if w.size == 0 or total == 0:
        return 0.0
    ranks = np.arange(1, w.size + 1)
    return float(2.0 * np.sum(ranks * w) / (w.size * total) - (w.size + 1) / w.size)


def ccdf_fit(wealth, quantiles: Tuple[float, float] = QUANTILE_RANGE) -> FitResult:
    """Semi-log fit of the empirical CCDF over a wealth quantile range."""
    values, ccdf = statfit.empirical_ccdf(wealth)
    lo, hi = np.quantile(values, quantiles)
    return statfit.semilog_fit(values, ccdf, fit_range=(float(lo), float(hi)))


def run_exchange(cfg: SimConfig) -> Tuple[Histogram, Optional[FitResult], AgentPopulation]:
    """Evolve a uniform population and measure its distribution.

    Returns:
        (histogram, CCDF fit or None when the wealth has no spread, population)
    """
    p: EquilibriumParams = cfg.model_params
    pop = AgentPopulation.uniform(p.n_agents, p.mean_wealth, cfg.seed)
    logger.info(f"Running {p.n_steps} exchanges among {p.n_agents} agents ({p.schedule.value})")
    pop, _ = evolve(pop, p)
    histogram = statfit.linear_histogram(pop.wealth, p.n_bins)
    try:
        fit = ccdf_fit(pop.wealth)
    except FitError as e:
        logger.warning(f"CCDF fit skipped: {e}")
        fit = None
    return histogram, fit, pop


def detailed_balance_contrast(exchange_fit: FitResult, cascade_fit: FitResult) -> dict:
    """Exponential exchange law against power-law cascade: both r^2 above 0.99."""
    return {
        "exchange.semilog_r2": exchange_fit.r_squared,
        "cascade.loglog_r2": cascade_fit.r_squared,
        "holds": float(exchange_fit.r_squared > 0.99 and cascade_fit.r_squared > 0.99),
    }


class EquilibriumSimulator(BaseSimulator):
    """Exchange baseline: histogram, Gibbs reference and CCDF rate."""

    model = ModelKind.EQUILIBRIUM

    def simulate(self, cfg: SimConfig, output_dir: Path) -> RunOutputs:
        p: EquilibriumParams = cfg.model_params
        pop = AgentPopulation.uniform(p.n_agents, p.mean_wealth, cfg.seed)
        pop, drift = evolve(pop, p)
        histogram = statfit.linear_histogram(pop.wealth, p.n_bins)
        outputs = RunOutputs(payload={"histogram": histogram, "wealth": pop.wealth})

        if cfg.output.write_csv:
            write_columns(
                output_dir / HISTOGRAM_FILE,
                {
                    "bin_left": histogram.edges[:-1],
                    "bin_right": histogram.edges[1:],
                    "count": histogram.counts,
                    "pdf_estimate": histogram.density(),
                    "gibbs_reference": gibbs_bin_average(histogram.edges, p.mean_wealth),
                },
                int_columns=("count",),
            )
            outputs.files.append(HISTOGRAM_FILE)

        outputs.diagnostics.update(
            {
                "equilibrium.exchanges": float(pop.exchanges),
                "equilibrium.total_drift": drift,
                "equilibrium.gini": gini_coefficient(pop.wealth),
                "equilibrium.expected_rate": -1.0 / p.mean_wealth,
            }
        )
        try:
            outputs.fits["equilibrium.ccdf.rate"] = ccdf_fit(pop.wealth)
        except FitError as e:
            outputs.warnings.append(f"CCDF fit skipped: {e}")
        return outputs
