"""Acceptance checks bundled behind ``cascade-lab verify``.

Each check returns a CheckResult; the suite passes only if every check does.
``quick`` shrinks run lengths for CI smoke runs. The GOY inertial-range check
then only requires the run to finish with finite diagnostics (and a finite
slope when a window is found); a short run is not statistically steady.
"""

import json
import logging
import math
import tempfile
import time
from pathlib import Path
from typing import Callable, Dict, List, Tuple

import numpy as np

from cascade_lab.core import statfit
from cascade_lab.core.config_loader import build_config
from cascade_lab.core.errors import CascadeLabError
from cascade_lab.core.run_engine import RunEngine
from cascade_lab.models.config_models import PaoParams
from cascade_lab.models.state_models import CheckResult
from cascade_lab.simulators import equilibrium_simulator as equilibrium
from cascade_lab.simulators import finance_simulator as finance
from cascade_lab.simulators import goy_simulator as goy
from cascade_lab.simulators import pao_simulator as pao
from cascade_lab.simulators import tree_simulator as tree

logger = logging.getLogger(__name__)

REPORT_FILE = "verify_report.json"
CHAIN_ALPHAS = (-1.0, -0.5, 0.0, 1.0)

Check = Callable[[bool], Tuple[bool, str, Dict[str, float]]]


def check_goy_inertial_range(quick: bool) -> Tuple[bool, str, Dict[str, float]]:
    params = {"spinup_time": 20.0} if quick else {}
    integrator = {"t_end": 20.0} if quick else {"t_end": 200.0}
    cfg = build_config("goy", params, integrator=integrator, output={"write_csv": False})
    with tempfile.TemporaryDirectory() as tmp:
        _, outputs = RunEngine().run(cfg, tmp)
    fit = outputs.fits.get("goy.spectrum.slope")
    if fit is None:
        if quick:
            finite = math.isfinite(outputs.diagnostics["goy.injection"])
            return finite, "quick run: no inertial window yet", {}
        return False, "no inertial window found", {}
    spread = outputs.diagnostics["goy.flux.spread"]
    measured = {
        "slope": fit.slope,
        "flux_spread": spread,
        "window_shells": outputs.diagnostics["goy.window.hi"] - outputs.diagnostics["goy.window.lo"] + 1,
    }
    if quick:
        return math.isfinite(fit.slope), "quick run: pipeline only", measured
    passed = abs(fit.slope + 5.0 / 3.0) <= 0.1 and spread < 0.1
    return passed, f"slope {fit.slope:.4f}, flux spread {spread:.3f}", measured


def check_goy_conservation(quick: bool) -> Tuple[bool, str, Dict[str, float]]:
    n_steps = 10_000 if quick else 100_000
    cfg = build_config("goy", {"nu": 0.0, "forcing": []})
    op = goy.GoyOperator(cfg.model_params)
    u = goy.initial_state(cfg.model_params, cfg.seed).u
    start = 0.5 * float(np.sum(np.abs(u) ** 2))
    for _ in range(n_steps):
        u = op.advance(u, cfg.integrator.dt)
    drift = abs(0.5 * float(np.sum(np.abs(u) ** 2)) - start) / start
    return drift < 1e-6, f"relative energy drift {drift:.3e} over {n_steps} steps", {"drift": drift}


def check_pao_consistency(quick: bool) -> Tuple[bool, str, Dict[str, float]]:
    p = PaoParams()
    k = np.geomspace(0.01 * p.k_d, 10.0 * p.k_d, 50)
    worst = float(np.max(np.abs(pao.consistency_residual(k, p))))
    at_zero = pao.pao_flux(0.0, p)
    at_kd = pao.pao_flux(p.k_d, p) / p.eps_u
    kd_error = abs(at_kd - math.exp(-1.5 * p.k_ko)) / math.exp(-1.5 * p.k_ko)
    passed = worst < 1e-10 and at_zero == p.eps_u and kd_error < 1e-12
    return passed, f"max residual {worst:.2e}", {"max_residual": worst, "kd_error": kd_error}


def _relaxed(alpha: float):
    cfg = build_config(
        "finance",
        {"alpha": alpha, "b": 0.0, "q": 1.0},
        grid={"n_shells": 20, "lambda": 2.0},
    )
    return cfg, finance.run_to_steady_state(cfg)


def check_finance_chain(quick: bool) -> Tuple[bool, str, Dict[str, float]]:
    measured: Dict[str, float] = {}
    failures = []
    for alpha in CHAIN_ALPHAS:
        cfg, report = _relaxed(alpha)
        interior = report.flux[1:-1]
        spread = float((interior.max() - interior.min()) / interior.mean())
        w_slope = statfit.loglog_fit(cfg.grid.wavenumbers(), report.W_star.W).slope
        n_slope = finance.distribution_fit(report.W_star, cfg.grid).slope
        measured.update(
            {f"spread[{alpha:g}]": spread, f"Wk[{alpha:g}]": w_slope, f"nW[{alpha:g}]": n_slope}
        )
        if not (
            report.converged
            and spread < 0.01
            and abs(w_slope + alpha / 2.0) <= 0.05
            and abs(n_slope - finance.predicted_exponent(alpha)) <= 0.1
        ):
            failures.append(f"alpha={alpha:g}")
    detail = "all alphas pass" if not failures else "failed at " + ", ".join(failures)
    return not failures, detail, measured


def check_fixed_point(quick: bool) -> Tuple[bool, str, Dict[str, float]]:
    cfg, report = _relaxed(-1.0)
    W = report.W_star.W
    k = cfg.grid.wavenumbers()
    q = cfg.model_params.q
    worst = float(np.max(np.abs(W[:-1] * W[1:] / (q * k[:-1]) - 1.0)))
    return worst < 0.01, f"max relative deviation {worst:.2e}", {"max_deviation": worst}


def check_equilibrium(quick: bool) -> Tuple[bool, str, Dict[str, float]]:
    n_steps = 1_000_000 if quick else 10_000_000
    cfg = build_config("equilibrium", {"n_agents": 10_000, "n_steps": n_steps})
    p = cfg.model_params
    pop = equilibrium.AgentPopulation.uniform(p.n_agents, p.mean_wealth, cfg.seed)
    pop, drift = equilibrium.evolve(pop, p)
    fit = equilibrium.ccdf_fit(pop.wealth)
    expected = -1.0 / p.mean_wealth
    error = abs(fit.slope - expected) / abs(expected)
    passed = error <= 0.05 and drift <= 1e-12
    return passed, f"rate {fit.slope:.4f} (error {error:.2%}), drift {drift:.1e}", {
        "rate": fit.slope,
        "drift": drift,
    }


def check_tree(quick: bool) -> Tuple[bool, str, Dict[str, float]]:
    budget = 1.0
    levels = tree.tree_cascade(levels=6, branching=3, budget=budget, pilferage=0.0)
    exact = all(level.level_budget == budget for level in levels)
    slope = tree.tree_fit(levels).slope
    passed = exact and abs(slope + 1.0) < 1e-12
    return passed, f"slope {slope:.15f}", {"slope": slope}


def check_statfit_calibration(quick: bool) -> Tuple[bool, str, Dict[str, float]]:
    x = np.geomspace(1.0, 100.0, 20)
    exact_power = abs(statfit.loglog_fit(x, x ** (-5.0 / 3.0)).slope + 5.0 / 3.0)
    exact_exp = abs(statfit.semilog_fit(x / 10.0, np.exp(-2.0 * x / 10.0)).slope + 2.0)

    trials = 200 if quick else 1000
    rng = np.random.default_rng(20240601)
    hits = 0
    for _ in range(trials):
        y = 3.0 * x**-2.0 * (1.0 + rng.normal(0.0, 0.01, x.size))
        hits += abs(statfit.loglog_fit(x, y).slope + 2.0) <= 0.05
    rate = hits / trials
    passed = exact_power < 1e-12 and exact_exp < 1e-12 and rate >= 0.95
    return passed, f"{rate:.1%} of {trials} noisy trials within 0.05", {
        "power_error": exact_power,
        "exp_error": exact_exp,
        "hit_rate": rate,
    }


def check_reproducibility(quick: bool) -> Tuple[bool, str, Dict[str, float]]:
    configs = [
        build_config("finance", {"alpha": -1.0}, grid={"n_shells": 12}),
        build_config("equilibrium", {"n_agents": 1000, "n_steps": 100_000}),
    ]
    mismatches = []
    with tempfile.TemporaryDirectory() as tmp:
        for cfg in configs:
            first, second = Path(tmp) / f"{cfg.model.value}-a", Path(tmp) / f"{cfg.model.value}-b"
            manifest, _ = RunEngine().run(cfg, first)
            RunEngine().run(cfg, second)
            for name in manifest.generated_files:
                if name.endswith(".csv") and (first / name).read_bytes() != (second / name).read_bytes():
                    mismatches.append(name)
    detail = "CSV outputs byte-identical" if not mismatches else f"differs: {mismatches}"
    return not mismatches, detail, {"mismatches": float(len(mismatches))}


def check_detailed_balance(quick: bool) -> Tuple[bool, str, Dict[str, float]]:
    cfg = build_config("equilibrium", {"n_agents": 10_000, "n_steps": 1_000_000})
    p = cfg.model_params
    pop, _ = equilibrium.evolve(
        equilibrium.AgentPopulation.uniform(p.n_agents, p.mean_wealth, cfg.seed), p
    )
    finance_cfg, report = _relaxed(-1.0)
    contrast = equilibrium.detailed_balance_contrast(
        equilibrium.ccdf_fit(pop.wealth),
        finance.distribution_fit(report.W_star, finance_cfg.grid),
    )
    detail = (
        f"exchange semi-log r2 {contrast['exchange.semilog_r2']:.4f}, "
        f"cascade log-log r2 {contrast['cascade.loglog_r2']:.4f}"
    )
    return bool(contrast["holds"]), detail, contrast


CHECKS: List[Tuple[str, Check]] = [
    ("goy_inertial_range", check_goy_inertial_range),
    ("goy_conservation", check_goy_conservation),
    ("pao_consistency", check_pao_consistency),
    ("finance_scaling_chain", check_finance_chain),
    ("finance_fixed_point", check_fixed_point),
    ("equilibrium_baseline", check_equilibrium),
    ("tree_corollary", check_tree),
    ("statfit_calibration", check_statfit_calibration),
    ("reproducibility", check_reproducibility),
    ("detailed_balance_contrast", check_detailed_balance),
]


def run_verification(output_dir: Path, quick: bool = False) -> Tuple[bool, List[CheckResult]]:
    """Run every check, write verify_report.json and return (all passed, results)."""
    results: List[CheckResult] = []
    for name, check in CHECKS:
        started = time.perf_counter()
        try:
            passed, detail, measured = check(quick)
        except CascadeLabError as e:
            passed, detail, measured = False, f"error: {e}", {}
        result = CheckResult(
            name=name,
            passed=bool(passed),
            detail=detail,
            measured={key: float(value) for key, value in measured.items()},
            seconds=time.perf_counter() - started,
        )
        level = logging.INFO if result.passed else logging.WARNING
        logger.log(level, f"{name}: {'PASS' if result.passed else 'FAIL'} ({detail})")
        results.append(result)

    all_passed = all(result.passed for result in results)
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    with open(output_dir / REPORT_FILE, "w") as f:
        json.dump(
            {
                "passed": all_passed,
                "quick": quick,
                "checks": [result.model_dump() for result in results],
            },
            f,
            indent=2,
        )
    return all_passed, results
