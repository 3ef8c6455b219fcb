"""Hierarchical finance shell model.

Shell wealth W_n lives on the same geometric wavenumber ladder as the GOY
model. Money is injected at the first (largest) shell at rate Q, cascades to
smaller entities through nearest-neighbour coupling a k^alpha, is lost at rate
b k^beta, and leaves through the last shell. Entity counts follow a 2-D disc,
n(k) = 2 pi k.
"""

import logging
import math
from pathlib import Path
from typing import Iterable, List, Optional, Tuple

import numpy as np

from cascade_lab.core import statfit
from cascade_lab.core.config_loader import apply_overrides, build_config
from cascade_lab.core.errors import (
    DegenerateExponentError,
    DimensionMismatchError,
    FitError,
    IntegrationDivergedError,
)
from cascade_lab.core.integrators import rk4_step
from cascade_lab.exporters.csv_writer import write_columns
from cascade_lab.models.config_models import (
    FinanceMode,
    FinanceParams,
    IntegratorSettings,
    ModelKind,
    ShellGrid,
    SimConfig,
    SinkLaw,
)
from cascade_lab.models.state_models import (
    FitResult,
    RelaxationStop,
    RunOutputs,
    SpectrumSeries,
    SteadyStateReport,
    WealthDistribution,
    WealthState,
)
from cascade_lab.simulators.base_simulator import BaseSimulator

logger = logging.getLogger(__name__)

STEADY_FILE = "finance_steady.csv"
DISTRIBUTION_FILE = "finance_distribution.csv"

STABILITY_FACTOR = 0.5
HORIZON_FACTOR = 50.0
RESIDUAL_FLOOR = 1e-12


def _check_dimension(state: WealthState, p: FinanceParams) -> None:
    if state.W.shape != (p.grid.n_shells,):
        raise DimensionMismatchError(
            f"State has shape {state.W.shape}, grid has {p.grid.n_shells} shells"
        )


def _drain(W: np.ndarray, p: FinanceParams, k: np.ndarray) -> float:
    """Rate at which wealth leaves the last shell."""
    if p.sink_law == SinkLaw.OUTFLOW:
        # Ghost neighbour continuing the power law: W_ghost = lambda^(-alpha/2) W_last.
        ghost = p.grid.lambda_ ** (-p.alpha / 2.0) * W[-1]
        return float(p.a * k[-1] ** p.alpha * W[-1] * ghost)
    return float(p.sink_coefficient * W[-1])


def _pair_flux(W: np.ndarray, p: FinanceParams, k: np.ndarray) -> np.ndarray:
    return p.a * k[:-1] ** p.alpha * W[:-1] * W[1:]


def finance_rhs_literal(state: WealthState, p: FinanceParams) -> np.ndarray:
    """dW_n/dt = a k_n^alpha W_{n-1} W_{n+1} - b k_n^beta W_n + Q[first] - drain[last]."""
    _check_dimension(state, p)
    return _literal(state.W, p, p.grid.wavenumbers())


def finance_rhs_fluxform(state: WealthState, p: FinanceParams) -> np.ndarray:
    """dW_n/dt = F_{n-1/2} - F_{n+1/2} - b k_n^beta W_n + Q[first] - drain[last].

    F_{n+1/2} = a k_n^alpha W_n W_{n+1} at interior boundaries; the outer
    boundaries carry only the injection and the drain.
    """
    _check_dimension(state, p)
    return _fluxform(state.W, p, p.grid.wavenumbers())


def _literal(W: np.ndarray, p: FinanceParams, k: np.ndarray) -> np.ndarray:
    padded = np.zeros(W.size + 2)
    padded[1:-1] = W
    dW = p.a * k**p.alpha * padded[:-2] * padded[2:] - p.b * k**p.beta * W
    dW[0] += p.q
    dW[-1] -= _drain(W, p, k)
    return dW


def _fluxform(W: np.ndarray, p: FinanceParams, k: np.ndarray) -> np.ndarray:
    flux = _pair_flux(W, p, k)
    dW = -p.b * k**p.beta * W
    dW[:-1] -= flux
    dW[1:] += flux
    dW[0] += p.q
    dW[-1] -= _drain(W, p, k)
    return dW


def _rhs_for(p: FinanceParams, k: np.ndarray):
    if p.mode == FinanceMode.LITERAL:
        return lambda W: _literal(W, p, k)
    return lambda W: _fluxform(W, p, k)


def money_flux(state: WealthState, p: FinanceParams) -> SpectrumSeries:
    """Money flux across every interior shell boundary n + 1/2.

    flux_form: the pair flux a k_n^alpha W_n W_{n+1}.
    literal: the budget flux Q - sum_{m<=n} (b k_m^beta W_m + dW_m/dt).
    Both agree at a steady state of the flux form. The series is indexed by
    the wavenumber on the large-scale side of each boundary.
    """
    _check_dimension(state, p)
    k = p.grid.wavenumbers()
    if p.mode == FinanceMode.FLUX_FORM:
        values = _pair_flux(state.W, p, k)
    else:
        values = _budget_flux(state.W, p, k)[:-1]
    return SpectrumSeries(k=k[:-1], value=values)


def _budget_flux(W: np.ndarray, p: FinanceParams, k: np.ndarray) -> np.ndarray:
    """Flux leaving each shell through its small-scale side, last one included."""
    dW = _rhs_for(p, k)(W)
    return p.q - np.cumsum(p.b * k**p.beta * W) - np.cumsum(dW)


def boundary_fluxes(state: WealthState, p: FinanceParams) -> np.ndarray:
    """Flux through all n_shells + 1 boundaries: injection, interior, drain."""
    k = p.grid.wavenumbers()
    if p.mode == FinanceMode.FLUX_FORM:
        interior = _pair_flux(state.W, p, k)
    else:
        interior = _budget_flux(state.W, p, k)[:-1]
    return np.concatenate([[p.q], interior, [_drain(state.W, p, k)]])


def fixed_point_profile(p: FinanceParams) -> WealthState:
    """Exact flux-form steady state without losses and with the outflow drain.

    W_n = sqrt(Q/a) lambda^(alpha/4) k_n^(-alpha/2), so that
    a k_n^alpha W_n W_{n+1} = Q at every boundary, the drain included.
    """
    k = p.grid.wavenumbers()
    W = math.sqrt(p.q / p.a) * p.grid.lambda_ ** (p.alpha / 4.0) * k ** (-p.alpha / 2.0)
    return WealthState(W=W)


def local_rates(W: np.ndarray, p: FinanceParams, k: np.ndarray) -> np.ndarray:
    """Magnitude of each shell's coupling to its neighbours and its losses."""
    rates = p.b * k**p.beta
    coupling = p.a * k**p.alpha
    if p.mode == FinanceMode.FLUX_FORM:
        rates[1:] += coupling[:-1] * W[:-1]
        rates[:-1] += coupling[:-1] * W[1:]
    else:
        rates[1:] += coupling[1:] * W[:-1]
        rates[:-1] += coupling[:-1] * W[1:]
    if p.sink_law == SinkLaw.OUTFLOW:
        rates[-1] += 2.0 * coupling[-1] * p.grid.lambda_ ** (-p.alpha / 2.0) * W[-1]
    else:
        rates[-1] += p.sink_coefficient
    return rates


def relaxation_schedule(p: FinanceParams) -> Tuple[float, float]:
    """Suggested (dt, t_end) from the cascade rates at the expected steady state.

    dt resolves the fastest shell, the horizon covers many relaxation times
    of the slowest one. Without injection the uniform initial state is used.
    """
    k = p.grid.wavenumbers()
    reference = fixed_point_profile(p).W if p.q > 0 else np.full(k.size, p.initial_wealth)
    rates = local_rates(reference, p, k)
    fastest, slowest = float(rates.max()), float(rates.min())
    if fastest <= 0 or slowest <= 0:
        raise FitError("Cascade rates vanish; no relaxation schedule exists")
    return STABILITY_FACTOR / fastest, HORIZON_FACTOR * k.size / slowest


def residual_norm(W: np.ndarray, dW: np.ndarray) -> float:
    return float(np.linalg.norm(dW) / max(np.linalg.norm(W), RESIDUAL_FLOOR))


def run_to_steady_state(
    cfg: SimConfig, state: Optional[WealthState] = None
) -> SteadyStateReport:
    """Relax the finance model with RK4 until the residual drops below tolerance.

    The run stops at the first of: residual below tolerance, the horizon
    (integrator.t_end when set, otherwise the relaxation schedule's),
    ``max_steps`` steps, or a finite-time blow-up where max W exceeds
    ``blowup_factor`` times its reference scale (the larger of the initial
    and the fixed-point wealth). Every stop other than convergence is
    reported in the result, not raised. Negative shell wealth after a step is
    clamped to zero and the step counted.

    Raises:
        IntegrationDivergedError: On non-finite wealth
    """
    p: FinanceParams = cfg.model_params
    integ = cfg.integrator
    k = p.grid.wavenumbers()
    rhs = _rhs_for(p, k)
    notes: List[str] = []

    t_end = integ.t_end if integ.t_end is not None else relaxation_schedule(p)[1]
    dt = None if p.auto_step else integ.dt
    if p.auto_step and integ.dt != IntegratorSettings.model_fields["dt"].default:
        notes.append(
            f"integrator.dt = {integ.dt:g} ignored: finance.auto_step sets the step "
            "from the local cascade rates"
        )
        logger.warning(notes[-1])

    W = (state.W.copy() if state is not None else np.full(k.size, p.initial_wealth))
    t0 = state.t if state is not None else 0.0
    t, t_stop = t0, t0 + t_end
    ceiling = p.blowup_factor * _wealth_scale(W, p)
    iterations = clamped = 0
    residual = residual_norm(W, rhs(W))
    converged = residual < p.tolerance
    stop = RelaxationStop.CONVERGED if converged else RelaxationStop.HORIZON

    logger.info(
        f"Relaxing finance model ({p.mode.value}, alpha={p.alpha:g}, "
        f"N={k.size}) up to t={t_stop:.6g}"
    )
    with np.errstate(over="ignore", invalid="ignore"):
        while not converged and t < t_stop:
            if iterations >= p.max_steps:
                stop = RelaxationStop.STEP_LIMIT
                break
            step = min(dt if dt is not None else _stable_step(W, p, k, t_stop - t), t_stop - t)
            W = rk4_step(rhs, W, step)
            t += step
            iterations += 1

            if not np.all(np.isfinite(W)):
                raise IntegrationDivergedError("finance", iterations, t, step)
            if W.max() > ceiling:
                stop = RelaxationStop.BLOW_UP
                break
            if W.min() < 0:
                np.maximum(W, 0.0, out=W)
                clamped += 1
            if iterations % p.check_every == 0:
                residual = residual_norm(W, rhs(W))
                converged = residual < p.tolerance

    residual = residual_norm(W, rhs(W))
    converged = stop != RelaxationStop.BLOW_UP and residual < p.tolerance
    if converged:
        stop = RelaxationStop.CONVERGED
    final = WealthState(W=W, t=t)
    if stop == RelaxationStop.BLOW_UP:
        logger.warning(
            f"Finance model blew up at t={t:.6g} after {iterations} steps "
            f"(max W {W.max():.3e} > {ceiling:.3e})"
        )
    elif not converged:
        logger.warning(
            f"Finance model not converged after {iterations} steps, stopped at "
            f"{stop.value} (residual {residual:.3e} > {p.tolerance:g})"
        )
    return SteadyStateReport(
        W_star=final,
        flux=boundary_fluxes(final, p),
        converged=converged,
        residual_norm=residual,
        iterations=iterations,
        time_used=t - t0,
        clamped_steps=clamped,
        diverged=stop == RelaxationStop.BLOW_UP,
        stop_reason=stop,
        notes=notes,
    )


def _wealth_scale(W: np.ndarray, p: FinanceParams) -> float:
    scale = float(W.max())
    if p.q > 0:
        scale = max(scale, float(fixed_point_profile(p).W.max()))
    return max(scale, p.initial_wealth)


def _stable_step(W: np.ndarray, p: FinanceParams, k: np.ndarray, remaining: float) -> float:
    fastest = float(local_rates(W, p, k).max())
    return STABILITY_FACTOR / fastest if fastest > 0 else remaining


def entity_wealth(state: WealthState, grid: ShellGrid) -> WealthDistribution:
    """Per-entity wealth W(k) = W_k / (2 pi k) with n(k) = 2 pi k, in shell order."""
    k = grid.wavenumbers()
    counts = 2.0 * np.pi * k
    return WealthDistribution(W=state.W / counts, n=counts, k=k)


def wealth_distribution(state: WealthState, grid: ShellGrid) -> WealthDistribution:
    """The discrete n(W) curve: (W(k), n(k)) for every shell, sorted by W."""
    shells = entity_wealth(state, grid)
    order = np.argsort(shells.W, kind="stable")
    return WealthDistribution(W=shells.W[order], n=shells.n[order], k=shells.k[order])


def predicted_exponent(alpha: float) -> float:
    """Exponent of n(W) ~ W^(-2/(alpha+2)).

    Raises:
        DegenerateExponentError: At alpha = -2
    """
    if alpha == -2:
        raise DegenerateExponentError("alpha = -2 makes every entity equally wealthy")
    return -2.0 / (alpha + 2.0)


def flux_exponent(alpha: float) -> float:
    """Exponent 1/(alpha+2) with which n(W) scales with the money flux."""
    if alpha == -2:
        raise DegenerateExponentError("alpha = -2 makes every entity equally wealthy")
    return 1.0 / (alpha + 2.0)


def distribution_fit(state: WealthState, grid: ShellGrid) -> FitResult:
    """Log-log fit of n against W over the shells holding wealth."""
    dist = wealth_distribution(state, grid)
    held = dist.W > 0
    return statfit.loglog_fit(dist.W[held], dist.n[held])


def exponent_chain(
    alphas: Iterable[float], base: Optional[SimConfig] = None
) -> List[Tuple[float, float, float]]:
    """Relax the loss-free flux form at each alpha and measure the n(W) slope.

    Returns:
        (alpha, predicted slope, measured slope) per alpha
    """
    if base is None:
        base = build_config(
            "finance", {"b": 0.0, "q": 1.0}, grid={"n_shells": 20, "lambda": 2.0}
        )
    chain = []
    for alpha in alphas:
        cfg = apply_overrides(base, {"finance.alpha": float(alpha)})
        report = run_to_steady_state(cfg)
        measured = distribution_fit(report.W_star, cfg.grid).slope
        chain.append((float(alpha), predicted_exponent(alpha), measured))
    return chain


class FinanceSimulator(BaseSimulator):
    """Relaxes the finance cascade and measures its Pareto exponent."""

    model = ModelKind.FINANCE

    def simulate(self, cfg: SimConfig, output_dir: Path) -> RunOutputs:
        p: FinanceParams = cfg.model_params
        report = run_to_steady_state(cfg)
        if report.diverged:
            raise IntegrationDivergedError(
                "finance",
                report.iterations,
                report.W_star.t,
                0.0,
                hint=f"max W reached {report.W_star.W.max():.3e}; the {p.mode.value} "
                "system blows up in finite time at these parameters",
            )
        state = report.W_star
        shells = entity_wealth(state, cfg.grid)
        dist = wealth_distribution(state, cfg.grid)
        outputs = RunOutputs(payload={"report": report, "distribution": dist})

        if cfg.output.write_csv:
            k = shells.k
            write_columns(
                output_dir / STEADY_FILE,
                {
                    "n": np.arange(k.size),
                    "k": k,
                    "W_shell": state.W,
                    "W_entity": shells.W,
                    "n_k": shells.n,
                    "flux_left": report.flux[:-1],
                    "flux_right": report.flux[1:],
                },
                int_columns=("n",),
            )
            write_columns(output_dir / DISTRIBUTION_FILE, {"W": dist.W, "n_of_W": dist.n})
            outputs.files.extend([STEADY_FILE, DISTRIBUTION_FILE])

        interior = report.flux[1:-1]
        outputs.diagnostics.update(
            {
                "finance.converged": float(report.converged),
                "finance.residual": report.residual_norm,
                "finance.iterations": float(report.iterations),
                "finance.time_used": report.time_used,
                "finance.clamped_steps": float(report.clamped_steps),
            }
        )
        outputs.warnings.extend(report.notes)
        if interior.size and interior.mean() != 0:
            outputs.diagnostics["finance.flux.spread"] = float(
                (interior.max() - interior.min()) / interior.mean()
            )
        if not report.converged:
            outputs.warnings.append(
                f"Finance relaxation did not converge: stopped at {report.stop_reason.value} "
                f"(residual {report.residual_norm:.3e})"
            )
        if report.clamped_steps:
            outputs.warnings.append(
                f"{report.clamped_steps} steps clamped negative shell wealth to zero"
            )

        self._fit(
            outputs, "finance.Wk.slope", lambda: statfit.loglog_fit(*_held(shells.k, state.W))
        )
        self._fit(outputs, "finance.nW.slope", lambda: distribution_fit(state, cfg.grid))
        try:
            outputs.diagnostics["finance.nW.predicted"] = predicted_exponent(p.alpha)
        except DegenerateExponentError as e:
            outputs.warnings.append(str(e))

        if p.b > 0:
            rolled = report.flux[1:] < 0.5 * p.q
            self._fit(
                outputs,
                "finance.rolloff",
                lambda: statfit.semilog_fit(*_held(shells.k[rolled], shells.W[rolled])),
            )
        return outputs

    def _fit(self, outputs: RunOutputs, name: str, fitter) -> None:
        try:
            outputs.fits[name] = fitter()
        except FitError as e:
            outputs.warnings.append(f"{name} not fitted: {e}")


def _held(x: np.ndarray, y: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    mask = y > 0
    return x[mask], y[mask]
