"""GOY shell model of turbulence.

    du_n/dt = -i (a1 k_n u*_{n+1} u*_{n+2}
                  + a2 k_{n-1} u*_{n+1} u*_{n-1}
                  + a3 k_{n-2} u*_{n-1} u*_{n-2}) - nu k_n^2 u_n + f_n

with the four phantom shells u_{-2} = u_{-1} = u_N = u_{N+1} = 0.
"""

import logging
from pathlib import Path
from typing import Dict, Optional, Tuple, Union

import numpy as np

from cascade_lab.core import statfit
from cascade_lab.core.errors import (
    CascadeLabError,
    DimensionMismatchError,
    DomainError,
    FitError,
    IntegrationDivergedError,
)
from cascade_lab.core.integrators import (
    integrating_factor_rk4_step,
    integrating_factors,
    is_finite,
    rk4_step,
)
from cascade_lab.exporters.csv_writer import write_columns
from cascade_lab.models.config_models import (
    GoyParams,
    ModelKind,
    ShellGrid,
    SimConfig,
    ViscousTreatment,
)
from cascade_lab.models.run_result import RunManifest
from cascade_lab.models.state_models import (
    EnergySeries,
    GoyRunResult,
    RunOutputs,
    ShellState,
    SpectrumSeries,
)
from cascade_lab.simulators.base_simulator import BaseSimulator
from cascade_lab.simulators.pao_simulator import fit_pao_to_run

logger = logging.getLogger(__name__)

SPECTRUM_FILE = "goy_spectrum.csv"
ENERGY_FILE = "goy_energy.csv"

# Below this coefficient of variation the retained energy is flagged as
# periodic or stationary rather than chaotic.
PERIODIC_CV = 1e-3

# Horizon when integrator.t_end is unset.
DEFAULT_T_END = 200.0


class GoyOperator:
    """Precomputed coefficients of the GOY right-hand side for one parameter set.

    Holds a scratch buffer, so an instance belongs to a single trajectory.
    """

    def __init__(self, params: GoyParams):
        grid = params.grid
        self.params = params
        self.n = grid.n_shells
        self.k = grid.wavenumbers()
        lam = grid.lambda_
        self._c1 = -1j * params.a1 * self.k
        self._c2 = -1j * params.a2 * self.k / lam
        self._c3 = -1j * params.a3 * self.k / lam**2
        self.decay = params.nu * self.k**2
        self.forcing = params.forcing_vector()
        self._padded = np.zeros(self.n + 4, dtype=complex)
        n = self.n
        self._conj = self._padded[2 : n + 2]
        self._prev2, self._prev1 = self._padded[0:n], self._padded[1 : n + 1]
        self._next1, self._next2 = self._padded[3 : n + 3], self._padded[4 : n + 4]
        self._factors: Dict[float, Tuple[np.ndarray, np.ndarray]] = {}

    def transfer(self, u: np.ndarray) -> np.ndarray:
        """Nonlinear (triad) part of the right-hand side."""
        np.conjugate(u, out=self._conj)
        prev2, prev1, next1, next2 = self._prev2, self._prev1, self._next1, self._next2
        return next1 * (self._c1 * next2 + self._c2 * prev1) + self._c3 * prev1 * prev2

    def nonlinear(self, u: np.ndarray) -> np.ndarray:
        return self.transfer(u) + self.forcing

    def rhs(self, u: np.ndarray) -> np.ndarray:
        return self.transfer(u) - self.decay * u + self.forcing

    def advance(self, u: np.ndarray, dt: float) -> np.ndarray:
        if self.params.viscous == ViscousTreatment.EXPLICIT:
            return rk4_step(self.rhs, u, dt)
        factors = self._factors.get(dt)
        if factors is None:
            factors = self._factors[dt] = integrating_factors(self.decay, dt)
        return integrating_factor_rk4_step(self.nonlinear, self.decay, u, dt, factors)


def _check_dimension(state: ShellState, params: GoyParams) -> None:
    if state.u.shape != (params.grid.n_shells,):
        raise DimensionMismatchError(
            f"State has shape {state.u.shape}, grid has {params.grid.n_shells} shells"
        )


def goy_rhs(state: ShellState, params: GoyParams) -> np.ndarray:
    """Time derivative of every shell amplitude.

    Raises:
        DimensionMismatchError: If the state does not match the grid
    """
    _check_dimension(state, params)
    return GoyOperator(params).rhs(state.u)


def step_rk4(
    state: ShellState, params: GoyParams, dt: float, step: int = 0
) -> ShellState:
    """Advance one RK4 step of length dt.

    With viscous = integrating_factor the damping is integrated exactly;
    with explicit it is part of the classical four-stage update.

    Raises:
        DomainError: If dt <= 0
        IntegrationDivergedError: If the new state is not finite
    """
    if dt <= 0:
        raise DomainError(f"dt must be > 0, got {dt}")
    _check_dimension(state, params)
    with np.errstate(over="ignore", invalid="ignore"):
        u = GoyOperator(params).advance(state.u, dt)
    if not is_finite(u):
        raise IntegrationDivergedError("goy", step, state.t + dt, dt)
    return ShellState(u=u, t=state.t + dt)


def total_energy(state: ShellState) -> float:
    return float(0.5 * np.sum(np.abs(state.u) ** 2))


def energy_spectrum(state: ShellState, grid: ShellGrid) -> SpectrumSeries:
    """E(k_n) = |u_n|^2 / (2 k_n)."""
    k = grid.wavenumbers()
    return SpectrumSeries(k=k, value=np.abs(state.u) ** 2 / (2.0 * k))


def energy_flux(state: ShellState, params: GoyParams) -> SpectrumSeries:
    """Nonlinear energy transfer out of shells 0..n, for every n."""
    _check_dimension(state, params)
    op = GoyOperator(params)
    return SpectrumSeries(k=op.k, value=_flux(state.u, op))


def energy_injection(state: ShellState, params: GoyParams) -> float:
    return float(np.sum(np.real(np.conj(state.u) * params.forcing_vector())))


def energy_dissipation(state: ShellState, params: GoyParams) -> float:
    k = params.grid.wavenumbers()
    return float(np.sum(params.nu * k**2 * np.abs(state.u) ** 2))


def initial_state(params: GoyParams, seed: int) -> ShellState:
    """u_n = init_amplitude * k_n^(-1/3) * exp(i theta_n), theta_n seeded uniform."""
    rng = np.random.default_rng(seed)
    k = params.grid.wavenumbers()
    theta = rng.uniform(0.0, 2.0 * np.pi, size=k.size)
    return ShellState(u=params.init_amplitude * k ** (-1.0 / 3.0) * np.exp(1j * theta))


def _flux(u: np.ndarray, op: GoyOperator) -> np.ndarray:
    return -np.cumsum(np.real(np.conj(u) * op.transfer(u)))


def spin_up(u: np.ndarray, op: GoyOperator, cfg: SimConfig) -> np.ndarray:
    """Integrate for ``spinup_time`` before sampling starts.

    The integrating-factor scheme uses ``spinup_dt``; the explicit scheme keeps
    integrator.dt. Finiteness is checked every ``sample_every`` steps.

    Raises:
        IntegrationDivergedError: On a non-finite state, reported at negative t
    """
    params: GoyParams = cfg.model_params
    if params.spinup_time <= 0:
        return u
    if params.viscous == ViscousTreatment.EXPLICIT:
        dt, dt_key = cfg.integrator.dt, "integrator.dt"
    else:
        dt, dt_key = params.spinup_dt, "goy.spinup_dt"
    n_steps = int(round(params.spinup_time / dt))
    every = cfg.integrator.sample_every
    logger.info(f"Spin-up: {n_steps} steps, dt={dt:g}")
    with np.errstate(over="ignore", invalid="ignore"):
        for step in range(1, n_steps + 1):
            u = op.advance(u, dt)
            if (step % every == 0 or step == n_steps) and not is_finite(u):
                raise IntegrationDivergedError(
                    "goy", step, (step - n_steps) * dt, dt, dt_key=dt_key
                )
    return u


def integrate_goy(
    cfg: SimConfig, state: Optional[ShellState] = None
) -> GoyRunResult:
    """Integrate to t_end and time-average over the retained samples.

    Starting from the seeded initial state, the run first spins up (see
    spin_up) and t = 0 marks its end; a given ``state`` is continued as is.
    A sample is taken every ``sample_every`` steps; the first
    ``transient_fraction`` of them only enter the energy series.

    Raises:
        IntegrationDivergedError: On the first non-finite sample
    """
    params: GoyParams = cfg.model_params
    integ = cfg.integrator
    op = GoyOperator(params)
    dt = integ.dt
    n_steps = int(round(integ.horizon(DEFAULT_T_END) / dt))
    every = integ.sample_every
    n_samples = n_steps // every
    if n_samples == 0:
        raise CascadeLabError(
            f"t_end/dt = {n_steps} steps is shorter than sample_every = {every}"
        )
    first_kept = int(np.floor(integ.transient_fraction * n_samples))

    if state is None:
        u = spin_up(initial_state(params, cfg.seed).u.copy(), op, cfg)
    else:
        u = state.u.copy()
    t0 = state.t if state is not None else 0.0
    times = [t0]
    energies = [0.5 * float(np.sum(np.abs(u) ** 2))]
    spectrum_sum = np.zeros(op.n)
    flux_sum = np.zeros(op.n)
    injection_sum = dissipation_sum = 0.0
    kept_energy = []

    logger.info(
        f"Integrating GOY: {n_steps} steps, dt={dt:g}, {n_samples} samples "
        f"({n_samples - first_kept} retained), viscous={params.viscous.value}"
    )
    with np.errstate(over="ignore", invalid="ignore"):
        for sample in range(1, n_samples + 1):
            for _ in range(every):
                u = op.advance(u, dt)
            step = sample * every
            if not is_finite(u):
                raise IntegrationDivergedError("goy", step, t0 + step * dt, dt)

            modulus2 = np.abs(u) ** 2
            energy = 0.5 * float(np.sum(modulus2))
            times.append(t0 + step * dt)
            energies.append(energy)
            if sample > first_kept:
                spectrum_sum += modulus2 / (2.0 * op.k)
                flux_sum += _flux(u, op)
                injection_sum += float(np.sum(np.real(np.conj(u) * op.forcing)))
                dissipation_sum += float(np.sum(op.decay * modulus2))
                kept_energy.append(energy)

    # Steps beyond the last full sample interval.
    for _ in range(n_steps - n_samples * every):
        u = op.advance(u, dt)
    if not is_finite(u):
        raise IntegrationDivergedError("goy", n_steps, t0 + n_steps * dt, dt)

    retained = n_samples - first_kept
    kept = np.asarray(kept_energy)
    mean_energy = float(kept.mean())
    energy_cv = float(kept.std() / mean_energy) if mean_energy > 0 else 0.0
    return GoyRunResult(
        spectrum=SpectrumSeries(k=op.k, value=spectrum_sum / retained, n_samples=retained),
        flux=SpectrumSeries(k=op.k, value=flux_sum / retained, n_samples=retained),
        energy=EnergySeries(t=times, energy=energies),
        final_state=ShellState(u=u, t=t0 + n_steps * dt),
        injection=injection_sum / retained,
        dissipation=dissipation_sum / retained,
        energy_cv=energy_cv,
        n_steps=n_steps,
    )


def slope_window(lo: int, hi: int) -> int:
    """Last shell of the spectrum fit inside the flux window [lo, hi].

    GOY spectra carry a period-3 oscillation in n, so the fit keeps a whole
    number of periods from the large-scale end (at least 3 shells).
    """
    width = hi - lo + 1
    return lo + max(3, width - width % 3) - 1


def run_goy(
    cfg: SimConfig, output_dir: Optional[Union[str, Path]] = None
) -> Tuple[SpectrumSeries, SpectrumSeries, EnergySeries, RunManifest]:
    """Run the GOY model end to end and write its artifacts.

    Returns:
        (time-averaged spectrum, time-averaged flux, energy series, manifest)
    """
    from cascade_lab.core.run_engine import RunEngine

    manifest, outputs = RunEngine().run(cfg, output_dir)
    result: GoyRunResult = outputs.payload["result"]
    return result.spectrum, result.flux, result.energy, manifest


class GoySimulator(BaseSimulator):
    """Integrates the GOY model and measures its inertial range."""

    model = ModelKind.GOY

    def simulate(self, cfg: SimConfig, output_dir: Path) -> RunOutputs:
        params: GoyParams = cfg.model_params
        result = integrate_goy(cfg)
        outputs = RunOutputs(payload={"result": result})

        if cfg.output.write_csv:
            n = np.arange(params.grid.n_shells)
            write_columns(
                output_dir / SPECTRUM_FILE,
                {
                    "n": n,
                    "k": result.spectrum.k,
                    "E_avg": result.spectrum.value,
                    "Pi_avg": result.flux.value,
                    "n_samples": np.full(n.size, result.spectrum.n_samples),
                },
                int_columns=("n", "n_samples"),
            )
            write_columns(
                output_dir / ENERGY_FILE,
                {"t": result.energy.t, "E_total": result.energy.energy},
            )
            outputs.files.extend([SPECTRUM_FILE, ENERGY_FILE])

        outputs.diagnostics.update(
            {
                "goy.injection": result.injection,
                "goy.dissipation": result.dissipation,
                "goy.energy_cv": result.energy_cv,
                "goy.n_steps": float(result.n_steps),
            }
        )
        if result.energy_cv < PERIODIC_CV:
            outputs.warnings.append(
                f"Retained energy varies by only {result.energy_cv:.2e} (relative); "
                "the steady state may be periodic rather than chaotic"
            )

        self._measure_inertial_range(params, result, outputs)
        self._measure_k_ko(params, result, outputs)
        return outputs

    def _measure_inertial_range(
        self, params: GoyParams, result: GoyRunResult, outputs: RunOutputs
    ) -> None:
        try:
            lo, hi = statfit.inertial_range_select(
                result.flux, params.forced_shells, tolerance=params.plateau_tolerance
            )
        except FitError as e:
            outputs.warnings.append(f"Inertial range not found: {e}")
            return

        fit_hi = slope_window(lo, hi)
        fitted = slice(lo, fit_hi + 1)
        flux = result.flux.value[fitted]
        outputs.fits["goy.spectrum.slope"] = statfit.loglog_fit(
            result.spectrum.k[fitted], result.spectrum.value[fitted]
        )
        outputs.diagnostics.update(
            {
                "goy.window.lo": float(lo),
                "goy.window.hi": float(hi),
                "goy.fit.hi": float(fit_hi),
                "goy.flux.spread": float((flux.max() - flux.min()) / flux.mean()),
                "goy.flux.mean": float(flux.mean()),
            }
        )

    def _measure_k_ko(
        self, params: GoyParams, result: GoyRunResult, outputs: RunOutputs
    ) -> None:
        if params.nu <= 0 or result.injection <= 0:
            return
        try:
            fit = fit_pao_to_run(result.spectrum, result.flux, result.injection, params.nu)
        except (FitError, DomainError) as e:
            outputs.warnings.append(f"Kolmogorov constant fit skipped: {e}")
            return
        outputs.diagnostics["goy.pao.k_ko"] = fit.k_ko
        outputs.diagnostics["goy.pao.goodness"] = fit.goodness
