import numpy as np
import pytest

from cascade_lab.core import statfit
from cascade_lab.core.config_loader import apply_overrides, build_config
from cascade_lab.core.errors import DimensionMismatchError, DomainError, IntegrationDivergedError
from cascade_lab.models.config_models import GoyParams, ShellGrid
from cascade_lab.models.state_models import ShellState
from cascade_lab.simulators.goy_simulator import (
    GoyOperator,
    energy_dissipation,
    energy_flux,
    energy_injection,
    energy_spectrum,
    goy_rhs,
    initial_state,
    integrate_goy,
    run_goy,
    slope_window,
    spin_up,
    step_rk4,
    total_energy,
)


def _params(n_shells=10, **values):
    values.setdefault("forcing", [])
    return GoyParams(grid=ShellGrid(n_shells=n_shells), **values)


def _random_state(rng, n_shells, scale=1.0):
    return ShellState(u=scale * (rng.normal(size=n_shells) + 1j * rng.normal(size=n_shells)))


def test_zero_state_has_zero_derivative():
    params = _params(nu=1e-3)
    assert np.array_equal(goy_rhs(ShellState(u=np.zeros(10)), params), np.zeros(10))
    assert np.array_equal(step_rk4(ShellState(u=np.zeros(10)), params, 0.01).u, np.zeros(10))


def test_isolated_shell_only_decays():
    params = _params(nu=1e-2)
    u = np.zeros(10, dtype=complex)
    u[5] = 1.0 + 1.0j
    rhs = goy_rhs(ShellState(u=u), params)
    assert rhs[5] == pytest.approx(-1e-2 * 32.0**2 * (1.0 + 1.0j))
    assert np.count_nonzero(rhs) == 1


def test_triad_cancellation(rng):
    params = _params(n_shells=22, nu=0.0)
    for _ in range(5):
        state = _random_state(rng, 22)
        terms = np.real(np.conj(state.u) * goy_rhs(state, params))
        assert abs(terms.sum()) <= 1e-12 * np.abs(terms).sum()


def test_flux_vanishes_at_last_boundary(rng):
    params = _params(n_shells=12, nu=1e-3)
    state = _random_state(rng, 12)
    op = GoyOperator(params)
    scale = np.abs(np.real(np.conj(state.u) * op.transfer(state.u))).sum()
    flux = energy_flux(state, params)
    assert abs(flux.value[-1]) <= 1e-12 * scale
    assert np.array_equal(energy_flux(ShellState(u=np.zeros(12)), params).value, np.zeros(12))


def test_flux_includes_only_the_nonlinear_transfer(rng):
    forced = _params(n_shells=8, nu=0.5, forcing=[{"shell": 1, "re": 1.0}])
    bare = _params(n_shells=8, nu=0.0)
    state = _random_state(rng, 8)
    assert np.allclose(energy_flux(state, forced).value, energy_flux(state, bare).value)


@pytest.mark.parametrize("viscous, rtol", [("integrating_factor", 1e-13), ("explicit", 1e-9)])
def test_pure_decay_matches_exponential(rng, viscous, rtol):
    params = _params(n_shells=6, nu=1e-2, a1=0.0, a2=0.0, a3=0.0, viscous=viscous)
    state = _random_state(rng, 6)
    dt = 1e-3
    stepped = step_rk4(state, params, dt)
    exact = np.exp(-1e-2 * params.grid.wavenumbers() ** 2 * dt) * state.u
    assert np.allclose(stepped.u, exact, rtol=rtol, atol=0.0)
    assert stepped.t == pytest.approx(dt)


def _integrate(state, params, dt, t_end=1.0):
    for step in range(int(round(t_end / dt))):
        state = step_rk4(state, params, dt, step)
    return state.u


def test_rk4_error_falls_sixteenfold_when_dt_halves():
    params = _params(n_shells=6, nu=1e-3, viscous="explicit")
    k = params.grid.wavenumbers()
    start = ShellState(u=0.3 * k ** (-1.0 / 3.0) * np.exp(1j * np.arange(6)))
    reference = _integrate(start, params, 1e-3)
    coarse = np.max(np.abs(_integrate(start, params, 0.02) - reference))
    fine = np.max(np.abs(_integrate(start, params, 0.01) - reference))
    assert 12.0 < coarse / fine < 20.0


def test_step_rejects_nonpositive_dt():
    with pytest.raises(DomainError):
        step_rk4(ShellState(u=np.zeros(10)), _params(), 0.0)


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatchError):
        goy_rhs(ShellState(u=np.zeros(5)), _params(n_shells=22))


def test_total_energy():
    assert total_energy(ShellState(u=np.zeros(6))) == 0.0
    u = np.zeros(6, dtype=complex)
    u[3] = 2.0
    assert total_energy(ShellState(u=u)) == pytest.approx(2.0)


def test_total_energy_ignores_global_phase(rng):
    state = _random_state(rng, 10)
    rotated = ShellState(u=state.u * np.exp(0.7j))
    assert total_energy(rotated) == pytest.approx(total_energy(state), rel=1e-14)


def test_energy_spectrum():
    grid = ShellGrid(n_shells=8)
    assert np.array_equal(energy_spectrum(ShellState(u=np.zeros(8)), grid).value, np.zeros(8))
    u = np.zeros(8, dtype=complex)
    u[5] = 2.0j
    assert energy_spectrum(ShellState(u=u), grid).value[5] == pytest.approx(1.0 / 16.0)


def test_kolmogorov_amplitudes_give_five_thirds_slope():
    grid = ShellGrid(n_shells=16)
    k = grid.wavenumbers()
    spectrum = energy_spectrum(ShellState(u=k ** (-1.0 / 3.0)), grid)
    assert abs(statfit.loglog_fit(spectrum.k, spectrum.value).slope + 5.0 / 3.0) < 1e-12


def test_unforced_viscous_energy_never_grows():
    params = _params(n_shells=10, nu=1e-2)
    state = initial_state(params.model_copy(update={"init_amplitude": 0.5}), seed=3)
    energy = total_energy(state)
    for step in range(200):
        state = step_rk4(state, params, 1e-3, step)
        new_energy = total_energy(state)
        assert new_energy <= energy * (1.0 + 1e-9)
        energy = new_energy


def test_initial_state_is_seeded():
    params = _params()
    a, b = initial_state(params, 7), initial_state(params, 7)
    assert np.array_equal(a.u, b.u)
    assert not np.array_equal(a.u, initial_state(params, 8).u)
    assert np.allclose(np.abs(a.u), 1e-2 * params.grid.wavenumbers() ** (-1.0 / 3.0))


def test_unforced_inviscid_run_conserves_energy():
    cfg = build_config(
        "goy",
        {"nu": 0.0, "forcing": [], "init_amplitude": 0.1, "spinup_time": 0.0},
        grid={"n_shells": 10},
        integrator={"dt": 1e-3, "t_end": 1.0, "sample_every": 10},
    )
    energy = integrate_goy(cfg).energy.energy
    assert np.max(np.abs(energy / energy[0] - 1.0)) < 1e-6


def test_integration_is_reproducible(small_goy_config):
    first, second = integrate_goy(small_goy_config), integrate_goy(small_goy_config)
    assert np.array_equal(first.spectrum.value, second.spectrum.value)
    assert np.array_equal(first.flux.value, second.flux.value)
    assert np.array_equal(first.final_state.u, second.final_state.u)


def test_sampling_and_transient(small_goy_config):
    result = integrate_goy(small_goy_config)
    # 1000 steps sampled every 10, half discarded.
    assert result.n_steps == 1000
    assert result.spectrum.n_samples == 50
    assert len(result.energy.t) == 101
    assert result.final_state.t == pytest.approx(1.0)
    assert np.all(result.spectrum.value >= 0)


def test_explicit_viscous_term_diverges_at_default_resolution():
    cfg = build_config(
        "goy",
        {"viscous": "explicit"},
        integrator={"t_end": 0.05, "sample_every": 10},
    )
    with pytest.raises(IntegrationDivergedError, match="smaller integrator.dt"):
        integrate_goy(cfg)


def test_run_goy_writes_artifacts(small_goy_config, tmp_path):
    spectrum, flux, energy, manifest = run_goy(small_goy_config, tmp_path / "a")
    assert spectrum.k.size == 10 and flux.k.size == 10
    assert energy.t[0] == 0.0
    assert manifest.model == "goy"
    assert manifest.status.value != "failed"
    for name in ("goy_spectrum.csv", "goy_energy.csv", "fits.json", "manifest.json"):
        assert name in manifest.generated_files
        assert (tmp_path / "a" / name).exists()
    header = (tmp_path / "a" / "goy_spectrum.csv").read_text().splitlines()[0]
    assert header == "n,k,E_avg,Pi_avg,n_samples"

    run_goy(small_goy_config, tmp_path / "b")
    for name in ("goy_spectrum.csv", "goy_energy.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_seed_changes_the_trajectory(small_goy_config):
    other = apply_overrides(small_goy_config, {"seed": 43})
    assert not np.array_equal(
        integrate_goy(small_goy_config).final_state.u, integrate_goy(other).final_state.u
    )


def test_energy_rate_equals_injection_minus_dissipation():
    params = GoyParams(grid=ShellGrid(n_shells=12), nu=1e-3)
    state = _random_state(np.random.default_rng(3), 12, scale=0.1)
    rate = float(np.sum(np.real(np.conj(state.u) * goy_rhs(state, params))))
    expected = energy_injection(state, params) - energy_dissipation(state, params)
    assert rate == pytest.approx(expected, rel=1e-10, abs=1e-15)


def test_injection_vanishes_without_forcing():
    params = _params(nu=1e-3)
    state = _random_state(np.random.default_rng(4), 10)
    assert energy_injection(state, params) == 0.0
    assert energy_dissipation(state, params) > 0.0


def test_spin_up_advances_before_sampling(small_goy_config):
    cfg = apply_overrides(small_goy_config, {"goy.spinup_time": 0.5, "goy.spinup_dt": 1e-3})
    params = cfg.model_params
    op = GoyOperator(params)
    expected = initial_state(params, cfg.seed).u
    for _ in range(500):
        expected = op.advance(expected, 1e-3)
    spun = spin_up(initial_state(params, cfg.seed).u, GoyOperator(params), cfg)
    assert np.array_equal(spun, expected)

    result = integrate_goy(cfg)
    assert result.energy.t[0] == 0.0
    assert result.energy.energy[0] == pytest.approx(total_energy(ShellState(u=expected)))


def test_spin_up_divergence_names_its_step():
    cfg = build_config(
        "goy",
        {"nu": 1e-3, "init_amplitude": 0.1, "spinup_time": 1000.0, "spinup_dt": 10.0},
        grid={"n_shells": 10},
        integrator={"dt": 1e-3, "t_end": 1.0, "sample_every": 10},
    )
    with pytest.raises(IntegrationDivergedError, match="smaller goy.spinup_dt") as excinfo:
        integrate_goy(cfg)
    assert excinfo.value.t < 0


@pytest.mark.parametrize(
    "lo, hi, fit_hi",
    [(3, 12, 11), (3, 8, 8), (2, 5, 4), (4, 7, 6), (0, 2, 2)],
)
def test_slope_window_keeps_whole_periods(lo, hi, fit_hi):
    assert slope_window(lo, hi) == fit_hi
