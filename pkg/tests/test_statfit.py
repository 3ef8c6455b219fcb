import numpy as np
import pytest

from cascade_lab.core import statfit
from cascade_lab.core.errors import FitError
from cascade_lab.models.config_models import PaoParams
from cascade_lab.models.state_models import SpectrumSeries
from cascade_lab.simulators.pao_simulator import pao_flux


def test_log_binned_histogram_boundary_convention():
    hist = statfit.log_binned_histogram([1.0, 10.0, 100.0], 2)
    assert hist.edges == pytest.approx([1.0, 10.0, 100.0])
    assert hist.counts.tolist() == [1, 2]
    assert hist.scheme == "log"


def test_log_binned_histogram_partitions_samples(rng):
    samples = rng.lognormal(size=5000)
    hist = statfit.log_binned_histogram(samples, 17)
    assert hist.counts.sum() == samples.size
    assert np.all(np.diff(hist.edges) > 0)
    assert len(hist.counts) == len(hist.edges) - 1


@pytest.mark.parametrize(
    "samples, n_bins",
    [([], 5), ([2.0, 2.0, 2.0], 5), ([1.0, -1.0, 3.0], 5), ([1.0, 2.0], 1)],
)
def test_log_binned_histogram_rejects_bad_input(samples, n_bins):
    with pytest.raises(FitError):
        statfit.log_binned_histogram(samples, n_bins)


def test_linear_histogram_and_density():
    hist = statfit.linear_histogram([0.5, 1.5, 1.5, 3.0], 3)
    assert hist.edges == pytest.approx([0.0, 1.0, 2.0, 3.0])
    assert hist.counts.tolist() == [1, 2, 1]
    assert np.sum(hist.density() * hist.widths) == pytest.approx(1.0)


def test_empirical_ccdf():
    values, ccdf = statfit.empirical_ccdf([3.0, 1.0, 2.0, 4.0])
    assert values.tolist() == [1.0, 2.0, 3.0, 4.0]
    assert ccdf.tolist() == [1.0, 0.75, 0.5, 0.25]


def test_loglog_fit_recovers_exact_power_law():
    x = np.geomspace(1.0, 1e4, 30)
    fit = statfit.loglog_fit(x, 2.5 * x ** (-5.0 / 3.0))
    assert abs(fit.slope + 5.0 / 3.0) < 1e-12
    assert fit.intercept == pytest.approx(np.log(2.5))
    assert fit.r_squared == pytest.approx(1.0)
    assert fit.n_points == 30
    assert fit.predict(10.0) == pytest.approx(2.5 * 10.0 ** (-5.0 / 3.0))


def test_loglog_fit_on_constant_is_flat():
    x = np.geomspace(1.0, 100.0, 10)
    assert abs(statfit.loglog_fit(x, np.full(10, 4.0)).slope) < 1e-12


def test_loglog_fit_respects_range():
    x = np.geomspace(1.0, 1000.0, 31)
    y = np.where(x < 10.0, x**-1.0, 10.0 * x**-2.0)
    fit = statfit.loglog_fit(x, y, fit_range=(10.0, 1000.0))
    assert fit.slope == pytest.approx(-2.0, abs=1e-12)
    assert fit.range_used[0] >= 10.0


def test_scaling_y_changes_only_the_intercept():
    x = np.geomspace(1.0, 50.0, 12)
    y = x**-1.3 * (1.0 + 0.1 * np.sin(x))
    base = statfit.loglog_fit(x, y)
    scaled = statfit.loglog_fit(x, 7.0 * y)
    assert scaled.slope == pytest.approx(base.slope, abs=1e-12)
    assert scaled.intercept - base.intercept == pytest.approx(np.log(7.0))


def test_noisy_power_law_calibration():
    rng = np.random.default_rng(99)
    x = np.geomspace(1.0, 100.0, 20)
    hits = 0
    for _ in range(1000):
        y = 3.0 * x**-2.0 * (1.0 + rng.normal(0.0, 0.01, x.size))
        hits += abs(statfit.loglog_fit(x, y).slope + 2.0) <= 0.05
    assert hits >= 950


def test_fit_errors():
    with pytest.raises(FitError):
        statfit.loglog_fit([1.0, 2.0], [1.0, 2.0])
    with pytest.raises(FitError):
        statfit.loglog_fit([1.0, 2.0, 3.0], [1.0, 0.0, 2.0])
    with pytest.raises(FitError):
        statfit.semilog_fit([1.0, 2.0, 3.0], [1.0, -1.0, 2.0])
    with pytest.raises(FitError):
        statfit.loglog_fit(np.geomspace(1, 10, 5), np.ones(5), fit_range=(20.0, 30.0))


def test_semilog_fit_exact_and_flat():
    x = np.linspace(0.0, 3.0, 25)
    fit = statfit.semilog_fit(x, np.exp(-2.0 * x))
    assert abs(fit.slope + 2.0) < 1e-12
    assert fit.kind == "semilog"
    assert abs(statfit.semilog_fit(x, np.full(25, 3.0)).slope) < 1e-12


def test_semilog_fit_measures_pao_rolloff():
    p = PaoParams()
    k = np.geomspace(p.k_d, 3.0 * p.k_d, 15)
    fit = statfit.semilog_fit(k ** (4.0 / 3.0), pao_flux(k, p))
    assert fit.slope == pytest.approx(-1.5 * p.k_ko * p.k_d ** (-4.0 / 3.0), rel=1e-9)


def _series(flux):
    flux = np.asarray(flux, dtype=float)
    return SpectrumSeries(k=2.0 ** np.arange(flux.size), value=flux)


def test_inertial_range_on_constant_flux_skips_forced_shells():
    assert statfit.inertial_range_select(_series(np.ones(10)), forced_shells=[0, 1]) == (2, 9)


def test_inertial_range_picks_the_longest_plateau():
    flux = [5.0, 1.0, 1.02, 0.98, 1.01, 0.2, 1.0, 1.0, 1.0, 1.0, 0.99, 0.1]
    assert statfit.inertial_range_select(_series(flux), forced_shells=[0]) == (6, 10)


def test_inertial_range_ignores_a_long_dissipation_tail():
    tail = 0.4 * 0.5 ** np.arange(10)
    flux = np.concatenate([[0.3, 0.6], np.ones(8), tail])
    assert np.median(flux[2:]) < 0.5
    assert statfit.inertial_range_select(_series(flux), forced_shells=[0, 1]) == (2, 9)


def test_inertial_range_without_plateau_fails():
    with pytest.raises(FitError):
        statfit.inertial_range_select(_series(0.5 ** np.arange(10)))


def test_inertial_range_is_deterministic():
    flux = _series([3.0, 1.0, 1.05, 0.95, 1.0, 1.0, 0.5])
    assert statfit.inertial_range_select(flux, [0]) == statfit.inertial_range_select(flux, [0])
