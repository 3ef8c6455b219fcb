"""Histograms and exponent extraction.

Every scaling claim in the lab is checked with these few functions: ordinary
least squares on (ln x, ln y) for power laws and on (x, ln y) for exponentials.
"""

import logging
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from cascade_lab.core.errors import FitError
from cascade_lab.models.state_models import FitResult, Histogram, SpectrumSeries

logger = logging.getLogger(__name__)

FitRange = Optional[Tuple[float, float]]

# Shells carrying less than this fraction of the peak flux are left out of the
# plateau reference (dissipation-range tail).
CARRYING_FRACTION = 0.5


def log_binned_histogram(samples: Sequence[float], n_bins: int) -> Histogram:
    """Histogram with geometric bin edges spanning [min, max].

    Bins are half-open [lo, hi) except the last, which is closed, so the
    counts always add up to the number of samples.

    Raises:
        FitError: On empty input, nonpositive samples, n_bins < 2, or when all
            samples are equal (no range to bin)
    """
    data = np.asarray(samples, dtype=float).ravel()
    if data.size == 0:
        raise FitError("Cannot bin an empty sample")
    if n_bins < 2:
        raise FitError(f"n_bins must be >= 2, got {n_bins}")
    if np.any(data <= 0):
        raise FitError("Log binning needs strictly positive samples")
    lo, hi = float(data.min()), float(data.max())
    if lo == hi:
        raise FitError(f"All samples equal {lo}; log bins have a single-point range")

    edges = np.geomspace(lo, hi, n_bins + 1)
    edges[0], edges[-1] = lo, hi
    counts, _ = np.histogram(data, bins=edges)
    return Histogram(edges=edges, counts=counts, scheme="log")


def linear_histogram(
    samples: Sequence[float],
    n_bins: int,
    lo: Optional[float] = None,
    hi: Optional[float] = None,
) -> Histogram:
    """Histogram with evenly spaced edges on [lo, hi] (defaults: [0, max])."""
    data = np.asarray(samples, dtype=float).ravel()
    if data.size == 0:
        raise FitError("Cannot bin an empty sample")
    if n_bins < 2:
        raise FitError(f"n_bins must be >= 2, got {n_bins}")
    lo = 0.0 if lo is None else float(lo)
    hi = float(data.max()) if hi is None else float(hi)
    if hi <= lo:
        hi = lo + (2.0 * abs(hi) if hi != 0 else 1.0)
    edges = np.linspace(lo, hi, n_bins + 1)
    counts, _ = np.histogram(data, bins=edges)
    return Histogram(edges=edges, counts=counts, scheme="linear")


def empirical_ccdf(samples: Sequence[float]) -> Tuple[np.ndarray, np.ndarray]:
    """Sorted samples and the fraction of samples >= each of them."""
    values = np.sort(np.asarray(samples, dtype=float).ravel())
    n = values.size
    ccdf = (n - np.arange(n)) / n
    return values, ccdf


def loglog_fit(x, y, fit_range: FitRange = None) -> FitResult:
    """Fit y = C x^slope by least squares on (ln x, ln y).

    Args:
        x, y: data arrays of equal length
        fit_range: inclusive (lo, hi) window on x; None uses every point

    Raises:
        FitError: Fewer than 3 points in range, or nonpositive data in range
    """
    xs, ys = _select(x, y, fit_range)
    if np.any(xs <= 0) or np.any(ys <= 0):
        raise FitError("Log-log fit needs positive x and y on the fitted range")
    return _ols("loglog", np.log(xs), np.log(ys), xs)


def semilog_fit(x, y, fit_range: FitRange = None) -> FitResult:
    """Fit y = C exp(slope * x) by least squares on (x, ln y)."""
    xs, ys = _select(x, y, fit_range)
    if np.any(ys <= 0):
        raise FitError("Semi-log fit needs positive y on the fitted range")
    return _ols("semilog", xs, np.log(ys), xs)


def inertial_range_select(
    series: SpectrumSeries,
    forced_shells: Sequence[int] = (),
    tolerance: float = 0.1,
    min_shells: int = 4,
) -> Tuple[int, int]:
    """Pick the widest run of shells whose flux sits on the median plateau.

    A shell qualifies when |flux / median - 1| < tolerance. The median is taken
    over the unforced shells that carry at least CARRYING_FRACTION of the peak
    unforced flux; the dissipation tail is left out. Forced shells never
    qualify.

    Returns:
        Inclusive (lo, hi) shell indices of the longest qualifying run

    Raises:
        FitError: If fewer than min_shells contiguous shells qualify
    """
    flux = np.asarray(series.value, dtype=float)
    unforced = np.ones(flux.size, dtype=bool)
    for shell in forced_shells:
        if 0 <= shell < flux.size:
            unforced[shell] = False
    if not unforced.any():
        raise FitError("No unforced shells to select an inertial range from")

    if not np.all(np.isfinite(flux[unforced])):
        raise FitError("Non-finite flux; there is no plateau to select")
    peak = float(flux[unforced].max())
    if peak <= 0.0:
        raise FitError("No positive flux; there is no plateau to select")
    carrying = unforced & (flux >= CARRYING_FRACTION * peak)
    reference = float(np.median(flux[carrying]))

    qualifies = unforced & (np.abs(flux / reference - 1.0) < tolerance)

    best: Tuple[int, int] = (0, -1)
    start = None
    for i, ok in enumerate(np.append(qualifies, False)):
        if ok and start is None:
            start = i
        elif not ok and start is not None:
            if i - start > best[1] - best[0] + 1:
                best = (start, i - 1)
            start = None

    width = best[1] - best[0] + 1
    if width < min_shells:
        raise FitError(
            f"No inertial window: widest flux plateau has {max(width, 0)} shells "
            f"(need {min_shells}) at tolerance {tolerance}; widen it explicitly"
        )
    logger.debug(f"Inertial window shells {best[0]}..{best[1]} (median flux {reference:.4g})")
    return best


def _select(x, y, fit_range: FitRange) -> Tuple[np.ndarray, np.ndarray]:
    xs = np.asarray(x, dtype=float).ravel()
    ys = np.asarray(y, dtype=float).ravel()
    if xs.shape != ys.shape:
        raise FitError(f"x and y differ in length ({xs.size} vs {ys.size})")
    if fit_range is not None:
        lo, hi = fit_range
        mask = (xs >= lo) & (xs <= hi)
        xs, ys = xs[mask], ys[mask]
    if xs.size < 3:
        raise FitError(f"Need at least 3 points to fit, got {xs.size}")
    return xs, ys


def _ols(kind: str, u: np.ndarray, v: np.ndarray, xs: np.ndarray) -> FitResult:
    if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v))):
        raise FitError("Non-finite values in fitted range")
    try:
        result = stats.linregress(u, v)
    except ValueError as e:
        raise FitError(f"Degenerate abscissa: {e}") from e
    r_squared = float(min(max(result.rvalue**2, 0.0), 1.0))
    return FitResult(
        kind=kind,
        slope=float(result.slope),
        intercept=float(result.intercept),
        slope_stderr=float(result.stderr),
        r_squared=r_squared,
        range_used=(float(xs.min()), float(xs.max())),
        n_points=int(xs.size),
    )
