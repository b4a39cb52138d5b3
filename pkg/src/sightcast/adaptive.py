"""Slope-based switching between the logistic and decay growth models.

The rule is deliberately blunt: fit an ordinary least-squares line through
the most recent buckets and pick logistic when the slope is positive, decay
otherwise (zero counts as "not growing"). A degenerate logistic fit falls
back to decay, which behaves sensibly on flat or near-zero tails.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import (
    DegenerateSeriesError,
    InsufficientDataError,
    ModelFailureError,
    NumericError,
)
from .growth import (
    MIN_FIT_LENGTH,
    fit_decay,
    fit_logistic,
    forecast_growth,
)
from .series import CountSeries, Forecast, check_count_series, check_horizon

DEFAULT_WINDOW = 7  # one week of daily buckets
DEFAULT_HORIZON = 10


@dataclass(frozen=True)
class TrendReport:
    """What the selector saw and what it picked.

    ``chosen`` is the slope decision; when the logistic fit degenerates the
    forecast silently comes from decay instead and ``fell_back`` says so.
    """

    slope: float
    window: int
    chosen: str
    fell_back: bool = False

    def __post_init__(self):
        if self.window < 2:
            raise ValueError(f"window must be >= 2, got {self.window}")
        if self.chosen not in ("logistic", "decay"):
            raise ValueError(f"chosen must be 'logistic' or 'decay', got {self.chosen!r}")


def trend_slope(series: CountSeries, window: int = DEFAULT_WINDOW) -> float:
    """Least-squares slope of counts per bucket over the trailing window."""
    if window < 2:
        raise ValueError(f"window must be >= 2, got {window}")
    check_count_series(series, min_length=2)
    y = series.counts[-window:].astype(float)
    x = np.arange(y.size, dtype=float)
    x_dev = x - x.mean()
    return float(np.dot(x_dev, y - y.mean()) / np.dot(x_dev, x_dev))


def select_model(slope: float) -> str:
    """Logistic growth iff the slope is strictly positive."""
    if not np.isfinite(slope):
        raise ValueError(f"slope must be finite, got {slope!r}")
    return "logistic" if slope > 0 else "decay"


def adaptive_forecast(
    series: CountSeries,
    window: int = DEFAULT_WINDOW,
    horizon: int = DEFAULT_HORIZON,
) -> tuple[TrendReport, Forecast]:
    """Pick a growth model from the recent slope, fit it, and extrapolate."""
    check_count_series(series, min_length=MIN_FIT_LENGTH)
    horizon = check_horizon(horizon, minimum=1)
    slope = trend_slope(series, window)
    chosen = select_model(slope)
    used_window = min(window, len(series))

    fell_back = False
    if chosen == "logistic":
        try:
            fit = fit_logistic(series)
            kind = "logistic"
        except (DegenerateSeriesError, NumericError, ModelFailureError, InsufficientDataError) as logistic_error:
            try:
                fit = fit_decay(series)
                kind = "decay"
                fell_back = True
            except Exception as decay_error:
                raise ModelFailureError(
                    f"logistic fit failed ({logistic_error}) and the decay fallback "
                    f"also failed ({decay_error})"
                ) from decay_error
    else:
        fit = fit_decay(series)
        kind = "decay"

    report = TrendReport(slope=slope, window=used_window, chosen=chosen, fell_back=fell_back)
    forecast = forecast_growth(fit, kind, n_observed=len(series), horizon=horizon)
    return report, forecast
