"""Cutoff-based holdout evaluation of the forecasting models.

A backtest removes every bucket after the cutoff date, fits the requested
model on what remains, forecasts over the held-out span, and scores point
accuracy (MAE, RMSE) plus interval coverage where the model produces
intervals. Per-step errors are signed (prediction minus actual) so a
systematic overshoot shows up as a positive mean error.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import date, datetime

import numpy as np

from .adaptive import adaptive_forecast
from .arimax import fit_arimax, forecast_arimax
from .exceptions import CutoffRangeError, EmptySeriesError, SightcastError
from .growth import fit_decay, fit_logistic, forecast_growth
from .poisson import build_future_design, fit_poisson, forecast_poisson
from .series import CountSeries, Forecast, check_horizon, check_level

BACKTEST_MODELS = ("decay", "logistic", "poisson", "arimax", "adaptive")

DEFAULT_HORIZON = 10


@dataclass(frozen=True, eq=False)
class Score:
    """Accuracy of one forecast against one holdout window."""

    mae: float
    rmse: float
    interval_coverage: float | None
    per_step_errors: np.ndarray

    def __len__(self) -> int:
        return self.per_step_errors.size


@dataclass(frozen=True, eq=False)
class BacktestReport:
    """Everything one backtest run produced, JSON-serializable via as_dict."""

    cutoff: date
    model: str
    mae: float
    rmse: float
    interval_coverage: float | None
    horizon: int
    per_step_errors: np.ndarray
    chosen: str | None = None

    def as_dict(self) -> dict:
        out = {
            "cutoff": self.cutoff.isoformat(),
            "model": self.model,
            "mae": self.mae,
            "rmse": self.rmse,
        }
        if self.interval_coverage is not None:
            out["interval_coverage"] = self.interval_coverage
        out["horizon"] = self.horizon
        out["per_step_errors"] = list(self.per_step_errors)
        if self.chosen is not None:
            out["chosen"] = self.chosen
        return out


def _as_date(value) -> date:
    if isinstance(value, datetime):
        return value.date()
    if isinstance(value, date):
        return value
    raise TypeError(f"cutoff must be a date, got {type(value).__name__}")


def split_at_cutoff(series: CountSeries, cutoff) -> tuple[CountSeries, CountSeries]:
    """Split into train (bucket date <= cutoff) and holdout (the rest).

    The cutoff day itself stays in the training side. It must fall inside
    the series range, leaving at least one bucket on each side.
    """
    cutoff = _as_date(cutoff)
    if cutoff < series.start:
        raise CutoffRangeError(
            f"cutoff {cutoff.isoformat()} precedes the series start {series.start.isoformat()}"
        )
    if cutoff >= series.end:
        raise CutoffRangeError(
            f"cutoff {cutoff.isoformat()} leaves no holdout (series ends {series.end.isoformat()})"
        )
    n_train = sum(1 for d in series.dates() if d <= cutoff)
    return series.slice(0, n_train), series.slice(n_train, len(series))


def score_forecast(forecast: Forecast, holdout: CountSeries) -> Score:
    """MAE/RMSE and interval coverage over the overlapping steps."""
    if len(holdout) == 0:
        raise EmptySeriesError("holdout is empty; nothing to score")
    n = min(len(forecast), len(holdout))
    if n == 0:
        raise EmptySeriesError("forecast is empty; nothing to score")
    actual = holdout.counts[:n].astype(float)
    points = forecast.points[:n]
    errors = points - actual
    coverage = None
    if forecast.has_intervals:
        inside = (forecast.lower[:n] <= actual) & (actual <= forecast.upper[:n])
        coverage = float(np.mean(inside))
    return Score(
        mae=float(np.mean(np.abs(errors))),
        rmse=float(np.sqrt(np.mean(errors**2))),
        interval_coverage=coverage,
        per_step_errors=errors,
    )


def run_backtest(
    series: CountSeries,
    model: str,
    cutoff,
    horizon: int = DEFAULT_HORIZON,
    level: float = 0.95,
    use_severity: bool = False,
) -> BacktestReport:
    """Fit on the train side only, forecast the holdout span, and score it."""
    if model not in BACKTEST_MODELS:
        raise ValueError(f"model must be one of {BACKTEST_MODELS}, got {model!r}")
    horizon = check_horizon(horizon, minimum=1)
    check_level(level)
    train, holdout = split_at_cutoff(series, cutoff)
    steps = min(horizon, len(holdout))

    chosen = None
    try:
        if model == "decay":
            forecast = forecast_growth(fit_decay(train), "decay", len(train), steps)
        elif model == "logistic":
            forecast = forecast_growth(fit_logistic(train), "logistic", len(train), steps)
        elif model == "poisson":
            fit = fit_poisson(train, use_severity=use_severity)
            forecast = forecast_poisson(fit, build_future_design(train, fit, steps), level=level)
        elif model == "arimax":
            fit = fit_arimax(train, use_severity=use_severity)
            forecast = forecast_arimax(fit, train, steps, level=level)
        else:
            report, forecast = adaptive_forecast(train, horizon=steps)
            chosen = forecast.model
    except SightcastError as exc:
        raise type(exc)(f"{model} model: {exc}") from exc

    score = score_forecast(forecast, holdout)
    return BacktestReport(
        cutoff=_as_date(cutoff),
        model=model,
        mae=score.mae,
        rmse=score.rmse,
        interval_coverage=score.interval_coverage,
        horizon=len(score),
        per_step_errors=score.per_step_errors,
        chosen=chosen,
    )
