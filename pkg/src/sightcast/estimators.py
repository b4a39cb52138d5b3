"""Scikit-learn style wrappers around the forecasting models.

Each forecaster is constructed with hyperparameters only, fitted on a
CountSeries, and queried with ``predict(horizon)`` which returns a
:class:`~sightcast.series.Forecast`. Hyperparameters are introspectable
through ``get_params`` / ``set_params`` so the wrappers compose with
scikit-learn tooling (cloning, grid search over cutoffs, and so on).
Fitted state lives in trailing-underscore attributes.
"""

from __future__ import annotations

from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .adaptive import DEFAULT_HORIZON, DEFAULT_WINDOW, adaptive_forecast
from .arimax import DEFAULT_ORDER, fit_arimax, forecast_arimax
from .growth import fit_decay, fit_logistic, forecast_growth
from .poisson import build_future_design, fit_poisson, forecast_poisson
from .series import CountSeries, Forecast, check_count_series


class _CountSeriesForecaster(BaseEstimator):
    """Shared fit bookkeeping; subclasses implement _fit and _predict."""

    def fit(self, series: CountSeries) -> "_CountSeriesForecaster":
        series = check_count_series(series)
        self._fit(series)
        self.series_ = series
        self.n_observed_ = len(series)
        return self

    def _check_fitted(self):
        if not hasattr(self, "series_"):
            raise NotFittedError(
                f"{type(self).__name__} is not fitted yet; call fit(series) first"
            )

    def predict(self, horizon: int = DEFAULT_HORIZON) -> Forecast:
        self._check_fitted()
        return self._predict(horizon)


class DecayForecaster(_CountSeriesForecaster):
    """Exponential decay a * exp(-b t) + c fitted by least squares."""

    def _fit(self, series):
        self.fit_result_ = fit_decay(series)

    def _predict(self, horizon):
        return forecast_growth(self.fit_result_, "decay", self.n_observed_, horizon)


class LogisticForecaster(_CountSeriesForecaster):
    """Saturating logistic curve L / (1 + exp(-k (t - t0)))."""

    def _fit(self, series):
        self.fit_result_ = fit_logistic(series)

    def _predict(self, horizon):
        return forecast_growth(self.fit_result_, "logistic", self.n_observed_, horizon)


class PoissonForecaster(_CountSeriesForecaster):
    """Poisson log-linear regression on time (and optionally severity)."""

    def __init__(self, use_severity: bool = False, include_trend: bool = True):
        self.use_severity = use_severity
        self.include_trend = include_trend

    def _fit(self, series):
        self.fit_result_ = fit_poisson(
            series, use_severity=self.use_severity, include_trend=self.include_trend
        )

    def _predict(self, horizon):
        return self.predict_interval(horizon)

    def predict_interval(self, horizon: int = DEFAULT_HORIZON, level: float = 0.95) -> Forecast:
        self._check_fitted()
        future = build_future_design(self.series_, self.fit_result_, horizon)
        return forecast_poisson(self.fit_result_, future, level=level)


class ArimaxForecaster(_CountSeriesForecaster):
    """ARIMAX on log(1 + counts) estimated by conditional least squares."""

    def __init__(self, order=DEFAULT_ORDER, use_severity: bool = False, trend: str = "c"):
        self.order = order
        self.use_severity = use_severity
        self.trend = trend

    def _fit(self, series):
        self.fit_result_ = fit_arimax(
            series, order=self.order, use_severity=self.use_severity, trend=self.trend
        )

    def _predict(self, horizon):
        return self.predict_interval(horizon)

    def predict_interval(self, horizon: int = DEFAULT_HORIZON, level: float = 0.95) -> Forecast:
        self._check_fitted()
        return forecast_arimax(self.fit_result_, self.series_, horizon, level=level)


class AdaptiveForecaster(_CountSeriesForecaster):
    """Slope-driven switch between logistic growth and exponential decay.

    The trend decision is made at predict time from the fitted series; the
    resulting TrendReport is stored as ``report_``.
    """

    def __init__(self, window: int = DEFAULT_WINDOW):
        self.window = window

    def _fit(self, series):
        pass

    def _predict(self, horizon):
        report, forecast = adaptive_forecast(self.series_, window=self.window, horizon=horizon)
        self.report_ = report
        return forecast
