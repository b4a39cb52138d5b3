"""Poisson log-linear regression by IRLS, dispersion, interval forecasts."""

import math

import numpy as np
import pytest

from sightcast import (
    build_design,
    build_future_design,
    classify_dispersion,
    dispersion_ratio,
    fit_poisson,
    forecast_poisson,
)
from sightcast.exceptions import (
    CollinearityError,
    DegenerateSeriesError,
    InsufficientDataError,
    MissingCovariateError,
)

from conftest import make_series


class TestBuildDesign:
    def test_trend_rows(self):
        X = build_design(make_series([1, 2, 3]))
        assert np.allclose(X, [[1, 0], [1, 1], [1, 2]])

    def test_severity_rows(self):
        X = build_design(make_series([1, 2], severity=[7.5, 7.5]), use_severity=True)
        assert np.allclose(X, [[1, 0, 7.5], [1, 1, 7.5]])

    def test_missing_severity_raises(self):
        with pytest.raises(MissingCovariateError):
            build_design(make_series([1, 2]), use_severity=True)

    def test_intercept_only(self):
        X = build_design(make_series([1, 2, 3]), include_trend=False)
        assert X.shape == (3, 1)
        assert np.allclose(X, 1.0)


class TestFitPoisson:
    def test_intercept_only_is_log_mean(self):
        fit = fit_poisson(make_series([4, 4, 4, 4]), include_trend=False)
        assert fit.coefficients[0] == pytest.approx(math.log(4.0), abs=1e-8)

    def test_log_linear_rate_recovery(self):
        t = np.arange(20)
        counts = np.rint(np.exp(1.0 + 0.1 * t)).astype(int)
        fit = fit_poisson(make_series(counts))
        assert abs(fit.coefficients[0] - 1.0) < 0.1
        assert abs(fit.coefficients[1] - 0.1) < 0.1

    def test_all_zero_series_rejected(self):
        with pytest.raises(DegenerateSeriesError):
            fit_poisson(make_series([0, 0, 0, 0]))

    def test_constant_severity_is_collinear(self):
        series = make_series([3, 4, 5, 6], severity=[7.0, 7.0, 7.0, 7.0])
        with pytest.raises(CollinearityError):
            fit_poisson(series, use_severity=True)

    def test_too_short_for_coefficient_count(self):
        with pytest.raises(InsufficientDataError):
            fit_poisson(make_series([2, 3]))

    def test_loglik_path_non_decreasing(self):
        rng = np.random.default_rng(6)
        for _ in range(10):
            counts = rng.poisson(np.exp(0.8 + 0.05 * np.arange(25)))
            fit = fit_poisson(make_series(counts))
            assert np.all(np.diff(fit.loglik_path) >= 0)

    def test_fitted_means_sum_to_observed_sum(self):
        # canonical-link property with an intercept present
        rng = np.random.default_rng(12)
        counts = rng.poisson(5.0, size=30)
        series = make_series(counts, severity=np.round(rng.uniform(2, 9, 30), 1))
        for kwargs in ({}, {"use_severity": True}):
            fit = fit_poisson(series, **kwargs)
            X = build_design(series, **kwargs)
            mu = np.exp(X @ fit.coefficients)
            assert float(mu.sum()) == pytest.approx(float(counts.sum()), abs=1e-6)

    def test_covariance_symmetric_psd(self):
        fit = fit_poisson(make_series([3, 5, 4, 7, 9, 12, 15, 14]))
        assert np.allclose(fit.cov, fit.cov.T)
        assert np.all(np.linalg.eigvalsh(fit.cov) >= -1e-12)


class TestDispersion:
    def test_exact_fit_has_zero_dispersion(self):
        fit = fit_poisson(make_series([4, 4, 4, 4]), include_trend=False)
        assert dispersion_ratio(fit) == pytest.approx(0.0, abs=1e-12)

    def test_equidispersed_simulation(self):
        rng = np.random.default_rng(2024)
        counts = rng.poisson(6.0, size=400)
        fit = fit_poisson(make_series(counts), include_trend=False)
        assert 0.7 <= dispersion_ratio(fit) <= 1.3

    def test_spiky_data_overdispersed(self):
        fit = fit_poisson(make_series([0, 0, 0, 20, 0, 0, 0, 20]), include_trend=False)
        ratio = dispersion_ratio(fit)
        # hand oracle: mu = 5, Pearson chi2 = 6*5 + 2*45 = 120, df = 7
        assert ratio == pytest.approx(120.0 / 7.0, rel=1e-9)
        assert ratio > 1.2

    def test_classification_thresholds(self):
        assert classify_dispersion(0.79) == "under-dispersed"
        assert classify_dispersion(0.8) == "ok"
        assert classify_dispersion(1.0) == "ok"
        assert classify_dispersion(1.2) == "ok"
        assert classify_dispersion(1.21) == "over-dispersed"


class TestForecastPoisson:
    def test_constant_mean_forecast(self):
        series = make_series([4, 4, 4, 4])
        fit = fit_poisson(series, include_trend=False)
        forecast = forecast_poisson(fit, build_future_design(series, fit, 3))
        assert np.allclose(forecast.points, 4.0, atol=1e-6)

    def test_future_design_continues_trend(self):
        series = make_series([1, 2, 3, 4, 5])
        fit = fit_poisson(series)
        X = build_future_design(series, fit, 3)
        assert np.allclose(X[:, 1], [5.0, 6.0, 7.0])

    def test_future_severity_is_recent_mean(self):
        sev = [1.0, 1.0, 1.0, 2.0, 2.0, 2.0, 2.0, 2.0, 2.0, 3.0]
        series = make_series(list(range(1, 11)), severity=sev)
        fit = fit_poisson(series, use_severity=True)
        X = build_future_design(series, fit, 2)
        # lookback 7: mean of [2,2,2,2,2,2,3]
        assert np.allclose(X[:, 2], np.mean(sev[-7:]))

    def test_positive_slope_gives_increasing_points(self):
        counts = np.rint(np.exp(0.5 + 0.15 * np.arange(15))).astype(int)
        series = make_series(counts)
        fit = fit_poisson(series)
        forecast = forecast_poisson(fit, build_future_design(series, fit, 6))
        assert fit.coefficients[1] > 0
        assert np.all(np.diff(forecast.points) > 0)

    def test_interval_ordering_and_positivity(self):
        rng = np.random.default_rng(9)
        for _ in range(25):
            counts = rng.poisson(rng.uniform(0.5, 20), size=int(rng.integers(5, 40)))
            if not counts.any():
                continue
            series = make_series(counts)
            fit = fit_poisson(series)
            level = float(rng.choice([0.8, 0.9, 0.95, 0.99]))
            forecast = forecast_poisson(fit, build_future_design(series, fit, 7), level=level)
            assert np.all(forecast.lower <= forecast.points)
            assert np.all(forecast.points <= forecast.upper)
            assert np.all(forecast.lower > 0)

    def test_wider_level_widens_intervals(self):
        series = make_series([3, 5, 4, 7, 9, 12, 15, 14])
        fit = fit_poisson(series)
        X = build_future_design(series, fit, 5)
        narrow = forecast_poisson(fit, X, level=0.8)
        wide = forecast_poisson(fit, X, level=0.99)
        assert np.all(wide.upper - wide.lower > narrow.upper - narrow.lower)

    def test_dimension_mismatch_rejected(self):
        series = make_series([4, 4, 4, 4])
        fit = fit_poisson(series)
        with pytest.raises(ValueError):
            forecast_poisson(fit, np.ones((3, 5)))

    def test_zero_horizon_empty_forecast(self):
        series = make_series([4, 4, 4, 4])
        fit = fit_poisson(series)
        forecast = forecast_poisson(fit, build_future_design(series, fit, 0))
        assert len(forecast) == 0
