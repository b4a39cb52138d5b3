"""Poisson log-linear regression on sighting counts, fitted by IRLS.

The linear predictor is intercept + time trend + optional severity; the log
link keeps every forecast strictly positive. Each IRLS step is safeguarded
by step-halving so the log-likelihood never decreases. The Pearson
dispersion ratio is reported so callers can distrust intervals on over- or
under-dispersed data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import NormalDist

import numpy as np

from .exceptions import (
    CollinearityError,
    DegenerateSeriesError,
    InsufficientDataError,
    NumericError,
)
from .series import CountSeries, Forecast, check_count_series, check_horizon, check_level

DEFAULT_MAX_ITER = 100
DEFAULT_TOL = 1e-10

COND_LIMIT = 1e12

UNDER_DISPERSION_LIMIT = 0.8
OVER_DISPERSION_LIMIT = 1.2

SEVERITY_LOOKBACK = 7  # buckets averaged for the assumed future severity


@dataclass(frozen=True, eq=False)
class PoissonFit:
    """Fitted coefficients with covariance and dispersion diagnostics.

    ``loglik_path`` records the log-likelihood after the initial guess and
    each accepted IRLS step; it is non-decreasing by construction.
    """

    coefficients: np.ndarray
    cov: np.ndarray
    log_likelihood: float
    dispersion: float
    n: int
    include_trend: bool
    use_severity: bool
    iterations: int
    converged: bool
    loglik_path: np.ndarray


def build_design(
    series: CountSeries, use_severity: bool = False, include_trend: bool = True
) -> np.ndarray:
    """Design matrix: intercept column, bucket index, optional severity."""
    check_count_series(series, require_severity=use_severity)
    n = len(series)
    columns = [np.ones(n)]
    if include_trend:
        columns.append(np.arange(n, dtype=float))
    if use_severity:
        columns.append(series.severity.astype(float))
    return np.column_stack(columns)


def poisson_log_likelihood(y: np.ndarray, eta: np.ndarray) -> float:
    """Poisson log-likelihood of counts y under log-means eta."""
    mu = np.exp(eta)
    if not np.all(np.isfinite(mu)):
        return -math.inf
    constant = sum(math.lgamma(v + 1.0) for v in y)
    return float(y @ eta - mu.sum() - constant)


def fit_poisson(
    series: CountSeries,
    use_severity: bool = False,
    include_trend: bool = True,
    max_iter: int = DEFAULT_MAX_ITER,
    tol: float = DEFAULT_TOL,
) -> PoissonFit:
    """Fit the Poisson regression by iteratively reweighted least squares.

    Iterates until the relative log-likelihood change drops below ``tol``
    or ``max_iter`` is reached. Dispersion is Pearson chi-squared over
    n - p; the coefficient covariance is inv(X'WX) at convergence.
    """
    y = check_count_series(series, require_severity=use_severity).counts.astype(float)
    if not np.any(y > 0):
        raise DegenerateSeriesError("cannot fit a Poisson rate to an all-zero series")
    X = build_design(series, use_severity=use_severity, include_trend=include_trend)
    n, p = X.shape
    if n < p + 1:
        raise InsufficientDataError(f"need at least {p + 1} buckets for {p} coefficients, got {n}")
    if np.linalg.cond(X) > COND_LIMIT:
        raise CollinearityError(
            "design matrix is collinear (constant severity duplicates the intercept); "
            "consider dropping the severity covariate"
        )

    beta = np.zeros(p)
    beta[0] = math.log(y.mean())
    loglik = poisson_log_likelihood(y, X @ beta)
    path = [loglik]
    converged = False
    iterations = 0

    for iterations in range(1, max_iter + 1):
        eta = X @ beta
        mu = np.exp(eta)
        if not np.all(np.isfinite(mu)) or np.any(mu <= 0):
            raise NumericError("IRLS working weights are not finite")
        working = eta + (y - mu) / mu
        if not np.all(np.isfinite(working)):
            raise NumericError("IRLS working response is not finite")
        weighted = X * mu[:, None]
        try:
            proposal = np.linalg.solve(X.T @ weighted, weighted.T @ working)
        except np.linalg.LinAlgError:
            raise NumericError("weighted normal equations are singular") from None

        # Step-halving keeps the log-likelihood monotone even when the raw
        # Fisher-scoring step overshoots.
        step = proposal - beta
        new_loglik = poisson_log_likelihood(y, X @ (beta + step))
        halvings = 0
        while new_loglik < loglik and halvings < 30:
            step /= 2.0
            new_loglik = poisson_log_likelihood(y, X @ (beta + step))
            halvings += 1
        if new_loglik < loglik:
            break  # no ascent left at this scale; accept the current optimum
        beta = beta + step
        path.append(new_loglik)
        change = abs(new_loglik - loglik) / max(abs(new_loglik), 1.0)
        loglik = new_loglik
        if change < tol:
            converged = True
            break

    mu = np.exp(X @ beta)
    weighted = X * mu[:, None]
    try:
        cov = np.linalg.inv(X.T @ weighted)
    except np.linalg.LinAlgError:
        raise NumericError("information matrix is singular at the optimum") from None
    pearson = float(((y - mu) ** 2 / mu).sum())
    return PoissonFit(
        coefficients=beta,
        cov=(cov + cov.T) / 2.0,
        log_likelihood=loglik,
        dispersion=pearson / (n - p),
        n=n,
        include_trend=include_trend,
        use_severity=use_severity,
        iterations=iterations,
        converged=converged,
        loglik_path=np.asarray(path),
    )


def dispersion_ratio(fit: PoissonFit) -> float:
    """Pearson chi-squared over residual degrees of freedom; ~1 when Poisson holds."""
    return fit.dispersion


def classify_dispersion(ratio: float) -> str:
    if ratio < UNDER_DISPERSION_LIMIT:
        return "under-dispersed"
    if ratio > OVER_DISPERSION_LIMIT:
        return "over-dispersed"
    return "ok"


def build_future_design(series: CountSeries, fit: PoissonFit, horizon: int) -> np.ndarray:
    """Design rows for the next ``horizon`` buckets.

    The severity column, when used, is filled with the mean severity of the
    last 7 observed buckets, mirroring how severity barely moves after
    publication.
    """
    horizon = check_horizon(horizon)
    n = len(series)
    columns = [np.ones(horizon)]
    if fit.include_trend:
        columns.append(n + np.arange(horizon, dtype=float))
    if fit.use_severity:
        check_count_series(series, require_severity=True)
        recent = series.severity[-SEVERITY_LOOKBACK:]
        columns.append(np.full(horizon, float(np.mean(recent))))
    return np.column_stack(columns)


def forecast_poisson(fit: PoissonFit, future_design: np.ndarray, level: float = 0.95) -> Forecast:
    """Point and interval forecasts from fitted coefficients.

    Intervals come from the delta method on the linear predictor,
    exponentiated, so point and bounds are all strictly positive.
    """
    check_level(level)
    X = np.atleast_2d(np.asarray(future_design, dtype=float))
    p = fit.coefficients.size
    if X.shape[1] != p:
        raise ValueError(f"future design has {X.shape[1]} columns, expected {p}")
    eta = X @ fit.coefficients
    variance = np.maximum(np.einsum("ij,jk,ik->i", X, fit.cov, X), 0.0)
    margin = NormalDist().inv_cdf(0.5 + level / 2.0) * np.sqrt(variance)
    # clip the exponent away from both exp() overflow (inf breaks JSON output)
    # and underflow to 0.0, which would break the strictly positive bounds
    def bounded_exp(z):
        return np.exp(np.clip(z, -700.0, 709.0))

    return Forecast(
        points=bounded_exp(eta),
        lower=bounded_exp(eta - margin),
        upper=bounded_exp(eta + margin),
        model="poisson",
    )
