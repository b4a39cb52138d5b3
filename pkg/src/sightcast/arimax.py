"""Non-seasonal ARIMAX on log(1 + count) with an optional severity regressor.

The model is a regression with ARMA errors on the (optionally differenced)
log scale: z_t = c + beta * severity_t + u_t, where phi(B) u_t =
(1 + theta_1 B + ...) e_t. Estimation is conditional least squares: the
first p observations are conditioned on, pre-sample innovations are zero,
and the one-step-ahead squared innovations are minimized with the shared
Levenberg-Marquardt engine. Forecast intervals use the psi-weight variance
recursion on the log scale and are back-transformed through exp(x) - 1
clipped at zero, which is what keeps predicted counts nonnegative.
"""

from __future__ import annotations

from dataclasses import dataclass
from statistics import NormalDist

import numpy as np

from .curvefit import minimize_least_squares
from .exceptions import CollinearityError, InsufficientDataError, NumericError
from .series import (
    CountSeries,
    Forecast,
    RealSeries,
    check_count_series,
    check_horizon,
    check_level,
    log1p_transform,
)

DEFAULT_ORDER = (1, 1, 1)
DEFAULT_MAX_ITER = 500
DEFAULT_TOL = 1e-10

COND_LIMIT = 1e12

LOW_DATA_THRESHOLD = 30  # observations; fewer earns a reliability warning

SEVERITY_LOOKBACK = 7

TRENDS = ("c", "n")


@dataclass(frozen=True)
class ArimaOrder:
    """(p, d, q) with p, q <= 3 and d <= 1; seasonal terms are unsupported."""

    p: int
    d: int
    q: int

    def __post_init__(self):
        if not 0 <= self.p <= 3:
            raise ValueError(f"p must lie in 0..3, got {self.p}")
        if self.d not in (0, 1):
            raise ValueError(f"d must be 0 or 1, got {self.d}")
        if not 0 <= self.q <= 3:
            raise ValueError(f"q must lie in 0..3, got {self.q}")

    @classmethod
    def coerce(cls, value) -> "ArimaOrder":
        if isinstance(value, ArimaOrder):
            return value
        p, d, q = (int(v) for v in value)
        return cls(p, d, q)

    def as_tuple(self) -> tuple[int, int, int]:
        return (self.p, self.d, self.q)


@dataclass(frozen=True, eq=False)
class ArimaxFit:
    """Conditional least-squares estimates on the log scale."""

    order: ArimaOrder
    ar: np.ndarray
    ma: np.ndarray
    exog_coef: float | None
    intercept: float
    sigma2: float
    n_effective: int
    low_data_warning: bool
    trend: str
    use_severity: bool
    iterations: int
    converged: bool
    sse_path: np.ndarray


def difference(series: RealSeries, d: int) -> RealSeries:
    """First differences for d=1, identity for d=0; start shifts with d."""
    if d not in (0, 1):
        raise ValueError(f"d must be 0 or 1, got {d}")
    if len(series) < d + 1:
        raise InsufficientDataError(f"series of length {len(series)} cannot be differenced {d}x")
    if d == 0:
        return series
    severity = None if series.severity is None else series.severity[1:]
    return RealSeries(
        series.start + series.step, series.granularity, np.diff(series.values), severity
    )


def undifference(diffed: RealSeries, anchors) -> RealSeries:
    """Exact cumulative inverse of :func:`difference` given the anchor value(s)."""
    anchors = np.atleast_1d(np.asarray(anchors, dtype=float))
    if anchors.size == 0:
        return diffed
    if anchors.size != 1:
        raise ValueError(f"expected at most one anchor (d <= 1), got {anchors.size}")
    values = np.concatenate([anchors, anchors[0] + np.cumsum(diffed.values)])
    return RealSeries(diffed.start - diffed.step, diffed.granularity, values)


def _innovations(u: np.ndarray, ar: np.ndarray, ma: np.ndarray) -> np.ndarray:
    """One-step-ahead innovations conditioned on the first p values.

    Pre-sample innovations are zero; the returned vector covers t = p..m-1.
    """
    m = u.size
    p, q = ar.size, ma.size
    if q == 0:
        e = u[p:].copy()
        for i in range(p):
            e -= ar[i] * u[p - 1 - i : m - 1 - i]
        return e
    e = np.zeros(m)
    for t in range(p, m):
        acc = u[t]
        for i in range(p):
            acc -= ar[i] * u[t - 1 - i]
        for j in range(min(q, t)):
            acc -= ma[j] * e[t - 1 - j]
        e[t] = acc
    return e[p:]


def _regression_columns(series: CountSeries, order: ArimaOrder, trend: str, use_severity: bool, m: int):
    columns = []
    if trend == "c":
        columns.append(np.ones(m))
    if use_severity:
        columns.append(series.severity[order.d :].astype(float))
    if not columns:
        return np.zeros((m, 0))
    return np.column_stack(columns)


def _split_params(params: np.ndarray, k_reg: int, p: int, q: int):
    reg = params[:k_reg]
    ar = params[k_reg : k_reg + p]
    ma = params[k_reg + p : k_reg + p + q]
    return reg, ar, ma


def fit_arimax(
    series: CountSeries,
    order=DEFAULT_ORDER,
    use_severity: bool = False,
    trend: str = "c",
    max_iter: int = DEFAULT_MAX_ITER,
    tol: float = DEFAULT_TOL,
) -> ArimaxFit:
    """Estimate ARIMAX(p,d,q) on log(1 + counts) by conditional least squares.

    ``trend="c"`` includes a mean term; ``trend="n"`` drops it, which makes
    a pure AR(1) fit coincide with the closed-form lag-1 regression. The
    low-data warning fires below 30 observations; reliable ARMA estimation
    wants far more, but short series are the operating regime here, so the
    condition is surfaced rather than enforced.
    """
    order = ArimaOrder.coerce(order)
    if trend not in TRENDS:
        raise ValueError(f"trend must be one of {TRENDS}, got {trend!r}")
    check_count_series(series, min_length=order.d + 1, require_severity=use_severity)

    z = difference(log1p_transform(series), order.d).values
    m = z.size
    required = order.p + order.q + 2 + (1 if use_severity else 0)
    if m < required:
        raise InsufficientDataError(
            f"length after differencing is {m}; order {order.as_tuple()} "
            f"{'with severity ' if use_severity else ''}needs at least {required}"
        )

    R = _regression_columns(series, order, trend, use_severity, m)
    k_reg = R.shape[1]
    if k_reg and np.linalg.cond(R) > COND_LIMIT:
        raise CollinearityError(
            "regression terms are collinear (constant severity duplicates the intercept); "
            "drop the severity covariate or the intercept"
        )

    p, q = order.p, order.q

    def residuals(params):
        reg, ar, ma = _split_params(params, k_reg, p, q)
        u = z - R @ reg if k_reg else z
        return _innovations(u, ar, ma)

    start = np.zeros(k_reg + p + q)
    if k_reg:
        start[:k_reg] = np.linalg.lstsq(R, z, rcond=None)[0]
    result = minimize_least_squares(residuals, start, max_iter=max_iter, tol=tol)
    if not result.converged and result.iterations >= max_iter:
        raise NumericError(
            f"conditional least squares did not converge within {result.iterations} iterations"
        )

    reg, ar, ma = _split_params(result.params, k_reg, p, q)
    intercept = float(reg[0]) if trend == "c" else 0.0
    exog_coef = float(reg[-1]) if use_severity else None
    n_effective = m - p
    return ArimaxFit(
        order=order,
        ar=ar.copy(),
        ma=ma.copy(),
        exog_coef=exog_coef,
        intercept=intercept,
        sigma2=result.sse / n_effective,
        n_effective=n_effective,
        low_data_warning=len(series) < LOW_DATA_THRESHOLD,
        trend=trend,
        use_severity=use_severity,
        iterations=result.iterations,
        converged=result.converged,
        sse_path=result.sse_path,
    )


def psi_weights(ar: np.ndarray, ma: np.ndarray, count: int) -> np.ndarray:
    """First ``count`` moving-average weights of the ARMA(p,q) process."""
    psi = np.zeros(count)
    if count == 0:
        return psi
    psi[0] = 1.0
    for j in range(1, count):
        acc = ma[j - 1] if j - 1 < ma.size else 0.0
        for i in range(1, min(j, ar.size) + 1):
            acc += ar[i - 1] * psi[j - i]
        psi[j] = acc
    return psi


def interval_margins(fit: ArimaxFit, horizon: int, level: float = 0.95) -> np.ndarray:
    """Log-scale interval half-widths for steps 1..horizon.

    z * sqrt(sigma2 * cumsum(psi~^2)) where psi~ are the psi weights,
    cumulated once more when d=1. Cumulative sums of squares never shrink,
    so the margins are non-decreasing in the step.
    """
    horizon = check_horizon(horizon, minimum=1)
    check_level(level)
    psi = psi_weights(fit.ar, fit.ma, horizon)
    if fit.order.d == 1:
        psi = np.cumsum(psi)
    variance = fit.sigma2 * np.cumsum(psi**2)
    return NormalDist().inv_cdf(0.5 + level / 2.0) * np.sqrt(variance)


def forecast_arimax(
    fit: ArimaxFit, series: CountSeries, horizon: int, level: float = 0.95
) -> Forecast:
    """Iterate the ARMA recursion forward and back-transform to counts.

    Future innovations are zero; the future severity value is the mean of
    the last 7 observed severities. Log-scale forecast variance at step h is
    sigma2 times the cumulative sum of squared psi weights (cumulated once
    more through differencing when d=1), so interval half-widths never
    shrink with the horizon.
    """
    horizon = check_horizon(horizon, minimum=1)
    check_level(level)
    check_count_series(series, min_length=fit.order.d + 1, require_severity=fit.use_severity)

    order = fit.order
    w = log1p_transform(series)
    z = difference(w, order.d).values
    m = z.size
    R = _regression_columns(series, order, fit.trend, fit.use_severity, m)

    reg = []
    future_reg = 0.0
    if fit.trend == "c":
        reg.append(fit.intercept)
        future_reg += fit.intercept
    if fit.use_severity:
        reg.append(fit.exog_coef)
        future_reg += fit.exog_coef * float(np.mean(series.severity[-SEVERITY_LOOKBACK:]))
    u = z - R @ np.asarray(reg) if reg else z.copy()

    p, q = order.p, order.q
    e = np.zeros(m)
    e[p:] = _innovations(u, fit.ar, fit.ma)

    u_ext = np.concatenate([u, np.zeros(horizon)])
    e_ext = np.concatenate([e, np.zeros(horizon)])
    for s in range(horizon):
        t = m + s
        acc = 0.0
        for i in range(p):
            acc += fit.ar[i] * u_ext[t - 1 - i]
        for j in range(q):
            acc += fit.ma[j] * e_ext[t - 1 - j]
        u_ext[t] = acc
    z_hat = future_reg + u_ext[m:]

    if order.d == 1:
        w_hat = w.values[-1] + np.cumsum(z_hat)
    else:
        w_hat = z_hat

    margin = interval_margins(fit, horizon, level)

    def to_counts(log_values):
        # expm1 overflows above ~709.78; clip so wide intervals stay finite
        return np.maximum(np.expm1(np.minimum(log_values, 709.0)), 0.0)

    return Forecast(
        points=to_counts(w_hat),
        lower=to_counts(w_hat - margin),
        upper=to_counts(w_hat + margin),
        model="arimax",
    )
