"""Exponential-decay and logistic-growth curves: evaluation, fitting, forecasting.

Decay ``a * exp(-b*t) + c`` suits vulnerabilities past their peak; the
logistic ``L / (1 + exp(-k*(t - t0)))`` suits burst-and-fade attention that
is still rising. Both are fitted against the integer bucket index
t = 0..n-1 and forecast values are floored at zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .curvefit import Bounds, FitResult, ParametricModel, levenberg_marquardt
from .exceptions import DegenerateSeriesError, InsufficientDataError
from .series import CountSeries, Forecast, RealSeries, check_count_series, check_horizon

MIN_FIT_LENGTH = 4  # three parameters plus one residual degree of freedom

MODEL_KINDS = ("decay", "logistic")


@dataclass(frozen=True)
class DecayParams:
    """Amplitude, decay rate (1/bucket) and baseline of the decay curve."""

    a: float
    b: float
    c: float

    @classmethod
    def from_array(cls, values) -> "DecayParams":
        a, b, c = (float(v) for v in values)
        return cls(a, b, c)


@dataclass(frozen=True)
class LogisticParams:
    """Plateau, growth rate (1/bucket) and inflection index of the logistic curve."""

    L: float
    k: float
    t0: float

    def __post_init__(self):
        if self.L < 0 or self.k < 0 or self.t0 < 0:
            raise ValueError("logistic parameters must be nonnegative")

    @classmethod
    def from_array(cls, values) -> "LogisticParams":
        L, k, t0 = (float(v) for v in values)
        return cls(L, k, t0)


# np.exp overflows to inf above ~709.78; clipping the exponent keeps extreme
# trial parameters finite so the fitter can reject them by sse comparison
EXP_MAX = 709.0

_FLOAT_MAX = np.finfo(float).max


def decay_curve(t, a: float, b: float, c: float):
    z = np.minimum(-b * np.asarray(t, dtype=float), EXP_MAX)
    # a * exp(z) can still overflow for extreme amplitudes; cap at the float
    # ceiling so downstream forecasts stay finite and serializable
    with np.errstate(over="ignore"):
        y = a * np.exp(z) + c
    return np.minimum(y, _FLOAT_MAX)


def logistic_curve(t, L: float, k: float, t0: float):
    z = -k * (np.asarray(t, dtype=float) - t0)
    return L / (1.0 + np.exp(np.clip(z, -745.0, EXP_MAX)))


DECAY_MODEL = ParametricModel(arity=3, evaluate=lambda p, t: decay_curve(t, p[0], p[1], p[2]))

LOGISTIC_MODEL = ParametricModel(arity=3, evaluate=lambda p, t: logistic_curve(t, p[0], p[1], p[2]))


def eval_decay(params: DecayParams, t):
    """Evaluate the decay curve at t (scalar or array)."""
    return decay_curve(t, params.a, params.b, params.c)


def eval_logistic(params: LogisticParams, t):
    """Evaluate the logistic curve at t (scalar or array)."""
    return logistic_curve(t, params.L, params.k, params.t0)


def _series_values(series: CountSeries | RealSeries) -> np.ndarray:
    """Observations as floats; the fit treats counts and real values alike."""
    if isinstance(series, RealSeries):
        if len(series) < MIN_FIT_LENGTH:
            raise InsufficientDataError(
                f"series has {len(series)} buckets but at least {MIN_FIT_LENGTH} are required"
            )
        return series.values.astype(float)
    check_count_series(series, min_length=MIN_FIT_LENGTH)
    return series.counts.astype(float)


def fit_decay(series: CountSeries | RealSeries, max_iter: int = 200, tol: float = 1e-10) -> FitResult:
    """Fit the decay curve with initial guess (max(y), 0.5, min(y)), unbounded."""
    y = _series_values(series)
    t = np.arange(y.size, dtype=float)
    p0 = np.array([y.max(), 0.5, y.min()])
    return levenberg_marquardt(DECAY_MODEL, t, y, p0, max_iter=max_iter, tol=tol)


def fit_logistic(series: CountSeries | RealSeries, max_iter: int = 200, tol: float = 1e-10) -> FitResult:
    """Fit the logistic curve with nonnegative bounds.

    Initial guess is (1.5 * max(y), 0.3, median(t)). All-zero series are
    rejected: the plateau estimate collapses to zero and the Jacobian loses
    rank.
    """
    y = _series_values(series)
    if not np.any(y > 0):
        raise DegenerateSeriesError("cannot fit logistic growth to an all-zero series")
    t = np.arange(y.size, dtype=float)
    p0 = np.array([1.5 * y.max(), 0.3, float(np.median(t))])
    return levenberg_marquardt(
        LOGISTIC_MODEL, t, y, p0, bounds=Bounds.nonnegative(3), max_iter=max_iter, tol=tol
    )


def forecast_growth(fit: FitResult, model_kind: str, n_observed: int, horizon: int) -> Forecast:
    """Extend a fitted curve ``horizon`` buckets past the observations.

    Evaluates at t = n_observed .. n_observed + horizon - 1 and floors every
    point at zero; these curves carry no interval bounds.
    """
    if model_kind not in MODEL_KINDS:
        raise ValueError(f"model_kind must be one of {MODEL_KINDS}, got {model_kind!r}")
    horizon = check_horizon(horizon)
    if n_observed < 0:
        raise ValueError("n_observed must be nonnegative")
    model = DECAY_MODEL if model_kind == "decay" else LOGISTIC_MODEL
    t = n_observed + np.arange(horizon, dtype=float)
    points = np.maximum(model.predict(fit.params, t), 0.0)
    return Forecast(points=points, lower=None, upper=None, model=model_kind)
