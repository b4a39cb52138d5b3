"""Short-horizon forecasting of per-CVE vulnerability sighting counts.

The package ingests raw sighting records, buckets them into daily or weekly
count series, and fits four model families: exponential decay, logistic
growth, Poisson log-linear regression, and ARIMAX on the log scale. A
slope-based selector switches between the growth curves automatically, and
a cutoff backtester scores any model against held-out data.
"""

from .adaptive import TrendReport, adaptive_forecast, select_model, trend_slope
from .arimax import (
    ArimaOrder,
    ArimaxFit,
    difference,
    fit_arimax,
    forecast_arimax,
    interval_margins,
    undifference,
)
from .backtest import BacktestReport, run_backtest, score_forecast, split_at_cutoff
from .curvefit import Bounds, FitResult, ParametricModel, levenberg_marquardt
from .estimators import (
    AdaptiveForecaster,
    ArimaxForecaster,
    DecayForecaster,
    LogisticForecaster,
    PoissonForecaster,
)
from .exceptions import (
    CollinearityError,
    CutoffRangeError,
    DegenerateSeriesError,
    EmptySeriesError,
    InputError,
    InsufficientDataError,
    MissingCovariateError,
    ModelFailureError,
    NumericError,
    ParseError,
    SightcastError,
    UsageError,
)
from .growth import (
    DecayParams,
    LogisticParams,
    eval_decay,
    eval_logistic,
    fit_decay,
    fit_logistic,
    forecast_growth,
)
from .ingest import SightingRecord, aggregate, attach_severity, load_severity, parse_sightings
from .poisson import (
    PoissonFit,
    build_design,
    build_future_design,
    classify_dispersion,
    dispersion_ratio,
    fit_poisson,
    forecast_poisson,
)
from .series import (
    CountSeries,
    Forecast,
    RealSeries,
    clamp_outliers,
    inverse_log1p,
    log1p_transform,
)

__version__ = "0.1.0"

__all__ = [
    "AdaptiveForecaster",
    "ArimaOrder",
    "ArimaxFit",
    "ArimaxForecaster",
    "BacktestReport",
    "Bounds",
    "CollinearityError",
    "CountSeries",
    "CutoffRangeError",
    "DecayForecaster",
    "DecayParams",
    "DegenerateSeriesError",
    "EmptySeriesError",
    "FitResult",
    "Forecast",
    "InputError",
    "InsufficientDataError",
    "LogisticForecaster",
    "LogisticParams",
    "MissingCovariateError",
    "ModelFailureError",
    "NumericError",
    "ParametricModel",
    "ParseError",
    "PoissonFit",
    "PoissonForecaster",
    "RealSeries",
    "SightcastError",
    "SightingRecord",
    "TrendReport",
    "UsageError",
    "adaptive_forecast",
    "aggregate",
    "attach_severity",
    "build_design",
    "build_future_design",
    "clamp_outliers",
    "classify_dispersion",
    "difference",
    "dispersion_ratio",
    "eval_decay",
    "eval_logistic",
    "fit_arimax",
    "fit_decay",
    "fit_logistic",
    "fit_poisson",
    "forecast_arimax",
    "forecast_growth",
    "forecast_poisson",
    "interval_margins",
    "inverse_log1p",
    "levenberg_marquardt",
    "load_severity",
    "log1p_transform",
    "parse_sightings",
    "run_backtest",
    "score_forecast",
    "select_model",
    "split_at_cutoff",
    "trend_slope",
    "undifference",
]
