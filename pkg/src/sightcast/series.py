"""Regular, zero-filled series types and elementwise transforms.

A series is anchored at a UTC start date and advances in fixed steps (one
day or one ISO week per bucket); bucket ``i`` covers ``start + i * step``.
Values are stored as read-only numpy arrays so instances are safe to share
across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import date, timedelta

import numpy as np

from .exceptions import (
    DegenerateSeriesError,
    InsufficientDataError,
    MissingCovariateError,
)

GRANULARITY_DAYS = {"daily": 1, "weekly": 7}

SEVERITY_MIN = 0.0
SEVERITY_MAX = 10.0


def _frozen_array(values, dtype) -> np.ndarray:
    out = np.array(values, dtype=dtype)
    out.setflags(write=False)
    return out


def _check_granularity(granularity: str) -> None:
    if granularity not in GRANULARITY_DAYS:
        raise ValueError(
            f"granularity must be one of {sorted(GRANULARITY_DAYS)}, got {granularity!r}"
        )


def _check_severity(severity, n: int) -> np.ndarray | None:
    if severity is None:
        return None
    out = np.asarray(severity, dtype=float)
    if out.ndim != 1 or out.size != n:
        raise ValueError(f"severity must be 1-d with length {n}, got shape {out.shape}")
    if not np.all(np.isfinite(out)):
        raise ValueError("severity values must be finite")
    if np.any(out < SEVERITY_MIN) or np.any(out > SEVERITY_MAX):
        raise ValueError("severity values must lie in [0, 10]")
    return _frozen_array(out, float)


class _SeriesBase:
    """Date bookkeeping shared by count and real series."""

    start: date
    granularity: str

    def __len__(self) -> int:
        return len(self.values)

    @property
    def values(self) -> np.ndarray:  # overridden by field name in subclasses
        raise NotImplementedError

    @property
    def step(self) -> timedelta:
        return timedelta(days=GRANULARITY_DAYS[self.granularity])

    def bucket_date(self, index: int) -> date:
        return self.start + index * self.step

    @property
    def end(self) -> date:
        return self.bucket_date(len(self) - 1)

    def dates(self) -> list[date]:
        return [self.bucket_date(i) for i in range(len(self))]


@dataclass(frozen=True, eq=False)
class CountSeries(_SeriesBase):
    """Contiguous nonnegative integer counts with an optional severity covariate."""

    start: date
    granularity: str
    counts: np.ndarray
    severity: np.ndarray | None = None

    def __post_init__(self):
        _check_granularity(self.granularity)
        counts = np.asarray(self.counts)
        if counts.ndim != 1 or counts.size == 0:
            raise ValueError("counts must be a non-empty 1-d sequence")
        if not np.issubdtype(counts.dtype, np.integer):
            rounded = np.rint(np.asarray(counts, dtype=float))
            if not np.allclose(counts, rounded, rtol=0, atol=0):
                raise ValueError("counts must be integers")
            counts = rounded.astype(np.int64)
        if np.any(counts < 0):
            raise ValueError("counts must be nonnegative")
        object.__setattr__(self, "counts", _frozen_array(counts, np.int64))
        object.__setattr__(self, "severity", _check_severity(self.severity, counts.size))

    @property
    def values(self) -> np.ndarray:
        return self.counts

    def slice(self, lo: int, hi: int) -> "CountSeries":
        """Contiguous sub-series covering buckets ``lo..hi-1``."""
        if not 0 <= lo < hi <= len(self):
            raise ValueError(f"invalid slice [{lo}, {hi}) for length {len(self)}")
        severity = None if self.severity is None else self.severity[lo:hi]
        return CountSeries(self.bucket_date(lo), self.granularity, self.counts[lo:hi], severity)

    def __eq__(self, other) -> bool:
        if not isinstance(other, CountSeries):
            return NotImplemented
        if (self.severity is None) != (other.severity is None):
            return False
        return (
            self.start == other.start
            and self.granularity == other.granularity
            and np.array_equal(self.counts, other.counts)
            and (self.severity is None or np.array_equal(self.severity, other.severity))
        )


@dataclass(frozen=True, eq=False)
class RealSeries(_SeriesBase):
    """Real-valued series produced by transforms such as log1p or differencing."""

    start: date
    granularity: str
    values_: np.ndarray
    severity: np.ndarray | None = None

    def __post_init__(self):
        _check_granularity(self.granularity)
        values = np.asarray(self.values_, dtype=float)
        if values.ndim != 1 or values.size == 0:
            raise ValueError("values must be a non-empty 1-d sequence")
        if not np.all(np.isfinite(values)):
            raise ValueError("values must be finite")
        object.__setattr__(self, "values_", _frozen_array(values, float))
        object.__setattr__(self, "severity", _check_severity(self.severity, values.size))

    @property
    def values(self) -> np.ndarray:
        return self.values_

    def __eq__(self, other) -> bool:
        if not isinstance(other, RealSeries):
            return NotImplemented
        if (self.severity is None) != (other.severity is None):
            return False
        return (
            self.start == other.start
            and self.granularity == other.granularity
            and np.array_equal(self.values_, other.values_)
            and (self.severity is None or np.array_equal(self.severity, other.severity))
        )


@dataclass(frozen=True, eq=False)
class Forecast:
    """Per-step point predictions with optional interval bounds."""

    points: np.ndarray
    lower: np.ndarray | None
    upper: np.ndarray | None
    model: str

    def __post_init__(self):
        points = np.asarray(self.points, dtype=float)
        object.__setattr__(self, "points", _frozen_array(points, float))
        for name in ("lower", "upper"):
            bound = getattr(self, name)
            if bound is not None:
                bound = np.asarray(bound, dtype=float)
                if bound.shape != points.shape:
                    raise ValueError(f"{name} must match points in shape")
                object.__setattr__(self, name, _frozen_array(bound, float))
        if (self.lower is None) != (self.upper is None):
            raise ValueError("lower and upper bounds must be supplied together")

    def __len__(self) -> int:
        return len(self.points)

    @property
    def has_intervals(self) -> bool:
        return self.lower is not None


def log1p_transform(series: CountSeries | RealSeries) -> RealSeries:
    """Elementwise ln(1 + x); severity is carried through unchanged."""
    return RealSeries(series.start, series.granularity, np.log1p(series.values), series.severity)


def inverse_log1p(series: RealSeries) -> RealSeries:
    """Elementwise exp(x) - 1, clipped below at zero."""
    values = np.maximum(np.expm1(series.values), 0.0)
    return RealSeries(series.start, series.granularity, values, series.severity)


def clamp_outliers(series: CountSeries, factor: float = 3.0) -> CountSeries:
    """Clamp counts above median + factor * IQR down to that threshold.

    The IQR uses linearly interpolated quantiles; the threshold is floored so
    the result stays integral. Never increases a value, hence idempotent.
    """
    if not factor > 0:
        raise ValueError(f"factor must be positive, got {factor}")
    counts = series.counts
    q25, median, q75 = np.percentile(counts, [25, 50, 75])
    cap = int(math.floor(median + factor * (q75 - q25)))
    return CountSeries(series.start, series.granularity, np.minimum(counts, cap), series.severity)


def check_count_series(
    series: CountSeries,
    *,
    min_length: int = 1,
    require_positive: bool = False,
    require_severity: bool = False,
) -> CountSeries:
    """Validate a CountSeries against an operation's preconditions."""
    if not isinstance(series, CountSeries):
        raise TypeError(f"expected CountSeries, got {type(series).__name__}")
    if len(series) < min_length:
        raise InsufficientDataError(
            f"series has {len(series)} buckets but at least {min_length} are required"
        )
    if require_positive and not np.any(series.counts > 0):
        raise DegenerateSeriesError("series is all zeros")
    if require_severity and series.severity is None:
        raise MissingCovariateError("severity covariate requested but series carries none")
    return series


def check_horizon(horizon: int, minimum: int = 0) -> int:
    if int(horizon) != horizon or horizon < minimum:
        raise ValueError(f"horizon must be an integer >= {minimum}, got {horizon!r}")
    return int(horizon)


def check_level(level: float) -> float:
    if not 0.0 < level < 1.0:
        raise ValueError(f"interval level must lie strictly between 0 and 1, got {level!r}")
    return float(level)
