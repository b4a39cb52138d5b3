"""Shared builders for the test suite.

The fuzz corpus is a deterministic sample of (series, model, horizon)
triples spanning the shapes the library is expected to meet in the wild.
It is expensive to build, so it lives in a session fixture and is only
constructed when a test asks for it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import date

import numpy as np
import pytest

from sightcast import (
    CountSeries,
    Forecast,
    RealSeries,
    adaptive_forecast,
    build_future_design,
    fit_arimax,
    fit_decay,
    fit_logistic,
    fit_poisson,
    forecast_arimax,
    forecast_growth,
    forecast_poisson,
)
from sightcast.arimax import ArimaxFit
from sightcast.exceptions import SightcastError

FUZZ_SEED = 20250814
FUZZ_SIZE = 1000

SERIES_KINDS = ("decay", "logistic", "flat", "exp_trend", "walk", "spiky", "noisy_low")
FUZZ_MODELS = ("decay", "logistic", "poisson", "arimax", "adaptive")
FUZZ_ORDERS = ((1, 1, 1), (1, 0, 0), (0, 1, 1), (2, 1, 1), (1, 0, 1))
FUZZ_LEVELS = (0.8, 0.9, 0.95, 0.99)

START = date(2025, 10, 1)


def make_series(counts, start=START, granularity="daily", severity=None) -> CountSeries:
    return CountSeries(start, granularity, np.asarray(counts), severity)


def make_real_series(values, start=START, granularity="daily", severity=None) -> RealSeries:
    return RealSeries(start, granularity, np.asarray(values, dtype=float), severity)


def synth_counts(rng: np.random.Generator, kind: str, n: int) -> np.ndarray:
    """Draw one synthetic count series of the requested shape."""
    t = np.arange(n, dtype=float)
    if kind == "decay":
        a, b, c = rng.uniform(5, 80), rng.uniform(0.05, 0.6), rng.uniform(0, 3)
        return rng.poisson(a * np.exp(-b * t) + c)
    if kind == "logistic":
        cap, k, t0 = rng.uniform(10, 150), rng.uniform(0.2, 0.9), rng.uniform(2, n - 2)
        return rng.poisson(np.maximum(cap / (1.0 + np.exp(-k * (t - t0))), 0.05))
    if kind == "flat":
        return rng.poisson(rng.uniform(0.5, 20), size=n)
    if kind == "exp_trend":
        lam = rng.uniform(1, 5) * np.exp(rng.uniform(0.02, 0.15) * t)
        return rng.poisson(np.minimum(lam, 1e6))
    if kind == "walk":
        w = np.cumsum(rng.normal(0, 0.3, size=n)) + rng.uniform(0.5, 3.0)
        return np.rint(np.expm1(np.maximum(w, 0.0))).astype(np.int64)
    if kind == "spiky":
        counts = rng.poisson(1.0, size=n)
        spikes = rng.random(n) < 0.1
        counts[spikes] += rng.integers(20, 120, size=int(spikes.sum()))
        return counts
    if kind == "noisy_low":
        return rng.poisson(0.6, size=n)
    raise ValueError(f"unknown series kind {kind!r}")


@dataclass
class FuzzCase:
    """One fuzz triple plus everything the property tests inspect."""

    index: int
    kind: str
    model: str
    horizon: int
    level: float
    series: CountSeries
    order: tuple[int, int, int] | None = None
    forecast: Forecast | None = None
    error: Exception | None = None
    arimax_fit: ArimaxFit | None = None
    # ("sse", path) must be non-increasing, ("loglik", path) non-decreasing
    paths: list[tuple[str, np.ndarray]] = field(default_factory=list)


def _run_case(case: FuzzCase) -> None:
    series, horizon, level = case.series, case.horizon, case.level
    use_severity = series.severity is not None
    if case.model == "decay":
        fit = fit_decay(series)
        case.paths.append(("sse", fit.sse_path))
        case.forecast = forecast_growth(fit, "decay", len(series), horizon)
    elif case.model == "logistic":
        fit = fit_logistic(series)
        case.paths.append(("sse", fit.sse_path))
        case.forecast = forecast_growth(fit, "logistic", len(series), horizon)
    elif case.model == "poisson":
        fit = fit_poisson(series, use_severity=use_severity)
        case.paths.append(("loglik", fit.loglik_path))
        future = build_future_design(series, fit, horizon)
        case.forecast = forecast_poisson(fit, future, level=level)
    elif case.model == "arimax":
        fit = fit_arimax(series, order=case.order, use_severity=use_severity)
        case.paths.append(("sse", fit.sse_path))
        case.arimax_fit = fit
        case.forecast = forecast_arimax(fit, series, horizon, level=level)
    elif case.model == "adaptive":
        report, forecast = adaptive_forecast(series, horizon=horizon)
        case.forecast = forecast
        used_logistic = report.chosen == "logistic" and not report.fell_back
        refit = fit_logistic(series) if used_logistic else fit_decay(series)
        case.paths.append(("sse", refit.sse_path))
    else:
        raise ValueError(f"unknown model {case.model!r}")


def build_fuzz_corpus(size: int = FUZZ_SIZE, seed: int = FUZZ_SEED) -> list[FuzzCase]:
    rng = np.random.default_rng(seed)
    corpus = []
    for index in range(size):
        kind = SERIES_KINDS[int(rng.integers(len(SERIES_KINDS)))]
        n = int(rng.integers(8, 61))
        counts = synth_counts(rng, kind, n)
        severity = None
        if rng.random() < 0.4:
            severity = np.round(rng.uniform(0, 10, size=n), 1)
        series = make_series(counts, severity=severity)

        model = FUZZ_MODELS[int(rng.integers(len(FUZZ_MODELS)))]
        case = FuzzCase(
            index=index,
            kind=kind,
            model=model,
            horizon=int(rng.integers(1, 16)),
            level=FUZZ_LEVELS[int(rng.integers(len(FUZZ_LEVELS)))],
            series=series,
            order=FUZZ_ORDERS[int(rng.integers(len(FUZZ_ORDERS)))] if model == "arimax" else None,
        )
        try:
            _run_case(case)
        except SightcastError as exc:
            # expected refusal on degenerate input: recorded, not a failure
            case.error = exc
        corpus.append(case)
    return corpus


@pytest.fixture(scope="session")
def fuzz_corpus() -> list[FuzzCase]:
    return build_fuzz_corpus()
