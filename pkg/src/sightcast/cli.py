"""Command-line interface: aggregate, forecast, backtest, and plot.

Every flag falls back to a ``SIGHTCAST_*`` environment variable so the tool
scripts cleanly. Output documents are deterministic: floats are rounded to
six decimal places, SVG coordinates to two, and ``SIGHTCAST_GENERATED_AT``
overrides the timestamp so golden files stay byte-identical. Files are
written via a temp file and rename, never partially.

Exit codes: 0 success, 64 usage error, 65 data or model error, 70 numeric
failure. Errors print one machine-parsable line on stderr:
``error: <code>: <message>``.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from dataclasses import dataclass
from datetime import date, datetime, timezone
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from .adaptive import adaptive_forecast
from .arimax import fit_arimax, forecast_arimax
from .backtest import run_backtest
from .exceptions import InputError, NumericError, SightcastError, UsageError
from .growth import DecayParams, LogisticParams, fit_decay, fit_logistic, forecast_growth
from .ingest import aggregate, attach_severity, load_severity, parse_sightings, parse_timestamp
from .poisson import build_future_design, classify_dispersion, fit_poisson, forecast_poisson
from .series import CountSeries, Forecast

MODELS = ("decay", "logistic", "poisson", "arimax", "adaptive")

DEFAULT_MODEL = "adaptive"
DEFAULT_HORIZON = "10"
DEFAULT_LEVEL = "0.95"

JSON_DECIMALS = 6


@dataclass(frozen=True)
class ForecastDocument:
    """JSON-serializable forecast output; key order is part of the format."""

    cve_id: str
    model: str
    generated_at: str
    granularity: str
    history: list
    forecast: list
    diagnostics: dict

    def as_dict(self) -> dict:
        return {
            "cve_id": self.cve_id,
            "model": self.model,
            "generated_at": self.generated_at,
            "granularity": self.granularity,
            "history": self.history,
            "forecast": self.forecast,
            "diagnostics": self.diagnostics,
        }


def _env(name: str, fallback: str | None = None) -> str | None:
    return os.environ.get(name, fallback)


def _read_text(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc


def _write_text(path: str | None, text: str) -> None:
    """Write atomically (temp file + rename); no path means stdout."""
    if not path or path == "-":
        sys.stdout.write(text)
        return
    target = Path(path)
    directory = target.parent if str(target.parent) else Path(".")
    try:
        fd, tmp = tempfile.mkstemp(prefix=f".{target.name}.", dir=directory)
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as handle:
                handle.write(text)
            os.replace(tmp, target)
        except BaseException:
            try:
                os.unlink(tmp)
            except OSError:
                pass
            raise
    except OSError as exc:
        raise InputError(f"cannot write {path}: {exc}") from exc


def _jsonable(value):
    """Make nested output JSON-friendly with floats rounded for stability."""
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return round(float(value), JSON_DECIMALS)
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value]
    if isinstance(value, dict):
        return {key: _jsonable(val) for key, val in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


def _dump_json(document: dict) -> str:
    return json.dumps(_jsonable(document), indent=2) + "\n"


def _parse_int(raw, flag: str, minimum: int) -> int:
    try:
        value = int(str(raw))
    except ValueError:
        raise UsageError(f"{flag} must be an integer, got {raw!r}") from None
    if value < minimum:
        raise UsageError(f"{flag} must be >= {minimum}, got {value}")
    return value


def _parse_level(raw) -> float:
    try:
        value = float(str(raw))
    except ValueError:
        raise UsageError(f"--level must be a number, got {raw!r}") from None
    if not 0.0 < value < 1.0:
        raise UsageError(f"--level must lie strictly between 0 and 1, got {value}")
    return value


def _parse_cutoff(raw) -> date:
    if raw is None:
        raise UsageError("--cutoff is required (or set SIGHTCAST_CUTOFF)")
    try:
        return date.fromisoformat(str(raw))
    except ValueError:
        raise UsageError(f"--cutoff must be an ISO date (YYYY-MM-DD), got {raw!r}") from None


def _validated_model(raw) -> str:
    model = str(raw)
    if model not in MODELS:
        raise UsageError(f"unknown model {model!r}; expected one of {', '.join(MODELS)}")
    return model


def _generated_at() -> str:
    raw = _env("SIGHTCAST_GENERATED_AT")
    if raw:
        stamp = parse_timestamp(raw)
    else:
        stamp = datetime.now(timezone.utc).replace(microsecond=0)
    return stamp.isoformat().replace("+00:00", "Z")


def _load_series(args) -> tuple[CountSeries, bool]:
    """Parse, aggregate, and optionally attach severity; returns (series, has_severity)."""
    if not args.input:
        raise UsageError("--input is required (or set SIGHTCAST_INPUT)")
    records = parse_sightings(_read_text(args.input), args.format)
    series = aggregate(records, args.granularity, cve_filter=args.cve)
    severity_path = getattr(args, "severity", None)
    if severity_path:
        series = attach_severity(series, load_severity(_read_text(severity_path)))
        return series, True
    return series, False


def _history_entries(series: CountSeries) -> list:
    return [
        {"date": day.isoformat(), "count": int(count)}
        for day, count in zip(series.dates(), series.counts)
    ]


def _forecast_entries(series: CountSeries, forecast: Forecast) -> list:
    entries = []
    for index in range(len(forecast)):
        day = series.end + (index + 1) * series.step
        entry = {"date": day.isoformat(), "point": float(forecast.points[index])}
        if forecast.has_intervals:
            entry["lower"] = float(forecast.lower[index])
            entry["upper"] = float(forecast.upper[index])
        entries.append(entry)
    return entries


def _fit_and_forecast(
    series: CountSeries, model: str, horizon: int, level: float, use_severity: bool
) -> tuple[Forecast, dict]:
    """Dispatch to the model's fit + forecast pipeline; returns diagnostics too."""
    if model == "decay":
        fit = fit_decay(series)
        p = DecayParams.from_array(fit.params)
        diagnostics = {
            "converged": fit.converged,
            "iterations": fit.iterations,
            "sse": fit.sse,
            "params": {"a": p.a, "b": p.b, "c": p.c},
        }
        return forecast_growth(fit, "decay", len(series), horizon), diagnostics
    if model == "logistic":
        fit = fit_logistic(series)
        p = LogisticParams.from_array(fit.params)
        diagnostics = {
            "converged": fit.converged,
            "iterations": fit.iterations,
            "sse": fit.sse,
            "params": {"L": p.L, "k": p.k, "t0": p.t0},
        }
        return forecast_growth(fit, "logistic", len(series), horizon), diagnostics
    if model == "poisson":
        fit = fit_poisson(series, use_severity=use_severity)
        diagnostics = {
            "converged": fit.converged,
            "iterations": fit.iterations,
            "dispersion": fit.dispersion,
            "dispersion_class": classify_dispersion(fit.dispersion),
            "coefficients": list(fit.coefficients),
        }
        forecast = forecast_poisson(fit, build_future_design(series, fit, horizon), level=level)
        return forecast, diagnostics
    if model == "arimax":
        fit = fit_arimax(series, use_severity=use_severity)
        diagnostics = {
            "converged": fit.converged,
            "iterations": fit.iterations,
            "order": list(fit.order.as_tuple()),
            "ar": list(fit.ar),
            "ma": list(fit.ma),
            "intercept": fit.intercept,
            "sigma2": fit.sigma2,
            "low_data_warning": fit.low_data_warning,
        }
        if use_severity:
            diagnostics["exog_coef"] = fit.exog_coef
        return forecast_arimax(fit, series, horizon, level=level), diagnostics
    report, forecast = adaptive_forecast(series, horizon=horizon)
    diagnostics = {
        "slope": report.slope,
        "window": report.window,
        "chosen": report.chosen,
        "fell_back": report.fell_back,
        "used": forecast.model,
    }
    return forecast, diagnostics


# --- SVG rendering ---

SVG_WIDTH = 960
SVG_HEIGHT = 480
MARGIN_LEFT = 64
MARGIN_RIGHT = 24
MARGIN_TOP = 48
MARGIN_BOTTOM = 56
PLOT_WIDTH = SVG_WIDTH - MARGIN_LEFT - MARGIN_RIGHT
PLOT_HEIGHT = SVG_HEIGHT - MARGIN_TOP - MARGIN_BOTTOM

OBSERVED_COLOR = "#1f77b4"
FORECAST_COLOR = "#d62728"
BAND_COLOR = "#9ecae1"
AXIS_COLOR = "#333333"
GRID_COLOR = "#dddddd"
FONT = 'font-family="sans-serif"'


def _fmt(value: float) -> str:
    return f"{value:.2f}"


def render_svg(series: CountSeries, forecast: Forecast | None, title: str) -> str:
    """Standalone 960x480 SVG: observed counts, forecast, interval band.

    Output is deterministic for identical inputs: fixed viewport, fixed
    2-decimal coordinate precision, no timestamps.
    """
    counts = series.counts.astype(float)
    n_hist = len(series)
    n_fc = len(forecast) if forecast is not None else 0
    total = n_hist + n_fc
    has_band = forecast is not None and n_fc > 0 and forecast.has_intervals

    peak = counts.max() if n_hist else 0.0
    if n_fc:
        peak = max(peak, float(forecast.points.max()))
    if has_band:
        peak = max(peak, float(forecast.upper.max()))
    ymax = 1.05 * max(peak, 1.0)

    def x_at(index: int) -> float:
        return MARGIN_LEFT + PLOT_WIDTH * index / max(total - 1, 1)

    def y_at(value: float) -> float:
        return MARGIN_TOP + PLOT_HEIGHT * (1.0 - value / ymax)

    dates = series.dates() + [series.end + (i + 1) * series.step for i in range(n_fc)]

    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_WIDTH}" height="{SVG_HEIGHT}" '
        f'viewBox="0 0 {SVG_WIDTH} {SVG_HEIGHT}">',
        f'<text x="{SVG_WIDTH // 2}" y="28" text-anchor="middle" {FONT} font-size="16">'
        f"{escape(title)}</text>",
    ]

    bottom = MARGIN_TOP + PLOT_HEIGHT
    right = MARGIN_LEFT + PLOT_WIDTH
    tick_format = "{:.0f}" if ymax >= 10 else "{:.1f}"
    for i in range(5):
        value = ymax * i / 4
        y = y_at(value)
        if i:
            parts.append(
                f'<line x1="{MARGIN_LEFT}" y1="{_fmt(y)}" x2="{right}" y2="{_fmt(y)}" '
                f'stroke="{GRID_COLOR}"/>'
            )
        parts.append(
            f'<text x="{MARGIN_LEFT - 8}" y="{_fmt(y + 4)}" text-anchor="end" {FONT} '
            f'font-size="11">{tick_format.format(value)}</text>'
        )

    tick_step = max(1, -(-total // 6))  # ceil division
    tick_indices = list(range(0, total, tick_step))
    if tick_indices[-1] != total - 1:
        tick_indices.append(total - 1)
    for index in tick_indices:
        parts.append(
            f'<text x="{_fmt(x_at(index))}" y="{bottom + 18}" text-anchor="middle" {FONT} '
            f'font-size="11">{dates[index].isoformat()}</text>'
        )

    parts.append(
        f'<line x1="{MARGIN_LEFT}" y1="{bottom}" x2="{right}" y2="{bottom}" stroke="{AXIS_COLOR}"/>'
    )
    parts.append(
        f'<line x1="{MARGIN_LEFT}" y1="{MARGIN_TOP}" x2="{MARGIN_LEFT}" y2="{bottom}" '
        f'stroke="{AXIS_COLOR}"/>'
    )
    parts.append(
        f'<text x="{MARGIN_LEFT + PLOT_WIDTH // 2}" y="{SVG_HEIGHT - 12}" text-anchor="middle" '
        f'{FONT} font-size="12">date</text>'
    )
    parts.append(
        f'<text transform="rotate(-90)" x="-{SVG_HEIGHT // 2}" y="16" text-anchor="middle" '
        f'{FONT} font-size="12">sightings</text>'
    )

    if has_band:
        band = [f"{_fmt(x_at(n_hist + i))},{_fmt(y_at(forecast.upper[i]))}" for i in range(n_fc)]
        band += [
            f"{_fmt(x_at(n_hist + i))},{_fmt(y_at(forecast.lower[i]))}"
            for i in reversed(range(n_fc))
        ]
        parts.append(
            f'<polygon points="{" ".join(band)}" fill="{BAND_COLOR}" fill-opacity="0.45" '
            f'stroke="none"/>'
        )

    observed = " ".join(f"{_fmt(x_at(i))},{_fmt(y_at(counts[i]))}" for i in range(n_hist))
    parts.append(
        f'<polyline points="{observed}" fill="none" stroke="{OBSERVED_COLOR}" stroke-width="1.5"/>'
    )
    for i in range(n_hist):
        parts.append(
            f'<circle cx="{_fmt(x_at(i))}" cy="{_fmt(y_at(counts[i]))}" r="2.5" '
            f'fill="{OBSERVED_COLOR}"/>'
        )

    if n_fc:
        predicted = " ".join(
            f"{_fmt(x_at(n_hist + i))},{_fmt(y_at(forecast.points[i]))}" for i in range(n_fc)
        )
        parts.append(
            f'<polyline points="{predicted}" fill="none" stroke="{FORECAST_COLOR}" '
            f'stroke-width="1.5" stroke-dasharray="5 3"/>'
        )

    legend_x = right - 150
    legend = [("observed", OBSERVED_COLOR, "")]
    if n_fc:
        legend.append(("forecast", FORECAST_COLOR, ' stroke-dasharray="5 3"'))
    for row, (label, color, dash) in enumerate(legend):
        y = MARGIN_TOP + 14 + 16 * row
        parts.append(
            f'<line x1="{legend_x}" y1="{y}" x2="{legend_x + 24}" y2="{y}" stroke="{color}" '
            f'stroke-width="1.5"{dash}/>'
        )
        parts.append(
            f'<text x="{legend_x + 30}" y="{y + 4}" {FONT} font-size="11">{label}</text>'
        )
    if has_band:
        y = MARGIN_TOP + 14 + 16 * len(legend)
        parts.append(
            f'<rect x="{legend_x}" y="{y - 5}" width="24" height="10" fill="{BAND_COLOR}" '
            f'fill-opacity="0.45"/>'
        )
        parts.append(
            f'<text x="{legend_x + 30}" y="{y + 4}" {FONT} font-size="11">interval</text>'
        )

    parts.append("</svg>")
    return "\n".join(parts) + "\n"


# --- subcommands ---


def _cmd_aggregate(args) -> None:
    series, _ = _load_series(args)
    document = {
        "cve_id": args.cve or "*",
        "granularity": series.granularity,
        "history": _history_entries(series),
    }
    _write_text(args.output, _dump_json(document))


def _cmd_forecast(args) -> None:
    model = _validated_model(args.model)
    horizon = _parse_int(args.horizon, "--horizon", minimum=1)
    level = _parse_level(args.level)
    series, use_severity = _load_series(args)
    forecast, diagnostics = _fit_and_forecast(series, model, horizon, level, use_severity)
    document = ForecastDocument(
        cve_id=args.cve or "*",
        model=model,
        generated_at=_generated_at(),
        granularity=series.granularity,
        history=_history_entries(series),
        forecast=_forecast_entries(series, forecast),
        diagnostics=diagnostics,
    )
    _write_text(args.output, _dump_json(document.as_dict()))


def _cmd_backtest(args) -> None:
    model = _validated_model(args.model)
    horizon = _parse_int(args.horizon, "--horizon", minimum=1)
    level = _parse_level(args.level)
    cutoff = _parse_cutoff(args.cutoff)
    series, use_severity = _load_series(args)
    report = run_backtest(
        series, model, cutoff, horizon=horizon, level=level, use_severity=use_severity
    )
    _write_text(args.output, _dump_json(report.as_dict()))


def _cmd_plot(args) -> None:
    model = _validated_model(args.model)
    horizon = _parse_int(args.horizon, "--horizon", minimum=1)
    level = _parse_level(args.level)
    series, use_severity = _load_series(args)
    forecast, _ = _fit_and_forecast(series, model, horizon, level, use_severity)
    title = f"{args.cve or 'all CVEs'}: {model} forecast"
    _write_text(args.output, render_svg(series, forecast, title))


def _add_io_flags(parser: argparse.ArgumentParser, severity: bool = True) -> None:
    parser.add_argument("--input", default=_env("SIGHTCAST_INPUT"), help="sightings file path")
    parser.add_argument(
        "--format",
        default=_env("SIGHTCAST_FORMAT", "csv"),
        help="input format: csv or json-lines (default csv)",
    )
    parser.add_argument("--cve", default=_env("SIGHTCAST_CVE"), help="CVE id filter")
    parser.add_argument(
        "--granularity",
        default=_env("SIGHTCAST_GRANULARITY", "daily"),
        help="bucket size: daily or weekly (default daily)",
    )
    if severity:
        parser.add_argument(
            "--severity",
            default=_env("SIGHTCAST_SEVERITY"),
            help="severity side-file (date,score CSV)",
        )
    parser.add_argument("--output", default=_env("SIGHTCAST_OUTPUT"), help="output path (default stdout)")


def _add_model_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--model",
        default=_env("SIGHTCAST_MODEL", DEFAULT_MODEL),
        help=f"one of {', '.join(MODELS)} (default {DEFAULT_MODEL})",
    )
    parser.add_argument(
        "--horizon",
        default=_env("SIGHTCAST_HORIZON", DEFAULT_HORIZON),
        help="buckets to forecast (default 10)",
    )
    parser.add_argument(
        "--level",
        default=_env("SIGHTCAST_LEVEL", DEFAULT_LEVEL),
        help="interval level for models with intervals (default 0.95)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sightcast",
        description="Forecast short-horizon vulnerability sighting counts per CVE.",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    agg = commands.add_parser("aggregate", help="bucket raw sightings into a count series")
    _add_io_flags(agg, severity=False)
    agg.set_defaults(handler=_cmd_aggregate)

    fc = commands.add_parser("forecast", help="fit a model and emit a forecast document")
    _add_io_flags(fc)
    _add_model_flags(fc)
    fc.set_defaults(handler=_cmd_forecast)

    bt = commands.add_parser("backtest", help="evaluate a model against a holdout after a cutoff")
    _add_io_flags(bt)
    _add_model_flags(bt)
    bt.add_argument(
        "--cutoff",
        default=_env("SIGHTCAST_CUTOFF"),
        help="last date kept for training (YYYY-MM-DD)",
    )
    bt.set_defaults(handler=_cmd_backtest)

    plot = commands.add_parser("plot", help="render history plus forecast as an SVG")
    _add_io_flags(plot)
    _add_model_flags(plot)
    plot.set_defaults(handler=_cmd_plot)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    args.handler(args)
    return 0


def entrypoint(argv=None) -> int:
    """Console entry; maps the error hierarchy onto exit codes."""
    try:
        return main(argv)
    except UsageError as exc:
        _print_error(exc)
        return 64
    except NumericError as exc:
        _print_error(exc)
        return 70
    except SightcastError as exc:
        _print_error(exc)
        return 65


def _print_error(exc: SightcastError) -> None:
    print(f"error: {exc.code}: {exc}", file=sys.stderr)


if __name__ == "__main__":
    sys.exit(entrypoint())
