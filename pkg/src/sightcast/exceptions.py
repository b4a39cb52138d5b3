"""Error hierarchy.

Every error carries a stable machine-readable ``code`` slug; the CLI prints
it on stderr and maps the class to an exit code (64 usage, 65 data/model,
70 numeric).
"""


class SightcastError(Exception):
    """Base class for all sightcast errors."""

    code = "error"


class UsageError(SightcastError):
    """Bad invocation: unknown model, unknown format, invalid flag value."""

    code = "usage"


class InputError(SightcastError):
    """An input file could not be read."""

    code = "io-error"


class ParseError(SightcastError):
    """Malformed record input; carries the 1-based line number when known."""

    code = "parse-error"

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class EmptySeriesError(SightcastError):
    """No records remained after filtering."""

    code = "empty-series"


class InsufficientDataError(SightcastError):
    """Series is shorter than the operation's minimum length."""

    code = "insufficient-data"


class DegenerateSeriesError(SightcastError):
    """Series content makes the requested model unidentifiable (e.g. all zeros)."""

    code = "degenerate-series"


class MissingCovariateError(SightcastError):
    """Severity covariate requested but not present on the series."""

    code = "missing-covariate"


class CollinearityError(SightcastError):
    """Design matrix is numerically rank-deficient."""

    code = "collinearity"


class CutoffRangeError(SightcastError):
    """Backtest cutoff falls outside the usable date range."""

    code = "cutoff-range"


class ModelFailureError(SightcastError):
    """Every candidate model failed to fit."""

    code = "model-failure"


class NumericError(SightcastError):
    """Non-finite values or a diverging optimizer; maps to exit code 70."""

    code = "numeric"
