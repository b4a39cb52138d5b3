"""Parse raw sighting records and aggregate them into count series.

Input formats are CSV (``timestamp,cve_id,source,kind``, header optional)
and JSON lines with the same four keys. Aggregation zero-fills buckets with
no records: the absence of sightings is part of the signal, not missing
data.
"""

from __future__ import annotations

import csv
import io
import json
import re
from dataclasses import dataclass
from datetime import date, datetime, timedelta, timezone

import numpy as np

from .exceptions import EmptySeriesError, MissingCovariateError, ParseError, UsageError
from .series import GRANULARITY_DAYS, SEVERITY_MAX, SEVERITY_MIN, CountSeries

CVE_PATTERN = re.compile(r"CVE-\d{4}-\d{4,}")

KINDS = frozenset({"seen", "confirmed", "exploited", "other"})

FORMATS = ("csv", "json-lines")

_CSV_COLUMNS = ("timestamp", "cve_id", "source", "kind")


@dataclass(frozen=True)
class SightingRecord:
    """One observed sighting event."""

    timestamp: datetime
    cve_id: str
    source: str
    kind: str


def parse_timestamp(value: str) -> datetime:
    """Parse an RFC 3339 timestamp into a UTC datetime at second resolution."""
    raw = value.strip()
    if raw.endswith(("Z", "z")):
        raw = raw[:-1] + "+00:00"
    ts = datetime.fromisoformat(raw)  # raises ValueError on malformed input
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc).replace(microsecond=0)


def _make_record(timestamp: str, cve_id: str, source: str, kind: str, line: int) -> SightingRecord:
    try:
        ts = parse_timestamp(timestamp)
    except ValueError:
        raise ParseError(f"malformed timestamp {timestamp.strip()!r}", line=line) from None
    cve_id = cve_id.strip().upper()
    if not CVE_PATTERN.fullmatch(cve_id):
        raise ParseError(f"malformed CVE id {cve_id!r}", line=line)
    kind = kind.strip().lower()
    if kind not in KINDS:
        kind = "other"
    return SightingRecord(ts, cve_id, source.strip(), kind)


def _parse_csv(text: str) -> list[SightingRecord]:
    records = []
    for line_no, row in enumerate(csv.reader(io.StringIO(text)), start=1):
        if not row or all(not cell.strip() for cell in row):
            continue
        if line_no == 1 and row[0].strip().lower() == "timestamp":
            continue  # optional header row
        if len(row) < len(_CSV_COLUMNS):
            raise ParseError(
                f"expected {len(_CSV_COLUMNS)} columns {','.join(_CSV_COLUMNS)}", line=line_no
            )
        records.append(_make_record(row[0], row[1], row[2], row[3], line_no))
    return records


def _parse_json_lines(text: str) -> list[SightingRecord]:
    records = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"malformed JSON: {exc.msg}", line=line_no) from None
        if not isinstance(obj, dict):
            raise ParseError("each line must hold a JSON object", line=line_no)
        for key in ("timestamp", "cve_id"):
            if key not in obj:
                raise ParseError(f"missing key {key!r}", line=line_no)
        records.append(
            _make_record(
                str(obj["timestamp"]),
                str(obj["cve_id"]),
                str(obj.get("source", "")),
                str(obj.get("kind", "other")),
                line_no,
            )
        )
    return records


def parse_sightings(text: str, format: str = "csv") -> list[SightingRecord]:
    """Parse sighting records from CSV or JSON-lines text, in input order.

    Unknown ``kind`` strings map to ``other``; malformed timestamps or CVE
    ids raise :class:`ParseError` naming the offending line.
    """
    if format == "csv":
        return _parse_csv(text)
    if format in ("json-lines", "jsonl"):
        return _parse_json_lines(text)
    raise UsageError(f"unknown input format {format!r}; expected one of {FORMATS}")


def _bucket_start(day: date, granularity: str) -> date:
    if granularity == "weekly":
        return day - timedelta(days=day.weekday())  # ISO week, Monday-based
    return day


def aggregate(
    records: list[SightingRecord],
    granularity: str = "daily",
    cve_filter: str | None = None,
) -> CountSeries:
    """Sum sightings per bucket over the full min..max record date range.

    Buckets without records get count zero. Weekly buckets are ISO weeks
    starting Monday.
    """
    if granularity not in GRANULARITY_DAYS:
        raise UsageError(
            f"unknown granularity {granularity!r}; expected one of {sorted(GRANULARITY_DAYS)}"
        )
    if cve_filter is not None:
        wanted = cve_filter.strip().upper()
        records = [r for r in records if r.cve_id == wanted]
        if not records:
            raise EmptySeriesError(f"no records match {wanted}")
    if not records:
        raise EmptySeriesError("no records to aggregate")

    step = GRANULARITY_DAYS[granularity]
    buckets = [_bucket_start(r.timestamp.date(), granularity) for r in records]
    start = min(buckets)
    n = (max(buckets) - start).days // step + 1
    counts = np.zeros(n, dtype=np.int64)
    for day in buckets:
        counts[(day - start).days // step] += 1
    return CountSeries(start, granularity, counts)


def load_severity(text: str) -> list[tuple[date, float]]:
    """Parse a ``date,score`` severity side-file; scores must lie in [0, 10]."""
    entries = []
    for line_no, row in enumerate(csv.reader(io.StringIO(text)), start=1):
        if not row or all(not cell.strip() for cell in row):
            continue
        if line_no == 1 and row[0].strip().lower() == "date":
            continue
        if len(row) < 2:
            raise ParseError("expected 2 columns date,score", line=line_no)
        try:
            day = date.fromisoformat(row[0].strip())
        except ValueError:
            raise ParseError(f"malformed date {row[0].strip()!r}", line=line_no) from None
        try:
            score = float(row[1])
        except ValueError:
            raise ParseError(f"malformed score {row[1].strip()!r}", line=line_no) from None
        if not SEVERITY_MIN <= score <= SEVERITY_MAX:
            raise ParseError(f"score {score} outside [0, 10]", line=line_no)
        entries.append((day, score))
    entries.sort(key=lambda pair: pair[0])
    return entries


def attach_severity(series: CountSeries, entries: list[tuple[date, float]]) -> CountSeries:
    """Align severity entries onto the series buckets.

    Each bucket takes the most recent score at or before its date; buckets
    before the first entry take the earliest score (severity is nearly
    constant after publication, so carrying values is safe).
    """
    if not entries:
        raise MissingCovariateError("severity data is empty")
    entries = sorted(entries, key=lambda pair: pair[0])
    severity = np.empty(len(series), dtype=float)
    pos = -1
    for i, day in enumerate(series.dates()):
        while pos + 1 < len(entries) and entries[pos + 1][0] <= day:
            pos += 1
        severity[i] = entries[max(pos, 0)][1]
    return CountSeries(series.start, series.granularity, series.counts, severity)
