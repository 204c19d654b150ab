"""CSV sensor-log parsing and cleaning.

Raw logs arrive as UTF-8 CSV with a header row. Parsing drops rows with
missing cells, non-numeric tokens, or unparseable timestamps, sorts by
timestamp, and removes duplicate timestamps (first occurrence wins). A
separate glitch filter removes readings outside per-parameter plausibility
bounds. Every dropped row is accounted for in a CleaningReport.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Mapping

from .domain import (
    PARAMETERS,
    ParameterKind,
    SensorReading,
    SensorSeries,
    parse_timestamp,
)
from .errors import EmptyDataError, SchemaError, ValidationError


@dataclass(frozen=True)
class ColumnSchema:
    """Maps the timestamp and each parameter to a CSV column name."""

    timestamp: str = "timestamp"
    columns: Mapping[ParameterKind, str] = field(
        default_factory=lambda: {p: p.key for p in PARAMETERS}
    )

    def __post_init__(self) -> None:
        missing = [p.key for p in PARAMETERS if p not in self.columns]
        if missing:
            raise ValidationError(f"schema missing column names for: {missing}")
        names = [self.timestamp] + [self.columns[p] for p in PARAMETERS]
        if len(set(names)) != len(names):
            raise ValidationError(f"schema column names must be distinct, got {names}")


DEFAULT_SCHEMA = ColumnSchema()


@dataclass(frozen=True)
class CleaningReport:
    """Row-level audit of a cleaning pass.

    Conservation invariant: rows_read equals rows_kept plus every dropped
    count, so no input row can vanish unaccounted.
    """

    rows_read: int
    rows_kept: int
    rows_dropped_missing: int = 0
    rows_dropped_nonnumeric: int = 0
    rows_dropped_glitch: int = 0
    duplicate_timestamps_removed: int = 0

    def __post_init__(self) -> None:
        counts = (
            self.rows_kept,
            self.rows_dropped_missing,
            self.rows_dropped_nonnumeric,
            self.rows_dropped_glitch,
            self.duplicate_timestamps_removed,
        )
        if any(c < 0 for c in (self.rows_read, *counts)):
            raise ValidationError("cleaning report counts must be non-negative")
        if self.rows_read != sum(counts):
            raise ValidationError(
                f"cleaning report does not conserve rows: read {self.rows_read}, "
                f"accounted {sum(counts)}"
            )

    def merged(self, later: "CleaningReport") -> "CleaningReport":
        """Combine with a report for a later pass over this pass's survivors."""
        if later.rows_read != self.rows_kept:
            raise ValidationError(
                f"cannot merge: later pass read {later.rows_read} rows, "
                f"earlier pass kept {self.rows_kept}"
            )
        return CleaningReport(
            rows_read=self.rows_read,
            rows_kept=later.rows_kept,
            rows_dropped_missing=self.rows_dropped_missing + later.rows_dropped_missing,
            rows_dropped_nonnumeric=self.rows_dropped_nonnumeric + later.rows_dropped_nonnumeric,
            rows_dropped_glitch=self.rows_dropped_glitch + later.rows_dropped_glitch,
            duplicate_timestamps_removed=self.duplicate_timestamps_removed
            + later.duplicate_timestamps_removed,
        )


def _open_text(source: str | Path | IO[bytes] | IO[str]) -> tuple[IO[str], bool]:
    """Return a text stream plus whether the caller must close it."""
    if isinstance(source, (str, Path)):
        return open(source, newline="", encoding="utf-8"), True
    if isinstance(source, io.TextIOBase):
        return source, False
    return io.TextIOWrapper(source, newline="", encoding="utf-8"), False


def parse_csv(
    source: str | Path | IO[bytes] | IO[str],
    schema: ColumnSchema = DEFAULT_SCHEMA,
) -> tuple[SensorSeries, CleaningReport]:
    """Parse a raw CSV log into a clean, timestamp-sorted SensorSeries.

    Rows with an absent or empty mapped cell count as missing; rows whose
    timestamp or values fail to parse as finite numbers count as
    non-numeric. Output timestamps are strictly increasing regardless of
    input row order; of rows sharing a timestamp, the first in input order
    survives.
    """
    stream, owned = _open_text(source)
    try:
        reader = csv.DictReader(stream)
        if reader.fieldnames is None:
            raise EmptyDataError("CSV source has no header row")
        wanted = [schema.timestamp] + [schema.columns[p] for p in PARAMETERS]
        absent = [name for name in wanted if name not in reader.fieldnames]
        if absent:
            raise SchemaError(f"CSV is missing mapped columns: {absent}")

        rows_read = 0
        dropped_missing = 0
        dropped_nonnumeric = 0
        parsed: list[tuple[object, int, SensorReading]] = []
        for row in reader:
            rows_read += 1
            cells = {name: row.get(name) for name in wanted}
            if any(cell is None or cell.strip() == "" for cell in cells.values()):
                dropped_missing += 1
                continue
            try:
                timestamp = parse_timestamp(cells[schema.timestamp].strip())
                values = {
                    p: float(cells[schema.columns[p]]) for p in PARAMETERS
                }
            except (ValidationError, ValueError):
                dropped_nonnumeric += 1
                continue
            if not all(math.isfinite(v) for v in values.values()):
                dropped_nonnumeric += 1
                continue
            parsed.append(
                (timestamp, rows_read, SensorReading(timestamp=timestamp, values=values))
            )
    finally:
        if owned:
            stream.close()

    # Stable sort on timestamp keeps input order within ties, so the dedupe
    # below keeps the first occurrence.
    parsed.sort(key=lambda item: (item[0], item[1]))
    readings: list[SensorReading] = []
    duplicates = 0
    last = None
    for timestamp, _, reading in parsed:
        if last is not None and timestamp == last:
            duplicates += 1
            continue
        readings.append(reading)
        last = timestamp

    if not readings:
        raise EmptyDataError("no rows survived cleaning")
    report = CleaningReport(
        rows_read=rows_read,
        rows_kept=len(readings),
        rows_dropped_missing=dropped_missing,
        rows_dropped_nonnumeric=dropped_nonnumeric,
        duplicate_timestamps_removed=duplicates,
    )
    return SensorSeries(readings), report


def default_glitch_bounds(
    fixed: Mapping[ParameterKind, float],
) -> dict[ParameterKind, tuple[float, float]]:
    """Plausibility bounds [0, 3 x fixed limit]: wide enough to keep genuine
    critical overshoots, tight enough to shed logger spikes."""
    return {p: (0.0, 3.0 * fixed[p]) for p in fixed}


def filter_glitches(
    series: SensorSeries,
    bounds: Mapping[ParameterKind, tuple[float, float]],
) -> tuple[SensorSeries, CleaningReport]:
    """Drop readings with any value outside its parameter's [min, max].

    Order is preserved and an empty result is allowed; downstream stages
    reject empties themselves.
    """
    for parameter, (low, high) in bounds.items():
        if not (math.isfinite(low) and math.isfinite(high) and low < high):
            raise ValidationError(
                f"glitch bounds for {parameter.key} must be finite with min < max, "
                f"got ({low}, {high})"
            )
    kept: list[SensorReading] = []
    for reading in series:
        ok = all(
            bounds[p][0] <= reading.values[p] <= bounds[p][1]
            for p in bounds
        )
        if ok:
            kept.append(reading)
    report = CleaningReport(
        rows_read=len(series),
        rows_kept=len(kept),
        rows_dropped_glitch=len(series) - len(kept),
    )
    return SensorSeries(kept), report


def write_series_csv(
    series: SensorSeries,
    path: str | Path,
    schema: ColumnSchema = DEFAULT_SCHEMA,
) -> None:
    """Write a series in the raw-log schema (values via repr for exact
    float round-trips)."""
    from .domain import format_timestamp

    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([schema.timestamp] + [schema.columns[p] for p in PARAMETERS])
        for reading in series:
            writer.writerow(
                [format_timestamp(reading.timestamp)]
                + [repr(reading.values[p]) for p in PARAMETERS]
            )
