"""Adaptive percentile thresholds and dual-threshold health labeling.

Each reading of each parameter is labeled against a ThresholdPair:
CriticalAlert above the fixed engineering limit, EarlyWarning above the
adaptive (95th-percentile) limit, Normal otherwise.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .domain import (
    PARAMETERS,
    HealthLabel,
    ParameterKind,
    SensorReading,
    SensorSeries,
    ThresholdPair,
    format_timestamp,
    parse_timestamp,
)
from .errors import (
    DataError,
    EmptyDataError,
    PersistenceError,
    SchemaError,
    ValidationError,
)

logger = logging.getLogger(__name__)

#: Stock fixed engineering limits per parameter (overridable in config).
DEFAULT_FIXED_THRESHOLDS: Mapping[ParameterKind, float] = {
    ParameterKind.VIBRATION: 5.0,
    ParameterKind.TEMPERATURE: 80.0,
    ParameterKind.FLOW: 2800.0,
    ParameterKind.PRESSURE: 6.0,
    ParameterKind.CURRENT: 240.0,
}

DEFAULT_PERCENTILE = 0.95


def percentile(values: Sequence[float] | np.ndarray, p: float) -> float:
    """p-quantile with linear interpolation between order statistics.

    With sorted values v[0..n-1] and rank h = (n-1)*p, returns
    v[floor(h)] + (h - floor(h)) * (v[floor(h)+1] - v[floor(h)]).
    """
    if not (isinstance(p, (int, float)) and math.isfinite(p) and 0.0 <= p <= 1.0):
        raise DataError(f"percentile fraction must lie in [0, 1], got {p!r}")
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise DataError("percentile requires a non-empty 1-D sequence")
    if not np.isfinite(arr).all():
        raise DataError("percentile input contains non-finite values")
    ordered = np.sort(arr)
    h = (ordered.size - 1) * float(p)
    lo = math.floor(h)
    if lo >= ordered.size - 1:
        return float(ordered[-1])
    frac = h - lo
    return float(ordered[lo] + frac * (ordered[lo + 1] - ordered[lo]))


def compute_thresholds(
    series: SensorSeries,
    fixed: Mapping[ParameterKind, float],
    *,
    p: float = DEFAULT_PERCENTILE,
    rolling_window: int | None = None,
) -> dict[ParameterKind, ThresholdPair]:
    """Build a ThresholdPair per parameter from the series history.

    The adaptive limit is the in-sample p-quantile, clamped down to the
    fixed limit if it lands above it (the EarlyWarning band is then empty).
    ``rolling_window`` restricts the history to the trailing N samples.
    """
    if len(series) == 0:
        raise EmptyDataError("cannot compute thresholds for an empty series")
    if rolling_window is not None and rolling_window < 1:
        raise ValidationError(f"rolling_window must be >= 1, got {rolling_window}")
    pairs: dict[ParameterKind, ThresholdPair] = {}
    for parameter, limit in fixed.items():
        values = series.column(parameter)
        if rolling_window is not None:
            values = values[-rolling_window:]
        raw = percentile(values, p)
        adaptive = raw
        if raw > limit:
            logger.warning(
                "adaptive threshold %.6g exceeds fixed limit %.6g for %s; "
                "clamping (EarlyWarning band is empty)",
                raw,
                limit,
                parameter.key,
            )
            adaptive = limit
        pairs[parameter] = ThresholdPair(parameter=parameter, fixed=float(limit), adaptive=adaptive)
    return pairs


def label_value(x: float, pair: ThresholdPair) -> HealthLabel:
    """Dual-threshold classification of a single value."""
    if x > pair.fixed:
        return HealthLabel.CRITICAL_ALERT
    if x > pair.adaptive:
        return HealthLabel.EARLY_WARNING
    return HealthLabel.NORMAL


def _label_array(values: np.ndarray, pair: ThresholdPair) -> np.ndarray:
    labels = np.full(values.shape, HealthLabel.NORMAL.value, dtype=np.int8)
    labels[values > pair.adaptive] = HealthLabel.EARLY_WARNING.value
    labels[values > pair.fixed] = HealthLabel.CRITICAL_ALERT.value
    return labels


@dataclass(frozen=True, eq=False)
class LabeledSeries:
    """A series plus per-reading, per-parameter health labels.

    Labels are reproducible from the stored values and thresholds; this is
    checked at construction time.
    """

    base: SensorSeries
    labels: Mapping[ParameterKind, np.ndarray]
    thresholds_used: Mapping[ParameterKind, ThresholdPair]

    def __post_init__(self) -> None:
        for parameter in PARAMETERS:
            if parameter not in self.labels or parameter not in self.thresholds_used:
                raise ValidationError(f"labels missing for parameter {parameter.key}")
            got = np.asarray(self.labels[parameter], dtype=np.int8)
            if got.shape != (len(self.base),):
                raise ValidationError(f"label array shape mismatch for {parameter.key}")
            expected = _label_array(self.base.column(parameter), self.thresholds_used[parameter])
            if not np.array_equal(got, expected):
                raise ValidationError(
                    f"labels for {parameter.key} are not reproducible from the stored thresholds"
                )

    def __len__(self) -> int:
        return len(self.base)

    def label_at(self, index: int, parameter: ParameterKind) -> HealthLabel:
        return HealthLabel(int(self.labels[parameter][index]))

    def label_counts(self, parameter: ParameterKind) -> np.ndarray:
        """Counts of (Normal, EarlyWarning, CriticalAlert) for one parameter."""
        return np.bincount(self.labels[parameter], minlength=3)


@dataclass(frozen=True)
class AlertCounts:
    critical: int
    early_warning: int


@dataclass(frozen=True)
class AlertSummary:
    """Per-parameter exceedance tallies for both alarm channels."""

    counts: Mapping[ParameterKind, AlertCounts]

    def fixed_alerts(self, parameter: ParameterKind) -> int:
        return self.counts[parameter].critical

    def adaptive_alerts(self, parameter: ParameterKind) -> int:
        # A critical value sits above both limits, so it fires the
        # adaptive channel too.
        tally = self.counts[parameter]
        return tally.early_warning + tally.critical


def label_series(
    series: SensorSeries, thresholds: Mapping[ParameterKind, ThresholdPair]
) -> tuple[LabeledSeries, AlertSummary]:
    """Label every (reading, parameter) pair and tally the exceedances."""
    missing = [p.key for p in PARAMETERS if p not in thresholds]
    if missing:
        raise ValidationError(f"thresholds missing for parameters: {missing}")
    labels: dict[ParameterKind, np.ndarray] = {}
    counts: dict[ParameterKind, AlertCounts] = {}
    for parameter in PARAMETERS:
        arr = _label_array(series.column(parameter), thresholds[parameter])
        labels[parameter] = arr
        counts[parameter] = AlertCounts(
            critical=int(np.sum(arr == HealthLabel.CRITICAL_ALERT.value)),
            early_warning=int(np.sum(arr == HealthLabel.EARLY_WARNING.value)),
        )
    labeled = LabeledSeries(base=series, labels=labels, thresholds_used=dict(thresholds))
    return labeled, AlertSummary(counts=counts)


# --- file formats -----------------------------------------------------------

_LABEL_COLUMNS = [f"{p.key}_label" for p in PARAMETERS]
LABELED_CSV_COLUMNS = (
    ["timestamp"] + [p.key for p in PARAMETERS] + _LABEL_COLUMNS + ["injected"]
)

ALERT_SUMMARY_COLUMNS = [
    "parameter",
    "fixed_threshold",
    "adaptive_threshold",
    "fixed_alerts",
    "adaptive_alerts",
]


def write_labeled_csv(labeled: LabeledSeries, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(LABELED_CSV_COLUMNS)
        for i, reading in enumerate(labeled.base):
            row = [format_timestamp(reading.timestamp)]
            row += [repr(reading.values[p]) for p in PARAMETERS]
            row += [labeled.label_at(i, p).token for p in PARAMETERS]
            row.append(reading.injected.key if reading.injected else "")
            writer.writerow(row)


def read_labeled_csv(
    path: str | Path, thresholds: Mapping[ParameterKind, ThresholdPair]
) -> LabeledSeries:
    """Rebuild a LabeledSeries from a labeled CSV plus its thresholds."""
    readings: list[SensorReading] = []
    labels: dict[ParameterKind, list[int]] = {p: [] for p in PARAMETERS}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = set(LABELED_CSV_COLUMNS) - set(reader.fieldnames or [])
        if missing:
            raise SchemaError(f"labeled CSV is missing columns: {sorted(missing)}")
        for row in reader:
            injected = row["injected"]
            readings.append(
                SensorReading(
                    timestamp=parse_timestamp(row["timestamp"]),
                    values={p: float(row[p.key]) for p in PARAMETERS},
                    injected=ParameterKind.from_key(injected) if injected else None,
                )
            )
            for p in PARAMETERS:
                labels[p].append(HealthLabel.from_token(row[f"{p.key}_label"]).value)
    if not readings:
        raise EmptyDataError(f"labeled CSV {path} contains no rows")
    return LabeledSeries(
        base=SensorSeries(readings),
        labels={p: np.asarray(labels[p], dtype=np.int8) for p in PARAMETERS},
        thresholds_used=dict(thresholds),
    )


def write_thresholds_json(
    thresholds: Mapping[ParameterKind, ThresholdPair],
    path: str | Path,
    *,
    percentile_used: float = DEFAULT_PERCENTILE,
) -> None:
    document = {
        "version": 1,
        "percentile": percentile_used,
        "pairs": {
            p.key: {"fixed": thresholds[p].fixed, "adaptive": thresholds[p].adaptive}
            for p in PARAMETERS
        },
    }
    Path(path).write_text(json.dumps(document, indent=2) + "\n", encoding="utf-8")


def read_thresholds_json(path: str | Path) -> dict[ParameterKind, ThresholdPair]:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        if raw.get("version") != 1:
            raise PersistenceError(
                f"thresholds file {path} has unsupported version {raw.get('version')!r}"
            )
        return {
            ParameterKind.from_key(key): ThresholdPair(
                parameter=ParameterKind.from_key(key),
                fixed=float(entry["fixed"]),
                adaptive=float(entry["adaptive"]),
            )
            for key, entry in raw["pairs"].items()
        }
    except (ValueError, KeyError, TypeError, AttributeError) as exc:
        raise PersistenceError(f"malformed thresholds file {path}: {exc}") from exc


def write_alert_summary_csv(
    summary: AlertSummary,
    thresholds: Mapping[ParameterKind, ThresholdPair],
    path: str | Path,
) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(ALERT_SUMMARY_COLUMNS)
        for parameter in PARAMETERS:
            pair = thresholds[parameter]
            writer.writerow(
                [
                    parameter.key,
                    repr(pair.fixed),
                    repr(pair.adaptive),
                    summary.fixed_alerts(parameter),
                    summary.adaptive_alerts(parameter),
                ]
            )
