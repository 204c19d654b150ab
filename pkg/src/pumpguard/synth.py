"""Seeded synthetic baseline generation and critical-alert injection.

Baselines are stationary AR(1) processes per parameter, calibrated so the
sample 95th percentile lands on the published adaptive thresholds while
staying far below the fixed limits. Injection overwrites isolated readings
with values 15-35% above the fixed limit, one parameter per reading.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .domain import (
    PARAMETERS,
    ParameterKind,
    SensorReading,
    SensorSeries,
)
from .errors import CapacityError, PersistenceError, ValidationError
from .seeds import derive_seed

#: Standard normal 95th-percentile point; P95 of N(mean, stddev^2) is
#: mean + Z95 * stddev.
Z95 = 1.6448536269514722

#: Adaptive-threshold calibration targets per parameter.
DEFAULT_P95_TARGETS: Mapping[ParameterKind, float] = {
    ParameterKind.VIBRATION: 1.64,
    ParameterKind.TEMPERATURE: 55.01,
    ParameterKind.FLOW: 2666.74,
    ParameterKind.PRESSURE: 4.77,
    ParameterKind.CURRENT: 231.89,
}


@dataclass(frozen=True)
class ParameterProcess:
    """Stationary AR(1) marginal spec: values ~ N(mean, stddev^2) with
    lag-1 autocorrelation ar_coefficient."""

    mean: float
    stddev: float
    ar_coefficient: float

    def __post_init__(self) -> None:
        for name in ("mean", "stddev", "ar_coefficient"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and math.isfinite(value)):
                raise ValidationError(f"process {name} must be finite, got {value!r}")
        if self.stddev <= 0:
            raise ValidationError(f"process stddev must be > 0, got {self.stddev}")
        if not 0.0 <= self.ar_coefficient < 1.0:
            raise ValidationError(
                f"ar_coefficient must lie in [0, 1), got {self.ar_coefficient}"
            )


def default_processes() -> dict[ParameterKind, ParameterProcess]:
    """Calibrated baseline processes.

    Means sit well below the fixed limits (>= 4.9 standard deviations of
    margin) and stddevs are solved from the P95 targets, so clean runs
    produce zero fixed-limit alerts while the sample P95 tracks the
    published adaptive thresholds.
    """
    means = {
        ParameterKind.VIBRATION: 1.25,
        ParameterKind.TEMPERATURE: 50.0,
        ParameterKind.FLOW: 2600.0,
        ParameterKind.PRESSURE: 4.30,
        ParameterKind.CURRENT: 228.0,
    }
    ar = {
        ParameterKind.VIBRATION: 0.70,
        ParameterKind.TEMPERATURE: 0.90,
        ParameterKind.FLOW: 0.85,
        ParameterKind.PRESSURE: 0.85,
        ParameterKind.CURRENT: 0.80,
    }
    return {
        p: ParameterProcess(
            mean=means[p],
            stddev=(DEFAULT_P95_TARGETS[p] - means[p]) / Z95,
            ar_coefficient=ar[p],
        )
        for p in PARAMETERS
    }


DEFAULT_START = datetime(2024, 1, 1, tzinfo=timezone.utc)
DEFAULT_INTERVAL_SECONDS = 60


@dataclass(frozen=True)
class GeneratorConfig:
    sample_count: int = 5000
    start_timestamp: datetime = DEFAULT_START
    interval_seconds: int = DEFAULT_INTERVAL_SECONDS
    master_seed: int = 42
    processes: Mapping[ParameterKind, ParameterProcess] = field(
        default_factory=default_processes
    )

    def __post_init__(self) -> None:
        if self.sample_count < 100:
            raise ValidationError(
                f"sample_count must be >= 100, got {self.sample_count}"
            )
        if self.interval_seconds < 1:
            raise ValidationError(
                f"interval_seconds must be >= 1, got {self.interval_seconds}"
            )
        if not isinstance(self.master_seed, int) or self.master_seed < 0:
            raise ValidationError(f"master_seed must be a non-negative int")
        missing = [p.key for p in PARAMETERS if p not in self.processes]
        if missing:
            raise ValidationError(f"processes missing for parameters: {missing}")


def generate(config: GeneratorConfig) -> SensorSeries:
    """Generate a seeded AR(1) baseline series.

    Each parameter draws from an independent sub-seeded stream, so the
    output is identical whether parameters are generated serially or
    concurrently.
    """
    n = config.sample_count
    columns: dict[ParameterKind, np.ndarray] = {}
    for parameter in PARAMETERS:
        process = config.processes[parameter]
        rng = np.random.default_rng(
            derive_seed(config.master_seed, "baseline", parameter.key)
        )
        shocks = rng.standard_normal(n)
        values = np.empty(n)
        # First sample from the stationary marginal, then the recurrence
        # x[t] = mean + ar * (x[t-1] - mean) + innovation; the innovation
        # scale stddev * sqrt(1 - ar^2) keeps the marginal variance at
        # stddev^2 for every t.
        values[0] = process.mean + process.stddev * shocks[0]
        scale = process.stddev * math.sqrt(1.0 - process.ar_coefficient**2)
        for t in range(1, n):
            values[t] = (
                process.mean
                + process.ar_coefficient * (values[t - 1] - process.mean)
                + scale * shocks[t]
            )
        columns[parameter] = values

    start = config.start_timestamp.timestamp()
    readings = [
        SensorReading(
            timestamp=datetime.fromtimestamp(
                start + i * config.interval_seconds, tz=timezone.utc
            ),
            values={p: float(columns[p][i]) for p in PARAMETERS},
        )
        for i in range(n)
    ]
    return SensorSeries(readings)


@dataclass(frozen=True)
class InjectionSpec:
    count_per_parameter: int = 10
    overshoot_range: tuple[float, float] = (0.15, 0.35)
    min_gap: int = 10
    seed: int = 42

    def __post_init__(self) -> None:
        if self.count_per_parameter < 0:
            raise ValidationError(
                f"count_per_parameter must be >= 0, got {self.count_per_parameter}"
            )
        low, high = self.overshoot_range
        if not (0.0 < low < high):
            raise ValidationError(
                f"overshoot_range must satisfy 0 < low < high, got {self.overshoot_range}"
            )
        if self.min_gap < 0:
            raise ValidationError(f"min_gap must be >= 0, got {self.min_gap}")


@dataclass(frozen=True)
class InjectionRecord:
    index: int
    parameter: ParameterKind
    original_value: float
    injected_value: float


@dataclass(frozen=True)
class InjectionLog:
    records: tuple[InjectionRecord, ...]

    def __post_init__(self) -> None:
        indices = [r.index for r in self.records]
        if len(set(indices)) != len(indices):
            raise ValidationError("injection log has duplicate indices")

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def to_json(self) -> str:
        return json.dumps(
            [
                {
                    "index": r.index,
                    "parameter": r.parameter.key,
                    "original": r.original_value,
                    "injected": r.injected_value,
                }
                for r in self.records
            ],
            indent=2,
        )

    @classmethod
    def from_json(cls, text: str) -> "InjectionLog":
        try:
            raw = json.loads(text)
            records = tuple(
                InjectionRecord(
                    index=int(entry["index"]),
                    parameter=ParameterKind.from_key(entry["parameter"]),
                    original_value=float(entry["original"]),
                    injected_value=float(entry["injected"]),
                )
                for entry in raw
            )
        except (ValueError, KeyError, TypeError) as exc:
            raise PersistenceError(f"malformed injection log: {exc}") from exc
        return cls(records=records)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json() + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "InjectionLog":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))


def mark_injected(series: SensorSeries, log: InjectionLog) -> SensorSeries:
    """Re-apply injection provenance to a series reloaded from disk.

    The raw CSV schema does not carry provenance, so a reloaded injected
    series is re-marked from its log; each logged value must match the
    stored reading exactly, otherwise the log belongs to different data.
    """
    readings = list(series.readings)
    for record in log:
        if record.index >= len(readings):
            raise ValidationError(
                f"injection log index {record.index} is outside the series"
            )
        reading = readings[record.index]
        if reading.values[record.parameter] != record.injected_value:
            raise ValidationError(
                f"injection log does not match series at index {record.index}: "
                f"logged {record.injected_value!r}, "
                f"found {reading.values[record.parameter]!r}"
            )
        readings[record.index] = SensorReading(
            timestamp=reading.timestamp,
            values=reading.values,
            injected=record.parameter,
        )
    return SensorSeries(readings)


def inject(
    series: SensorSeries,
    spec: InjectionSpec,
    thresholds: Mapping[ParameterKind, float],
) -> tuple[SensorSeries, InjectionLog]:
    """Overwrite isolated readings with fixed-limit overshoots.

    The series is cut into count_per_parameter x 5 equal strata; each
    stratum receives exactly one injection at a random in-stratum offset
    capped so consecutive injections stay >= min_gap samples apart, and
    strata are dealt to parameters by a random permutation. The injected
    value replaces the original: uniform in
    [(1 + low) * fixed, (1 + high) * fixed].
    """
    missing = [p.key for p in PARAMETERS if p not in thresholds]
    if missing:
        raise ValidationError(f"fixed thresholds missing for parameters: {missing}")
    if spec.count_per_parameter == 0:
        return series, InjectionLog(records=())

    n = len(series)
    slots = spec.count_per_parameter * len(PARAMETERS)
    if n <= slots * spec.min_gap or n < slots:
        raise CapacityError(
            f"series of {n} samples cannot hold {slots} injections "
            f"with min_gap {spec.min_gap}"
        )
    width = n // slots
    rng = np.random.default_rng(spec.seed)
    # Offsets in [0, width - min_gap] make consecutive picks differ by at
    # least width - (width - min_gap) = min_gap.
    offsets = rng.integers(0, width - spec.min_gap + 1, size=slots)
    assignment = rng.permutation(slots)

    low, high = spec.overshoot_range
    readings = list(series.readings)
    records: list[InjectionRecord] = []
    for slot in range(slots):
        index = slot * width + int(offsets[slot])
        parameter = PARAMETERS[assignment[slot] // spec.count_per_parameter]
        limit = float(thresholds[parameter])
        value = limit * (1.0 + rng.uniform(low, high))
        original = readings[index].values[parameter]
        readings[index] = readings[index].with_value(parameter, value, injected=True)
        records.append(
            InjectionRecord(
                index=index,
                parameter=parameter,
                original_value=original,
                injected_value=value,
            )
        )
    return SensorSeries(readings), InjectionLog(records=tuple(records))
