"""Core value types shared by every pipeline stage.

All types here are immutable after construction and safe to share across
concurrent readers. Timestamps are normalized to UTC at second resolution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import datetime, timezone
from enum import Enum, IntEnum, unique
from functools import cached_property
from typing import Iterable, Iterator, Mapping

import numpy as np

from .errors import ValidationError

TIMESTAMP_FORMAT = "%Y-%m-%dT%H:%M:%SZ"


@unique
class ParameterKind(Enum):
    """The five monitored pump parameters, in canonical order."""

    VIBRATION = ("vibration", "mm/s")
    TEMPERATURE = ("temperature", "°C")
    FLOW = ("flow", "m³/h")
    PRESSURE = ("pressure", "bar")
    CURRENT = ("current", "A")

    def __init__(self, key: str, unit: str) -> None:
        self.key = key
        self.unit = unit

    @classmethod
    def from_key(cls, key: str) -> "ParameterKind":
        try:
            return _PARAMETERS_BY_KEY[key]
        except KeyError:
            raise ValidationError(f"unknown parameter key {key!r}") from None

    def __repr__(self) -> str:  # keep messages short
        return f"ParameterKind.{self.name}"


#: Canonical parameter ordering, stable across all serializations.
PARAMETERS: tuple[ParameterKind, ...] = tuple(ParameterKind)

_PARAMETERS_BY_KEY = {p.key: p for p in PARAMETERS}


class HealthLabel(IntEnum):
    """Health state of one parameter reading; integer value is severity."""

    NORMAL = 0
    EARLY_WARNING = 1
    CRITICAL_ALERT = 2

    @property
    def token(self) -> str:
        """Wire-format name used in CSV/JSON artifacts."""
        return _LABEL_TOKENS[self]

    @classmethod
    def from_token(cls, token: str) -> "HealthLabel":
        try:
            return _LABELS_BY_TOKEN[token]
        except KeyError:
            raise ValidationError(f"unknown health label {token!r}") from None


_LABEL_TOKENS = {
    HealthLabel.NORMAL: "Normal",
    HealthLabel.EARLY_WARNING: "EarlyWarning",
    HealthLabel.CRITICAL_ALERT: "CriticalAlert",
}
_LABELS_BY_TOKEN = {token: label for label, token in _LABEL_TOKENS.items()}

LABELS: tuple[HealthLabel, ...] = tuple(HealthLabel)


def parse_timestamp(text: str) -> datetime:
    """Parse a ``YYYY-MM-DDTHH:MM:SSZ`` timestamp into a UTC datetime."""
    try:
        return datetime.strptime(text, TIMESTAMP_FORMAT).replace(tzinfo=timezone.utc)
    except ValueError:
        raise ValidationError(f"unparseable timestamp {text!r}") from None


def format_timestamp(ts: datetime) -> str:
    return ts.astimezone(timezone.utc).strftime(TIMESTAMP_FORMAT)


def _normalize_timestamp(ts: datetime) -> datetime:
    if ts.tzinfo is None:
        raise ValidationError("timestamps must be timezone-aware")
    ts = ts.astimezone(timezone.utc)
    if ts.microsecond:
        raise ValidationError("timestamps carry second resolution only")
    return ts


@dataclass(frozen=True)
class SensorReading:
    """One multivariate reading: a timestamp, five values, and provenance.

    ``injected`` names the single parameter whose value was synthetically
    overwritten, or is None for real (untouched) readings.
    """

    timestamp: datetime
    values: Mapping[ParameterKind, float]
    injected: ParameterKind | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "timestamp", _normalize_timestamp(self.timestamp))
        vals = dict(self.values)
        missing = [p.key for p in PARAMETERS if p not in vals]
        if missing:
            raise ValidationError(f"reading is missing parameters: {missing}")
        for p, v in vals.items():
            if not isinstance(p, ParameterKind):
                raise ValidationError(f"bad value key {p!r}")
            if not math.isfinite(v):
                raise ValidationError(f"non-finite value for {p.key}: {v!r}")
            vals[p] = float(v)
        object.__setattr__(self, "values", vals)

    def value(self, parameter: ParameterKind) -> float:
        return self.values[parameter]

    def with_value(
        self, parameter: ParameterKind, value: float, *, injected: bool = False
    ) -> "SensorReading":
        """Return a copy with one parameter overwritten."""
        vals = dict(self.values)
        vals[parameter] = value
        return SensorReading(
            timestamp=self.timestamp,
            values=vals,
            injected=parameter if injected else self.injected,
        )

    def to_dict(self) -> dict:
        out: dict = {"timestamp": format_timestamp(self.timestamp)}
        for p in PARAMETERS:
            out[p.key] = self.values[p]
        out["injected"] = self.injected.key if self.injected else None
        return out

    @classmethod
    def from_dict(cls, data: Mapping) -> "SensorReading":
        injected = data.get("injected")
        return cls(
            timestamp=parse_timestamp(data["timestamp"]),
            values={p: float(data[p.key]) for p in PARAMETERS},
            injected=ParameterKind.from_key(injected) if injected else None,
        )


class SensorSeries:
    """A time-ordered sequence of readings with strictly increasing timestamps."""

    def __init__(self, readings: Iterable[SensorReading]):
        readings = tuple(readings)
        for prev, cur in zip(readings, readings[1:]):
            if cur.timestamp <= prev.timestamp:
                raise ValidationError(
                    f"timestamps not strictly increasing at {format_timestamp(cur.timestamp)}"
                )
        self._readings = readings

    def __len__(self) -> int:
        return len(self._readings)

    def __iter__(self) -> Iterator[SensorReading]:
        return iter(self._readings)

    def __getitem__(self, index: int) -> SensorReading:
        return self._readings[index]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SensorSeries):
            return NotImplemented
        return self._readings == other._readings

    def __repr__(self) -> str:
        return f"SensorSeries(n={len(self._readings)})"

    @property
    def readings(self) -> tuple[SensorReading, ...]:
        return self._readings

    @cached_property
    def _columns(self) -> dict[ParameterKind, np.ndarray]:
        cols = {p: np.empty(len(self._readings)) for p in PARAMETERS}
        for i, r in enumerate(self._readings):
            for p in PARAMETERS:
                cols[p][i] = r.values[p]
        for arr in cols.values():
            arr.flags.writeable = False
        return cols

    def column(self, parameter: ParameterKind) -> np.ndarray:
        """Values of one parameter, in time order (read-only view)."""
        return self._columns[parameter]

    def feature_matrix(self) -> np.ndarray:
        """(N, 5) matrix with columns in canonical parameter order."""
        return np.column_stack([self.column(p) for p in PARAMETERS])

    @property
    def timestamps(self) -> tuple[datetime, ...]:
        return tuple(r.timestamp for r in self._readings)

    def injected_indices(self, parameter: ParameterKind | None = None) -> list[int]:
        """Indices of injected readings, optionally for one parameter."""
        return [
            i
            for i, r in enumerate(self._readings)
            if r.injected is not None and (parameter is None or r.injected is parameter)
        ]

    def to_records(self) -> list[dict]:
        return [r.to_dict() for r in self._readings]

    @classmethod
    def from_records(cls, records: Iterable[Mapping]) -> "SensorSeries":
        return cls(SensorReading.from_dict(r) for r in records)


@dataclass(frozen=True)
class ThresholdPair:
    """Per-parameter alarm limits: a fixed engineering limit and an
    adaptive (percentile-derived) limit, with adaptive <= fixed."""

    parameter: ParameterKind
    fixed: float
    adaptive: float

    def __post_init__(self) -> None:
        for name, v in (("fixed", self.fixed), ("adaptive", self.adaptive)):
            if not math.isfinite(v) or v <= 0.0:
                raise ValidationError(
                    f"{name} threshold for {self.parameter.key} must be finite and positive, got {v!r}"
                )
        if self.adaptive > self.fixed:
            raise ValidationError(
                f"adaptive threshold exceeds fixed for {self.parameter.key}: "
                f"{self.adaptive!r} > {self.fixed!r}"
            )

    def to_dict(self) -> dict:
        return {"parameter": self.parameter.key, "fixed": self.fixed, "adaptive": self.adaptive}

    @classmethod
    def from_dict(cls, data: Mapping) -> "ThresholdPair":
        return cls(
            parameter=ParameterKind.from_key(data["parameter"]),
            fixed=float(data["fixed"]),
            adaptive=float(data["adaptive"]),
        )
