"""Pump condition monitoring: dual-threshold labeling, from-scratch
classifiers, and a reproducible synthetic-data pipeline."""

from .domain import (
    LABELS,
    PARAMETERS,
    HealthLabel,
    ParameterKind,
    SensorReading,
    SensorSeries,
    ThresholdPair,
)
from .errors import PumpguardError

__version__ = "1.0.0"

__all__ = [
    "HealthLabel",
    "LABELS",
    "PARAMETERS",
    "ParameterKind",
    "PumpguardError",
    "SensorReading",
    "SensorSeries",
    "ThresholdPair",
    "__version__",
]
