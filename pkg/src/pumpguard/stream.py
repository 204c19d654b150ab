"""Replay of a sensor series through thresholds and trained models.

Each reading is scored on both channels: the dual-threshold rule and every
trained model for that parameter. An AlertEvent is emitted per (reading,
parameter) whenever either channel reports non-Normal. Pacing stretches
wall-clock time between readings by the speed multiplier; the event
sequence itself is a pure function of the inputs.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass
from datetime import datetime
from enum import Enum
from typing import Iterator, Mapping, Union

import numpy as np

from .domain import (
    PARAMETERS,
    HealthLabel,
    ParameterKind,
    SensorSeries,
    ThresholdPair,
    format_timestamp,
)
from .errors import ContractError, ValidationError
from .models.boosting import BoostedModel
from .models.forest import ForestModel
from .models.svm import SvmModel
from .thresholds import label_value

AnyModel = Union[ForestModel, BoostedModel, SvmModel]

#: Replay speed for "as fast as possible" (no pacing).
INSTANT = "instant"


class EventSource(Enum):
    THRESHOLD = "Threshold"
    MODEL = "Model"


@dataclass(frozen=True)
class AlertEvent:
    timestamp: datetime
    parameter: ParameterKind
    value: float
    threshold_label: HealthLabel
    model_labels: Mapping[str, HealthLabel]
    source: EventSource

    def to_dict(self) -> dict:
        return {
            "timestamp": format_timestamp(self.timestamp),
            "parameter": self.parameter.key,
            "value": self.value,
            "threshold_label": self.threshold_label.token,
            "model_labels": {k: v.token for k, v in self.model_labels.items()},
            "source": self.source.value,
        }

    def to_json_line(self) -> str:
        return json.dumps(self.to_dict())


def _feature_slice(
    features: np.ndarray, parameter: ParameterKind, n_features: int
) -> np.ndarray:
    if n_features == features.shape[1]:
        return features
    if n_features == 1:
        return features[:, PARAMETERS.index(parameter) : PARAMETERS.index(parameter) + 1]
    raise ContractError(
        f"model for {parameter.key} expects {n_features} features, "
        f"series provides {features.shape[1]} (or 1 in univariate mode)"
    )


def replay(
    series: SensorSeries,
    thresholds: Mapping[ParameterKind, ThresholdPair],
    models: Mapping[ParameterKind, Mapping[str, AnyModel]] | None = None,
    speed: float | str = INSTANT,
) -> Iterator[AlertEvent]:
    """Yield alert events in timestamp order.

    speed is a positive multiplier (10 replays ten times faster than the
    recorded timestamps) or "instant" for no pacing. Consumers are served
    synchronously: a slow consumer delays the replay clock, it never
    drops events. Model/feature mismatches are rejected here, before the
    first event (the emitting generator is created only after validation).
    """
    if speed != INSTANT:
        if not isinstance(speed, (int, float)) or speed <= 0:
            raise ValidationError(f"speed must be a positive number or 'instant', got {speed!r}")
    missing = [p.key for p in PARAMETERS if p not in thresholds]
    if missing:
        raise ValidationError(f"thresholds missing for parameters: {missing}")
    models = models or {}

    features = series.feature_matrix()
    predictions: dict[ParameterKind, dict[str, np.ndarray]] = {}
    for parameter, kinds in models.items():
        predictions[parameter] = {}
        for kind, model in kinds.items():
            sliced = _feature_slice(features, parameter, model.n_features)
            predictions[parameter][kind] = model.predict_many(sliced)
    return _emit(series, thresholds, predictions, speed)


def _emit(
    series: SensorSeries,
    thresholds: Mapping[ParameterKind, ThresholdPair],
    predictions: Mapping[ParameterKind, Mapping[str, np.ndarray]],
    speed: float | str,
) -> Iterator[AlertEvent]:
    previous: datetime | None = None
    for i, reading in enumerate(series):
        if speed != INSTANT and previous is not None:
            gap = (reading.timestamp - previous).total_seconds() / float(speed)
            if gap > 0:
                time.sleep(gap)
        previous = reading.timestamp
        for parameter in PARAMETERS:
            value = reading.values[parameter]
            threshold_label = label_value(value, thresholds[parameter])
            model_labels = {
                kind: HealthLabel(int(preds[i]))
                for kind, preds in predictions.get(parameter, {}).items()
            }
            if threshold_label is HealthLabel.NORMAL and all(
                label is HealthLabel.NORMAL for label in model_labels.values()
            ):
                continue
            source = (
                EventSource.THRESHOLD
                if threshold_label is not HealthLabel.NORMAL
                else EventSource.MODEL
            )
            yield AlertEvent(
                timestamp=reading.timestamp,
                parameter=parameter,
                value=value,
                threshold_label=threshold_label,
                model_labels=model_labels,
                source=source,
            )


def write_events_jsonl(events, path) -> int:
    """Write events one JSON object per line; returns the event count."""
    count = 0
    with open(path, "w", encoding="utf-8") as fh:
        for event in events:
            fh.write(event.to_json_line() + "\n")
            count += 1
    return count
