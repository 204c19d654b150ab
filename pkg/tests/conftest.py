"""Shared builders for the test suite.

Most tests construct their own tiny inputs; the fixtures here cover the
two things nearly every file needs: a configurable in-memory series and
a pipeline config small enough to run end to end in a couple seconds.
"""

from __future__ import annotations

from datetime import datetime, timedelta, timezone

import numpy as np
import pytest

from pumpguard.config import GeneratorSettings, InjectionSettings, PipelineConfig
from pumpguard.domain import PARAMETERS, ParameterKind, SensorReading, SensorSeries
from pumpguard.models import ForestConfig, GbtConfig, TreeParams

START = datetime(2024, 1, 1, tzinfo=timezone.utc)

# A quiet operating point, comfortably below every default threshold.
BASELINE = {
    ParameterKind.VIBRATION: 1.2,
    ParameterKind.TEMPERATURE: 50.0,
    ParameterKind.FLOW: 2600.0,
    ParameterKind.PRESSURE: 4.3,
    ParameterKind.CURRENT: 228.0,
}


def build_series(
    n: int,
    jitter: float = 0.0,
    seed: int = 0,
    overrides: dict[int, dict[ParameterKind, float]] | None = None,
    interval: int = 60,
) -> SensorSeries:
    """n readings at the baseline point, optionally jittered or overridden.

    jitter is a relative noise scale; overrides maps reading index to
    {parameter: value} replacements applied after the noise.
    """
    rng = np.random.default_rng(seed)
    overrides = overrides or {}
    readings = []
    for i in range(n):
        values = {}
        for parameter in PARAMETERS:
            value = BASELINE[parameter]
            if jitter:
                value += rng.normal(0.0, jitter * value)
            values[parameter] = value
        values.update(overrides.get(i, {}))
        readings.append(SensorReading(START + timedelta(seconds=interval * i), values))
    return SensorSeries(readings)


@pytest.fixture
def series_factory():
    return build_series


@pytest.fixture
def quick_config(tmp_path):
    """A full pipeline config sized for fast end-to-end CLI tests."""
    return PipelineConfig(
        seed=42,
        out_dir=str(tmp_path / "out"),
        generator=GeneratorSettings(sample_count=240),
        injection=InjectionSettings(count_per_parameter=2, min_gap=5),
        forest=ForestConfig(n_trees=5, tree=TreeParams(max_depth=8)),
        gbt=GbtConfig(n_rounds=8),
        svm_epochs=25,
    )
