"""Dual-threshold labeling and the adaptive percentile.

The percentile oracle here is deliberately written against sorted()
lists rather than numpy so the two routes share no code.
"""

import logging
import math

import numpy as np
import pytest

from pumpguard.domain import (
    PARAMETERS,
    HealthLabel,
    ParameterKind,
    SensorSeries,
    ThresholdPair,
)
from pumpguard.errors import DataError, PersistenceError, ValidationError
from pumpguard.thresholds import (
    DEFAULT_FIXED_THRESHOLDS,
    LabeledSeries,
    compute_thresholds,
    label_series,
    label_value,
    percentile,
    read_labeled_csv,
    read_thresholds_json,
    write_alert_summary_csv,
    write_labeled_csv,
    write_thresholds_json,
)

from conftest import build_series


def sorted_percentile(values, p):
    """Independent linear-interpolation percentile on a sorted copy."""
    data = sorted(float(v) for v in values)
    if len(data) == 1:
        return data[0]
    h = (len(data) - 1) * p
    lo = math.floor(h)
    hi = min(lo + 1, len(data) - 1)
    return data[lo] + (h - lo) * (data[hi] - data[lo])


def brute_force_label(x, fixed, adaptive):
    """Independent restatement of the two-threshold decision rule."""
    if x > fixed:
        return HealthLabel.CRITICAL_ALERT
    if x > adaptive:
        return HealthLabel.EARLY_WARNING
    return HealthLabel.NORMAL


def test_default_fixed_thresholds_catalog():
    assert DEFAULT_FIXED_THRESHOLDS == {
        ParameterKind.VIBRATION: 5.0,
        ParameterKind.TEMPERATURE: 80.0,
        ParameterKind.FLOW: 2800.0,
        ParameterKind.PRESSURE: 6.0,
        ParameterKind.CURRENT: 240.0,
    }


def test_percentile_hand_examples():
    assert percentile([7.25, 7.25, 7.25], 0.1) == 7.25
    assert percentile([7.25, 7.25, 7.25], 0.95) == 7.25
    assert percentile([5.0, 1.0, 4.0, 2.0, 3.0], 0.5) == 3.0
    assert percentile([1.0, 2.0], 1.0) == 2.0
    assert percentile([1.0, 2.0], 0.0) == 1.0
    assert percentile([4.0], 0.37) == 4.0


def test_percentile_against_sort_oracle():
    rng = np.random.default_rng(17)
    for _ in range(100):
        n = int(rng.integers(1, 2000))
        values = rng.uniform(-50.0, 50.0, size=n)
        p = float(rng.uniform(0.0, 1.0))
        assert abs(percentile(values, p) - sorted_percentile(values, p)) < 1e-12


def test_percentile_input_validation():
    with pytest.raises(DataError):
        percentile([], 0.5)
    with pytest.raises(DataError):
        percentile([1.0, float("nan")], 0.5)
    with pytest.raises(DataError):
        percentile([1.0, 2.0], 1.5)


def test_label_value_boundary_examples():
    pair = ThresholdPair(ParameterKind.PRESSURE, fixed=6.0, adaptive=4.77)
    assert label_value(7.0, pair) is HealthLabel.CRITICAL_ALERT
    assert label_value(6.0, pair) is HealthLabel.EARLY_WARNING  # at the fixed limit
    assert label_value(4.77, pair) is HealthLabel.NORMAL  # at the adaptive limit
    assert label_value(5.0, pair) is HealthLabel.EARLY_WARNING
    assert label_value(0.1, pair) is HealthLabel.NORMAL


def test_label_value_matches_brute_force():
    rng = np.random.default_rng(29)
    for parameter in PARAMETERS:
        fixed = DEFAULT_FIXED_THRESHOLDS[parameter]
        pair = ThresholdPair(parameter, fixed=fixed, adaptive=0.8 * fixed)
        xs = rng.uniform(0.0, 1.5 * fixed, size=2000)
        xs = np.append(xs, [pair.adaptive, pair.fixed, pair.fixed * 1.0000001])
        for x in xs:
            assert label_value(float(x), pair) is brute_force_label(
                float(x), pair.fixed, pair.adaptive
            )


def test_label_severity_is_monotone_in_value():
    pair = ThresholdPair(ParameterKind.FLOW, fixed=2800.0, adaptive=2666.74)
    rng = np.random.default_rng(31)
    xs = np.sort(rng.uniform(2000.0, 3500.0, size=500))
    labels = [label_value(float(x), pair) for x in xs]
    assert all(a <= b for a, b in zip(labels, labels[1:]))


def test_constant_series_adaptive_equals_constant():
    series = build_series(200, overrides={})
    pairs = compute_thresholds(series, DEFAULT_FIXED_THRESHOLDS)
    assert pairs[ParameterKind.PRESSURE].adaptive == 4.3
    assert pairs[ParameterKind.PRESSURE].fixed == 6.0


def test_adaptive_clamped_to_fixed_with_warning(caplog):
    # push the whole pressure column above the fixed limit
    series = build_series(150, overrides={i: {ParameterKind.PRESSURE: 9.0} for i in range(150)})
    with caplog.at_level(logging.WARNING, logger="pumpguard.thresholds"):
        pairs = compute_thresholds(series, DEFAULT_FIXED_THRESHOLDS)
    assert pairs[ParameterKind.PRESSURE].adaptive == pairs[ParameterKind.PRESSURE].fixed
    assert any("clamp" in r.message for r in caplog.records)


def test_rolling_window_uses_trailing_samples_only():
    # early huge values fall outside the trailing window, so the adaptive
    # limit must come from the quiet tail
    overrides = {i: {ParameterKind.VIBRATION: 4.5} for i in range(100)}
    series = build_series(300, overrides=overrides)
    tail = compute_thresholds(series, DEFAULT_FIXED_THRESHOLDS, rolling_window=200)
    assert tail[ParameterKind.VIBRATION].adaptive == 1.2
    full = compute_thresholds(series, DEFAULT_FIXED_THRESHOLDS)
    assert full[ParameterKind.VIBRATION].adaptive > 1.2
    with pytest.raises(ValidationError):
        compute_thresholds(series, DEFAULT_FIXED_THRESHOLDS, rolling_window=0)


def test_label_series_counts_and_brute_force_agreement():
    overrides = {
        10: {ParameterKind.PRESSURE: 7.5},  # critical
        20: {ParameterKind.PRESSURE: 5.0},  # above adaptive once labeled
    }
    series = build_series(500, jitter=0.01, seed=8, overrides=overrides)
    pairs = compute_thresholds(series, DEFAULT_FIXED_THRESHOLDS)
    labeled, summary = label_series(series, pairs)

    for parameter in PARAMETERS:
        column = series.column(parameter)
        pair = pairs[parameter]
        expected = [brute_force_label(float(x), pair.fixed, pair.adaptive) for x in column]
        got = [labeled.label_at(i, parameter) for i in range(len(series))]
        assert got == expected
        assert summary.fixed_alerts(parameter) == sum(
            1 for e in expected if e is HealthLabel.CRITICAL_ALERT
        )
        assert summary.adaptive_alerts(parameter) == sum(
            1 for e in expected if e is not HealthLabel.NORMAL
        )
        counts = labeled.label_counts(parameter)
        assert counts.sum() == len(series)

    assert summary.fixed_alerts(ParameterKind.PRESSURE) == 1
    assert labeled.label_at(10, ParameterKind.PRESSURE) is HealthLabel.CRITICAL_ALERT


def test_labeled_series_rejects_inconsistent_labels():
    series = build_series(50)
    pairs = compute_thresholds(series, DEFAULT_FIXED_THRESHOLDS)
    labeled, _ = label_series(series, pairs)
    bad = dict(labeled.labels)
    flipped = np.array(bad[ParameterKind.FLOW])
    flipped[0] = HealthLabel.CRITICAL_ALERT.value
    bad[ParameterKind.FLOW] = flipped
    with pytest.raises(ValidationError):
        LabeledSeries(base=series, labels=bad, thresholds_used=pairs)


def test_labeled_csv_round_trip(tmp_path):
    series = build_series(
        80, jitter=0.01, seed=3, overrides={7: {ParameterKind.FLOW: 3100.0}}
    )
    readings = list(series.readings)
    readings[7] = readings[7].with_value(ParameterKind.FLOW, 3100.0, injected=True)
    series = SensorSeries(readings)
    pairs = compute_thresholds(series, DEFAULT_FIXED_THRESHOLDS)
    labeled, _ = label_series(series, pairs)

    path = tmp_path / "labeled.csv"
    write_labeled_csv(labeled, path)
    back = read_labeled_csv(path, pairs)
    assert back.base == labeled.base
    assert back.base.injected_indices() == [7]
    for parameter in PARAMETERS:
        assert np.array_equal(back.labels[parameter], labeled.labels[parameter])


def test_thresholds_json_round_trip(tmp_path):
    series = build_series(200, jitter=0.01, seed=12)
    pairs = compute_thresholds(series, DEFAULT_FIXED_THRESHOLDS)
    path = tmp_path / "thresholds.json"
    write_thresholds_json(pairs, path)
    assert read_thresholds_json(path) == pairs

    path.write_text('{"version": 99, "pairs": {}}', encoding="utf-8")
    with pytest.raises(PersistenceError):
        read_thresholds_json(path)
    path.write_text("not json", encoding="utf-8")
    with pytest.raises(PersistenceError):
        read_thresholds_json(path)


def test_alert_summary_csv_shape(tmp_path):
    series = build_series(120, jitter=0.01, seed=6)
    pairs = compute_thresholds(series, DEFAULT_FIXED_THRESHOLDS)
    _, summary = label_series(series, pairs)
    path = tmp_path / "alert_summary.csv"
    write_alert_summary_csv(summary, pairs, path)
    lines = path.read_text(encoding="utf-8").strip().splitlines()
    assert lines[0] == "parameter,fixed_threshold,adaptive_threshold,fixed_alerts,adaptive_alerts"
    assert len(lines) == 6
    assert [line.split(",")[0] for line in lines[1:]] == [p.key for p in PARAMETERS]
