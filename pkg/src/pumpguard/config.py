"""Pipeline configuration: one JSON document drives every stage.

Unknown keys are rejected at every nesting level so a typo fails loudly
instead of silently falling back to a default. The master seed feeds
per-stage sub-seeds, so individual commands and run-all agree.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from datetime import datetime
from pathlib import Path
from typing import Any, Mapping

from .domain import PARAMETERS, ParameterKind, format_timestamp, parse_timestamp
from .errors import ConfigError, ValidationError
from .models.boosting import GbtConfig
from .models.forest import ForestConfig
from .models.svm import SvmConfig
from .models.tree import TreeParams
from .seeds import derive_seed
from .synth import (
    DEFAULT_INTERVAL_SECONDS,
    DEFAULT_START,
    GeneratorConfig,
    InjectionSpec,
    ParameterProcess,
    default_processes,
)
from .thresholds import DEFAULT_FIXED_THRESHOLDS, DEFAULT_PERCENTILE

CONFIG_VERSION = 1


def _require_keys(raw: Mapping[str, Any], allowed: set[str], context: str) -> None:
    unknown = set(raw) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in {context}: {sorted(unknown)}")


def _get(raw: Mapping[str, Any], key: str, default: Any) -> Any:
    return raw[key] if key in raw else default


@dataclass(frozen=True)
class GeneratorSettings:
    sample_count: int = 5000
    start_timestamp: datetime = DEFAULT_START
    interval_seconds: int = DEFAULT_INTERVAL_SECONDS
    processes: Mapping[ParameterKind, ParameterProcess] = field(
        default_factory=default_processes
    )

    def __post_init__(self) -> None:
        # mirror the stage-time rules so a bad config fails at load
        if self.sample_count < 100:
            raise ValidationError(
                f"sample_count must be >= 100, got {self.sample_count}"
            )
        if self.interval_seconds < 1:
            raise ValidationError(
                f"interval_seconds must be >= 1, got {self.interval_seconds}"
            )

    def to_dict(self) -> dict:
        return {
            "sample_count": self.sample_count,
            "start_timestamp": format_timestamp(self.start_timestamp),
            "interval_seconds": self.interval_seconds,
            "processes": {
                p.key: {
                    "mean": proc.mean,
                    "stddev": proc.stddev,
                    "ar_coefficient": proc.ar_coefficient,
                }
                for p, proc in self.processes.items()
            },
        }

    @classmethod
    def from_dict(cls, raw: Mapping[str, Any]) -> "GeneratorSettings":
        _require_keys(
            raw,
            {"sample_count", "start_timestamp", "interval_seconds", "processes"},
            "generator",
        )
        defaults = cls()
        processes = dict(defaults.processes)
        for key, spec in _get(raw, "processes", {}).items():
            parameter = ParameterKind.from_key(key)
            _require_keys(
                spec, {"mean", "stddev", "ar_coefficient"}, f"generator.processes.{key}"
            )
            base = processes[parameter]
            processes[parameter] = ParameterProcess(
                mean=float(_get(spec, "mean", base.mean)),
                stddev=float(_get(spec, "stddev", base.stddev)),
                ar_coefficient=float(
                    _get(spec, "ar_coefficient", base.ar_coefficient)
                ),
            )
        start = _get(raw, "start_timestamp", None)
        return cls(
            sample_count=int(_get(raw, "sample_count", defaults.sample_count)),
            start_timestamp=parse_timestamp(start) if start else defaults.start_timestamp,
            interval_seconds=int(
                _get(raw, "interval_seconds", defaults.interval_seconds)
            ),
            processes=processes,
        )


@dataclass(frozen=True)
class InjectionSettings:
    count_per_parameter: int = 10
    overshoot_low: float = 0.15
    overshoot_high: float = 0.35
    min_gap: int = 10

    def __post_init__(self) -> None:
        # mirror the stage-time rules so a bad config fails at load
        if self.count_per_parameter < 0 or self.min_gap < 0:
            raise ValidationError("injection counts and min_gap must be >= 0")
        if not 0.0 < self.overshoot_low < self.overshoot_high:
            raise ValidationError(
                f"overshoot range must satisfy 0 < low < high, got "
                f"({self.overshoot_low}, {self.overshoot_high})"
            )

    def to_dict(self) -> dict:
        return {
            "count_per_parameter": self.count_per_parameter,
            "overshoot_low": self.overshoot_low,
            "overshoot_high": self.overshoot_high,
            "min_gap": self.min_gap,
        }

    @classmethod
    def from_dict(cls, raw: Mapping[str, Any]) -> "InjectionSettings":
        _require_keys(
            raw,
            {"count_per_parameter", "overshoot_low", "overshoot_high", "min_gap"},
            "injection",
        )
        defaults = cls()
        return cls(
            count_per_parameter=int(
                _get(raw, "count_per_parameter", defaults.count_per_parameter)
            ),
            overshoot_low=float(_get(raw, "overshoot_low", defaults.overshoot_low)),
            overshoot_high=float(_get(raw, "overshoot_high", defaults.overshoot_high)),
            min_gap=int(_get(raw, "min_gap", defaults.min_gap)),
        )


@dataclass(frozen=True)
class PipelineConfig:
    seed: int = 42
    out_dir: str = "out"
    input_csv: str | None = None
    univariate: bool = False
    fixed_thresholds: Mapping[ParameterKind, float] = field(
        default_factory=lambda: dict(DEFAULT_FIXED_THRESHOLDS)
    )
    adaptive_percentile: float = DEFAULT_PERCENTILE
    rolling_window: int | None = None
    generator: GeneratorSettings = field(default_factory=GeneratorSettings)
    injection: InjectionSettings = field(default_factory=InjectionSettings)
    test_fraction: float = 0.25
    forest: ForestConfig = field(default_factory=ForestConfig)
    gbt: GbtConfig = field(default_factory=GbtConfig)
    svm_c: float = 1.0
    svm_epochs: int = 200
    simulation_speed: float | str = "instant"

    # Stage wiring: every sub-config derives its seed from the master.
    def generator_config(self) -> GeneratorConfig:
        return GeneratorConfig(
            sample_count=self.generator.sample_count,
            start_timestamp=self.generator.start_timestamp,
            interval_seconds=self.generator.interval_seconds,
            master_seed=self.seed,
            processes=self.generator.processes,
        )

    def injection_spec(self) -> InjectionSpec:
        return InjectionSpec(
            count_per_parameter=self.injection.count_per_parameter,
            overshoot_range=(self.injection.overshoot_low, self.injection.overshoot_high),
            min_gap=self.injection.min_gap,
            seed=derive_seed(self.seed, "inject"),
        )

    def svm_config(self) -> SvmConfig:
        return SvmConfig(
            C=self.svm_c, epochs=self.svm_epochs, seed=derive_seed(self.seed, "svm")
        )

    def to_dict(self) -> dict:
        return {
            "version": CONFIG_VERSION,
            "seed": self.seed,
            "out_dir": self.out_dir,
            "input_csv": self.input_csv,
            "univariate": self.univariate,
            "fixed_thresholds": {
                p.key: v for p, v in self.fixed_thresholds.items()
            },
            "adaptive_percentile": self.adaptive_percentile,
            "rolling_window": self.rolling_window,
            "generator": self.generator.to_dict(),
            "injection": self.injection.to_dict(),
            "split": {"test_fraction": self.test_fraction},
            "forest": {
                "n_trees": self.forest.n_trees,
                "max_depth": self.forest.tree.max_depth,
                "min_leaf_samples": self.forest.tree.min_leaf_samples,
                "features_per_split": self.forest.tree.features_per_split,
            },
            "gbt": {
                "n_rounds": self.gbt.n_rounds,
                "learning_rate": self.gbt.learning_rate,
                "reg_lambda": self.gbt.reg_lambda,
                "gamma": self.gbt.gamma,
                "max_depth": self.gbt.max_depth,
            },
            "svm": {"C": self.svm_c, "epochs": self.svm_epochs},
            "simulation": {"speed": self.simulation_speed},
        }

    @classmethod
    def from_dict(cls, raw: Mapping[str, Any]) -> "PipelineConfig":
        try:
            return cls._from_mapping(raw)
        except (TypeError, ValueError) as exc:
            # A config with the right keys but a wrong value type (say a
            # string where a number belongs) is still a config problem.
            raise ConfigError(f"invalid config value: {exc}") from exc

    @classmethod
    def _from_mapping(cls, raw: Mapping[str, Any]) -> "PipelineConfig":
        _require_keys(
            raw,
            {
                "version",
                "seed",
                "out_dir",
                "input_csv",
                "univariate",
                "fixed_thresholds",
                "adaptive_percentile",
                "rolling_window",
                "generator",
                "injection",
                "split",
                "forest",
                "gbt",
                "svm",
                "simulation",
            },
            "config",
        )
        version = _get(raw, "version", CONFIG_VERSION)
        if version != CONFIG_VERSION:
            raise ConfigError(
                f"config version {version!r} unsupported, expected {CONFIG_VERSION}"
            )
        defaults = cls()

        fixed = dict(DEFAULT_FIXED_THRESHOLDS)
        for key, value in _get(raw, "fixed_thresholds", {}).items():
            fixed[ParameterKind.from_key(key)] = float(value)

        split = _get(raw, "split", {})
        _require_keys(split, {"test_fraction"}, "split")

        forest_raw = _get(raw, "forest", {})
        _require_keys(
            forest_raw,
            {"n_trees", "max_depth", "min_leaf_samples", "features_per_split"},
            "forest",
        )
        tree = TreeParams(
            max_depth=int(_get(forest_raw, "max_depth", defaults.forest.tree.max_depth)),
            min_leaf_samples=int(
                _get(forest_raw, "min_leaf_samples", defaults.forest.tree.min_leaf_samples)
            ),
            features_per_split=int(
                _get(forest_raw, "features_per_split", defaults.forest.tree.features_per_split)
            ),
        )
        forest = ForestConfig(
            n_trees=int(_get(forest_raw, "n_trees", defaults.forest.n_trees)), tree=tree
        )

        gbt_raw = _get(raw, "gbt", {})
        _require_keys(
            gbt_raw,
            {"n_rounds", "learning_rate", "reg_lambda", "gamma", "max_depth"},
            "gbt",
        )
        gbt = GbtConfig(
            n_rounds=int(_get(gbt_raw, "n_rounds", defaults.gbt.n_rounds)),
            learning_rate=float(_get(gbt_raw, "learning_rate", defaults.gbt.learning_rate)),
            reg_lambda=float(_get(gbt_raw, "reg_lambda", defaults.gbt.reg_lambda)),
            gamma=float(_get(gbt_raw, "gamma", defaults.gbt.gamma)),
            max_depth=int(_get(gbt_raw, "max_depth", defaults.gbt.max_depth)),
        )

        svm_raw = _get(raw, "svm", {})
        _require_keys(svm_raw, {"C", "epochs"}, "svm")

        simulation = _get(raw, "simulation", {})
        _require_keys(simulation, {"speed"}, "simulation")
        speed = _get(simulation, "speed", defaults.simulation_speed)
        if speed != "instant":
            speed = float(speed)

        rolling = _get(raw, "rolling_window", None)
        input_csv = _get(raw, "input_csv", None)
        return cls(
            seed=int(_get(raw, "seed", defaults.seed)),
            out_dir=str(_get(raw, "out_dir", defaults.out_dir)),
            input_csv=str(input_csv) if input_csv is not None else None,
            univariate=bool(_get(raw, "univariate", defaults.univariate)),
            fixed_thresholds=fixed,
            adaptive_percentile=float(
                _get(raw, "adaptive_percentile", defaults.adaptive_percentile)
            ),
            rolling_window=int(rolling) if rolling is not None else None,
            generator=GeneratorSettings.from_dict(_get(raw, "generator", {})),
            injection=InjectionSettings.from_dict(_get(raw, "injection", {})),
            test_fraction=float(_get(split, "test_fraction", defaults.test_fraction)),
            forest=forest,
            gbt=gbt,
            svm_c=float(_get(svm_raw, "C", defaults.svm_c)),
            svm_epochs=int(_get(svm_raw, "epochs", defaults.svm_epochs)),
            simulation_speed=speed,
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json() + "\n", encoding="utf-8")

    def with_overrides(
        self, seed: int | None = None, out_dir: str | None = None
    ) -> "PipelineConfig":
        config = self
        if seed is not None:
            config = replace(config, seed=seed)
        if out_dir is not None:
            config = replace(config, out_dir=out_dir)
        return config


def load_config(path: str | Path) -> PipelineConfig:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except ValueError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")
    return PipelineConfig.from_dict(raw)
