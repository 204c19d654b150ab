"""Command-line pipeline for pump condition monitoring.

Each command runs one stage and writes its artifacts under the output
directory; run-all chains every stage. A manifest records per-stage
completion and input hashes so partial runs are inspectable. Exit codes:
0 success, 1 validation/config error, 2 I/O or file-format error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
import time
from pathlib import Path

from .config import PipelineConfig, load_config
from .domain import PARAMETERS, HealthLabel, ParameterKind, SensorSeries
from .errors import PersistenceError, PumpguardError, ValidationError
from .evaluation import (
    EvaluationCell,
    EvaluationReport,
    build_report,
    confusion,
    default_remarks,
    metrics,
    stratified_split,
)
from .ingest import default_glitch_bounds, filter_glitches, parse_csv, write_series_csv
from .models import (
    load_model,
    make_datasets,
    save_model,
    train_forest,
    train_gbt,
    train_svm,
)
from .plots import plot_confusion_grid, plot_signals
from .seeds import derive_seed
from .stream import replay, write_events_jsonl
from .synth import InjectionLog, generate, inject, mark_injected
from .thresholds import (
    LabeledSeries,
    compute_thresholds,
    label_series,
    read_labeled_csv,
    read_thresholds_json,
    write_alert_summary_csv,
    write_labeled_csv,
    write_thresholds_json,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_IO = 2

BASELINE_CSV = "baseline.csv"
INJECTED_CSV = "injected.csv"
INJECTION_LOG_JSON = "injection_log.json"
THRESHOLDS_JSON = "thresholds.json"
LABELED_CSV = "labeled.csv"
ALERT_SUMMARY_CSV = "alert_summary.csv"
MODELS_DIR = "models"
REPORT_CSV = "report.csv"
REPORT_TXT = "report.txt"
EVENTS_JSONL = "events.jsonl"
MANIFEST_JSON = "manifest.json"

MODEL_KINDS = ("forest", "gbt", "svm")
APPROACH_NAMES = {
    "forest": "Random Forest",
    "gbt": "Gradient Boosted Trees",
    "svm": "Linear SVM",
}

COMMANDS = (
    "generate",
    "inject",
    "label",
    "train",
    "evaluate",
    "simulate",
    "plot",
    "run-all",
)


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _update_manifest(
    out_dir: Path,
    stage: str,
    status: str,
    outputs: list[str],
    inputs: list[Path],
    seed: int,
    error: str | None = None,
) -> None:
    path = out_dir / MANIFEST_JSON
    manifest = {"version": 1, "seed": seed, "stages": {}}
    if path.exists():
        try:
            manifest = json.loads(path.read_text(encoding="utf-8"))
        except ValueError:
            logger.warning("overwriting unreadable manifest %s", path)
            manifest = {"version": 1, "seed": seed, "stages": {}}
    manifest["seed"] = seed
    entry = {
        "status": status,
        "outputs": outputs,
        "inputs": {p.name: _sha256(p) for p in inputs if p.exists()},
    }
    if error is not None:
        entry["error"] = error
    manifest.setdefault("stages", {})[stage] = entry
    path.write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")


def _require(path: Path, hint: str) -> Path:
    if not path.exists():
        raise FileNotFoundError(f"{path} not found; run `pumpguard {hint}` first")
    return path


def _ingest_input_csv(config: PipelineConfig) -> SensorSeries:
    series, report = parse_csv(Path(config.input_csv))
    series, glitches = filter_glitches(
        series, default_glitch_bounds(config.fixed_thresholds)
    )
    logger.info(
        "cleaned %s: kept %d of %d rows (%d missing, %d non-numeric, "
        "%d glitches, %d duplicate timestamps)",
        config.input_csv,
        glitches.rows_kept,
        report.rows_read,
        report.rows_dropped_missing,
        report.rows_dropped_nonnumeric,
        glitches.rows_dropped_glitch,
        report.duplicate_timestamps_removed,
    )
    return series


def _load_clean_series(out_dir: Path) -> SensorSeries:
    # baseline.csv is the single source downstream, synthetic or ingested
    series, _ = parse_csv(_require(out_dir / BASELINE_CSV, "generate"))
    return series


def _load_labeled(config: PipelineConfig, out_dir: Path) -> LabeledSeries:
    # The labeled CSV carries injection provenance in its own column.
    thresholds = read_thresholds_json(_require(out_dir / THRESHOLDS_JSON, "label"))
    return read_labeled_csv(_require(out_dir / LABELED_CSV, "label"), thresholds)


def _model_path(out_dir: Path, kind: str, parameter: ParameterKind) -> Path:
    return out_dir / MODELS_DIR / f"{kind}_{parameter.key}.json"


def cmd_generate(config: PipelineConfig, out_dir: Path) -> str:
    path = out_dir / BASELINE_CSV
    if config.input_csv is not None:
        series = _ingest_input_csv(config)
        write_series_csv(series, path)
        _update_manifest(
            out_dir, "generate", "ok", [BASELINE_CSV],
            [Path(config.input_csv)], config.seed,
        )
        return f"cleaned {config.input_csv}: kept {len(series)} readings in {path}"
    series = generate(config.generator_config())
    write_series_csv(series, path)
    _update_manifest(out_dir, "generate", "ok", [BASELINE_CSV], [], config.seed)
    return f"generated {len(series)} readings to {path}"


def cmd_inject(config: PipelineConfig, out_dir: Path) -> str:
    source = _require(out_dir / BASELINE_CSV, "generate")
    series, _ = parse_csv(source)
    injected, log = inject(series, config.injection_spec(), config.fixed_thresholds)
    write_series_csv(injected, out_dir / INJECTED_CSV)
    log.save(out_dir / INJECTION_LOG_JSON)
    _update_manifest(
        out_dir,
        "inject",
        "ok",
        [INJECTED_CSV, INJECTION_LOG_JSON],
        [source],
        config.seed,
    )
    return (
        f"injected {len(log)} critical overshoots "
        f"({config.injection.count_per_parameter} per parameter) to {out_dir / INJECTED_CSV}"
    )


def cmd_label(config: PipelineConfig, out_dir: Path) -> str:
    clean = _load_clean_series(out_dir)
    thresholds = compute_thresholds(
        clean,
        config.fixed_thresholds,
        p=config.adaptive_percentile,
        rolling_window=config.rolling_window,
    )

    inputs = [out_dir / BASELINE_CSV]
    target = clean
    injected_path = out_dir / INJECTED_CSV
    log_path = out_dir / INJECTION_LOG_JSON
    if injected_path.exists():
        target, _ = parse_csv(injected_path)
        if log_path.exists():
            target = mark_injected(target, InjectionLog.load(log_path))
        inputs += [injected_path, log_path]

    labeled, summary = label_series(target, thresholds)
    write_labeled_csv(labeled, out_dir / LABELED_CSV)
    write_alert_summary_csv(summary, thresholds, out_dir / ALERT_SUMMARY_CSV)
    write_thresholds_json(
        thresholds, out_dir / THRESHOLDS_JSON, percentile_used=config.adaptive_percentile
    )
    _update_manifest(
        out_dir,
        "label",
        "ok",
        [LABELED_CSV, ALERT_SUMMARY_CSV, THRESHOLDS_JSON],
        inputs,
        config.seed,
    )
    fixed_total = sum(summary.fixed_alerts(p) for p in PARAMETERS)
    # adaptive_alerts counts criticals too; report the warning band alone
    early_total = sum(
        summary.adaptive_alerts(p) - summary.fixed_alerts(p) for p in PARAMETERS
    )
    return (
        f"labeled {len(labeled)} readings: {fixed_total} critical alerts, "
        f"{early_total} early warnings ({out_dir / ALERT_SUMMARY_CSV})"
    )


def cmd_train(config: PipelineConfig, out_dir: Path) -> str:
    labeled = _load_labeled(config, out_dir)
    datasets = make_datasets(labeled, univariate=config.univariate)
    (out_dir / MODELS_DIR).mkdir(exist_ok=True)
    for parameter in PARAMETERS:
        train, _ = stratified_split(
            datasets[parameter], config.test_fraction, seed=config.seed
        )
        forest = train_forest(
            train, config.forest, seed=derive_seed(config.seed, "forest", parameter.key)
        )
        save_model(forest, _model_path(out_dir, "forest", parameter))
        save_model(train_gbt(train, config.gbt), _model_path(out_dir, "gbt", parameter))
        save_model(
            train_svm(train, config.svm_config()), _model_path(out_dir, "svm", parameter)
        )
        logger.info("trained 3 models for %s on %d rows", parameter.key, train.n)
    outputs = [
        str(Path(MODELS_DIR) / f"{kind}_{p.key}.json")
        for kind in MODEL_KINDS
        for p in PARAMETERS
    ]
    _update_manifest(
        out_dir,
        "train",
        "ok",
        outputs,
        [out_dir / LABELED_CSV, out_dir / THRESHOLDS_JSON],
        config.seed,
    )
    return f"trained {len(outputs)} models to {out_dir / MODELS_DIR}"


def _dataset_variant(labeled: LabeledSeries) -> str:
    return (
        "synthetic + injected"
        if len(labeled.base.injected_indices())
        else "synthetic (clean)"
    )


def _threshold_rows(labeled: LabeledSeries) -> list[tuple[str, str, str]]:
    variant = _dataset_variant(labeled)
    n = len(labeled)
    critical = sum(int(labeled.label_counts(p)[2]) for p in PARAMETERS)
    early = sum(int(labeled.label_counts(p)[1]) for p in PARAMETERS)
    early_rate = 100.0 * early / (n * len(PARAMETERS))
    return [
        (
            "Thresholding (Fixed)",
            variant,
            f"{critical} readings above fixed limits across parameters",
        ),
        (
            "Thresholding (Adaptive)",
            variant,
            f"{early} early warnings ({early_rate:.1f}% of readings)",
        ),
    ]


def cmd_evaluate(config: PipelineConfig, out_dir: Path) -> str:
    labeled = _load_labeled(config, out_dir)
    datasets = make_datasets(labeled, univariate=config.univariate)
    variant = _dataset_variant(labeled)

    model_files = []
    cells = []
    for kind in MODEL_KINDS:
        for parameter in PARAMETERS:
            path = _require(_model_path(out_dir, kind, parameter), "train")
            model_files.append(path)
            model = load_model(path)
            _, test = stratified_split(
                datasets[parameter], config.test_fraction, seed=config.seed
            )
            matrix = confusion(test.targets, model.predict_many(test.features))
            report = metrics(matrix)
            cells.append(
                EvaluationCell(
                    approach=APPROACH_NAMES[kind],
                    dataset=variant,
                    parameter=parameter,
                    matrix=matrix,
                    metrics=report,
                    remarks=default_remarks(report),
                )
            )
    report = build_report(cells)
    report.write_csv(out_dir / REPORT_CSV)
    text = report.render_text(extra_rows=_threshold_rows(labeled))
    (out_dir / REPORT_TXT).write_text(text, encoding="utf-8")

    outputs = [REPORT_CSV, REPORT_TXT]
    for kind in MODEL_KINDS:
        kind_cells = [c for c in cells if c.approach == APPROACH_NAMES[kind]]
        sub = EvaluationReport(cells=tuple(kind_cells))
        sub.write_confusion_csv(out_dir / f"confusion_{kind}.csv")
        plot_confusion_grid(kind_cells, APPROACH_NAMES[kind], out_dir / f"confusion_{kind}.svg")
        outputs += [f"confusion_{kind}.csv", f"confusion_{kind}.svg"]

    _update_manifest(
        out_dir,
        "evaluate",
        "ok",
        outputs,
        [out_dir / LABELED_CSV, out_dir / THRESHOLDS_JSON] + model_files,
        config.seed,
    )
    return f"evaluated {len(cells)} (model, parameter) pairs; report at {out_dir / REPORT_CSV}"


def cmd_simulate(config: PipelineConfig, out_dir: Path) -> str:
    labeled = _load_labeled(config, out_dir)
    thresholds = labeled.thresholds_used
    models = {}
    model_files = []
    for parameter in PARAMETERS:
        models[parameter] = {}
        for kind in MODEL_KINDS:
            path = _require(_model_path(out_dir, kind, parameter), "train")
            model_files.append(path)
            models[parameter][kind] = load_model(path)
    events = replay(labeled.base, thresholds, models, speed=config.simulation_speed)
    count = write_events_jsonl(events, out_dir / EVENTS_JSONL)
    _update_manifest(
        out_dir,
        "simulate",
        "ok",
        [EVENTS_JSONL],
        [out_dir / LABELED_CSV, out_dir / THRESHOLDS_JSON] + model_files,
        config.seed,
    )
    return f"replayed {len(labeled)} readings, {count} alert events to {out_dir / EVENTS_JSONL}"


def cmd_plot(config: PipelineConfig, out_dir: Path) -> str:
    labeled = _load_labeled(config, out_dir)
    log_path = out_dir / INJECTION_LOG_JSON
    log = InjectionLog.load(log_path) if log_path.exists() else None
    paths = plot_signals(labeled, out_dir, injection_log=log)
    inputs = [out_dir / LABELED_CSV, out_dir / THRESHOLDS_JSON]
    if log is not None:
        inputs.append(log_path)
    _update_manifest(
        out_dir, "plot", "ok", [p.name for p in paths], inputs, config.seed
    )
    return f"plotted {len(paths)} signal figures to {out_dir}"


_STAGE_FUNCTIONS = {
    "generate": cmd_generate,
    "inject": cmd_inject,
    "label": cmd_label,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "simulate": cmd_simulate,
    "plot": cmd_plot,
}

_RUN_ALL_ORDER = ("generate", "inject", "label", "train", "evaluate", "simulate", "plot")


def cmd_run_all(config: PipelineConfig, out_dir: Path) -> str:
    lines = []
    for stage in _RUN_ALL_ORDER:
        started = time.monotonic()
        try:
            summary = _STAGE_FUNCTIONS[stage](config, out_dir)
        except Exception as exc:
            _update_manifest(
                out_dir, stage, "failed", [], [], config.seed, error=str(exc)
            )
            raise
        logger.info("%s finished in %.1fs", stage, time.monotonic() - started)
        lines.append(summary)
    return "\n".join(lines)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pumpguard",
        description="Pump condition monitoring: thresholds, classifiers, replay.",
    )
    parser.add_argument("command", choices=COMMANDS, help="pipeline stage to run")
    parser.add_argument("--config", type=Path, default=None, help="JSON config file")
    parser.add_argument("--seed", type=int, default=None, help="master seed override")
    parser.add_argument(
        "--out-dir", type=Path, default=None, help="artifact directory override"
    )
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(
        level=logging.INFO, format="%(levelname)s %(name)s: %(message)s"
    )
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config) if args.config else PipelineConfig()
        config = config.with_overrides(
            seed=args.seed,
            out_dir=str(args.out_dir) if args.out_dir else None,
        )
        out_dir = Path(config.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        if args.command == "run-all":
            summary = cmd_run_all(config, out_dir)
        else:
            summary = _STAGE_FUNCTIONS[args.command](config, out_dir)
    except PersistenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except PumpguardError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    print(summary)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
