"""Command line pipeline: artifacts, manifest, exit codes, composition."""

import csv
import json
from pathlib import Path

import pytest

from pumpguard.cli import main
from pumpguard.config import PipelineConfig
from pumpguard.domain import PARAMETERS, HealthLabel
from pumpguard.models import (
    BoostedModel,
    DecisionTree,
    ForestConfig,
    ForestModel,
    GbtConfig,
    Leaf,
    Split,
    SvmConfig,
    SvmModel,
    TreeParams,
    save_model,
)
from pumpguard.thresholds import read_thresholds_json

import numpy as np

QUICK = {
    "seed": 42,
    "generator": {"sample_count": 240},
    "injection": {"count_per_parameter": 2, "min_gap": 5},
    "forest": {"n_trees": 5, "max_depth": 8},
    "gbt": {"n_rounds": 8},
    "svm": {"epochs": 25},
}


def write_config(tmp_path, out_name="out", **extra):
    payload = dict(QUICK, out_dir=str(tmp_path / out_name), **extra)
    path = tmp_path / f"{out_name}.json"
    path.write_text(json.dumps(payload), encoding="utf-8")
    return path, tmp_path / out_name


def run(config_path, command, *extra):
    return main([command, "--config", str(config_path), *extra])


@pytest.fixture(scope="module")
def full_run(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("cli")
    config_path, out_dir = write_config(tmp)
    assert run(config_path, "run-all") == 0
    return config_path, out_dir


def test_run_all_writes_every_artifact(full_run):
    _, out = full_run
    for name in (
        "baseline.csv", "injected.csv", "injection_log.json", "thresholds.json",
        "labeled.csv", "alert_summary.csv", "report.csv", "report.txt",
        "events.jsonl", "manifest.json",
    ):
        assert (out / name).exists(), name
    models = sorted(p.name for p in (out / "models").glob("*.json"))
    assert len(models) == 15
    assert {n.split("_")[0] for n in models} == {"forest", "gbt", "svm"}
    for kind in ("forest", "gbt", "svm"):
        assert (out / f"confusion_{kind}.csv").exists()
        assert (out / f"confusion_{kind}.svg").exists()
    signals = sorted(p.name for p in out.glob("signal_*.svg"))
    assert signals == sorted(f"signal_{p.key}.svg" for p in PARAMETERS)


def test_manifest_marks_all_stages_ok(full_run):
    _, out = full_run
    manifest = json.loads((out / "manifest.json").read_text(encoding="utf-8"))
    assert manifest["seed"] == 42
    stages = manifest["stages"]
    assert set(stages) == {
        "generate", "inject", "label", "train", "evaluate", "simulate", "plot"
    }
    for entry in stages.values():
        assert entry["status"] == "ok"
    assert "baseline.csv" in stages["generate"]["outputs"]
    assert any("forest" in name for name in stages["train"]["outputs"])


def test_report_csv_covers_three_approaches(full_run):
    _, out = full_run
    with (out / "report.csv").open(encoding="utf-8", newline="") as handle:
        rows = list(csv.DictReader(handle))
    # 3 approaches x 5 parameters
    assert len(rows) == 15
    approaches = {row["approach"] for row in rows}
    assert approaches == {"Random Forest", "Gradient Boosted Trees", "Linear SVM"}
    for approach in approaches:
        assert sum(row["approach"] == approach for row in rows) == 5


def test_rerun_same_seed_is_byte_identical(full_run, tmp_path):
    config_path, first = full_run
    again_path, again = write_config(tmp_path, "again")
    assert run(again_path, "run-all") == 0
    for name in ("baseline.csv", "labeled.csv", "report.csv", "events.jsonl"):
        assert (again / name).read_bytes() == (first / name).read_bytes(), name
    for model in sorted((first / "models").glob("*.json")):
        assert (again / "models" / model.name).read_bytes() == model.read_bytes()


def test_stage_sequence_matches_run_all(full_run, tmp_path):
    _, combined = full_run
    config_path, staged = write_config(tmp_path, "staged")
    for command in ("generate", "inject", "label", "train", "evaluate", "simulate", "plot"):
        assert run(config_path, command) == 0, command
    for name in ("report.csv", "report.txt", "events.jsonl", "alert_summary.csv"):
        assert (staged / name).read_bytes() == (combined / name).read_bytes(), name


def test_seed_flag_changes_artifacts(full_run, tmp_path):
    _, baseline_out = full_run
    config_path, out = write_config(tmp_path, "reseeded")
    assert run(config_path, "generate", "--seed", "7") == 0
    assert (out / "baseline.csv").read_bytes() != (baseline_out / "baseline.csv").read_bytes()
    manifest = json.loads((out / "manifest.json").read_text(encoding="utf-8"))
    assert manifest["seed"] == 7


def test_out_dir_flag_overrides_config(tmp_path):
    config_path, _ = write_config(tmp_path)
    elsewhere = tmp_path / "elsewhere"
    assert run(config_path, "generate", "--out-dir", str(elsewhere)) == 0
    assert (elsewhere / "baseline.csv").exists()


def test_missing_prerequisite_exits_2_with_hint(tmp_path, capsys):
    config_path, _ = write_config(tmp_path)
    assert run(config_path, "label") == 2
    err = capsys.readouterr().err
    assert "run `pumpguard generate` first" in err
    assert run(config_path, "evaluate") == 2
    assert "run `pumpguard" in capsys.readouterr().err


def test_invalid_config_exits_1(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"seed": 1, "turbo": True}), encoding="utf-8")
    assert main(["generate", "--config", str(path)]) == 1
    assert "unknown keys" in capsys.readouterr().err


def test_unparseable_config_exits_1(tmp_path, capsys):
    path = tmp_path / "broken.json"
    path.write_text("{nope", encoding="utf-8")
    assert main(["generate", "--config", str(path)]) == 1
    assert "error:" in capsys.readouterr().err


def test_malformed_model_file_exits_2(tmp_path, capsys):
    config_path, out = write_config(tmp_path)
    for command in ("generate", "inject", "label", "train"):
        assert run(config_path, command) == 0
    victim = out / "models" / "forest_pressure.json"
    victim.write_text("{", encoding="utf-8")
    assert run(config_path, "evaluate") == 2
    assert "error:" in capsys.readouterr().err


def test_unknown_command_rejected():
    with pytest.raises(SystemExit):
        main(["defragment"])


def test_run_all_failure_is_recorded_in_manifest(tmp_path, capsys):
    # 100 samples cannot host 4 injections per parameter at gap 10.
    config_path, out = write_config(
        tmp_path,
        generator={"sample_count": 100},
        injection={"count_per_parameter": 4, "min_gap": 10},
    )
    assert run(config_path, "run-all") == 1
    manifest = json.loads((out / "manifest.json").read_text(encoding="utf-8"))
    assert manifest["stages"]["generate"]["status"] == "ok"
    failed = manifest["stages"]["inject"]
    assert failed["status"] == "failed"
    assert failed["error"]
    assert "error:" in capsys.readouterr().err


def test_zero_injections_yield_no_criticals(tmp_path):
    config_path, out = write_config(tmp_path, injection={"count_per_parameter": 0})
    for command in ("generate", "inject", "label"):
        assert run(config_path, command) == 0
    labeled = (out / "labeled.csv").read_text(encoding="utf-8")
    assert HealthLabel.CRITICAL_ALERT.token not in labeled
    with (out / "alert_summary.csv").open(encoding="utf-8", newline="") as handle:
        for row in csv.DictReader(handle):
            assert row["fixed_alerts"] == "0"


def test_generate_from_input_csv(tmp_path):
    from conftest import build_series
    from pumpguard.ingest import write_series_csv

    raw = tmp_path / "raw.csv"
    write_series_csv(build_series(300, jitter=0.002, seed=3), raw)
    # corrupt two rows: one blank cell, one text token
    lines = raw.read_text(encoding="utf-8").splitlines()
    lines[5] = lines[5].rsplit(",", 1)[0] + ","
    lines[9] = lines[9].rsplit(",", 1)[0] + ",garbled"
    raw.write_text("\n".join(lines) + "\n", encoding="utf-8")

    config_path, out = write_config(tmp_path, input_csv=str(raw))
    for command in ("generate", "inject", "label"):
        assert run(config_path, command) == 0
    with (out / "baseline.csv").open(encoding="utf-8", newline="") as handle:
        assert len(list(csv.DictReader(handle))) == 298
    manifest = json.loads((out / "manifest.json").read_text(encoding="utf-8"))
    assert "raw.csv" in manifest["stages"]["generate"]["inputs"]


def exact_rule_tree(feature_index: int, fixed: float, adaptive: float) -> DecisionTree:
    # Encode the labeling rule directly: x <= adaptive -> Normal,
    # adaptive < x <= fixed -> EarlyWarning, x > fixed -> CriticalAlert.
    root = Split(
        feature_index=feature_index,
        threshold=adaptive,
        left=Leaf(class_counts=(1, 0, 0)),
        right=Split(
            feature_index=feature_index,
            threshold=fixed,
            left=Leaf(class_counts=(0, 1, 0)),
            right=Leaf(class_counts=(0, 0, 1)),
        ),
    )
    return DecisionTree(root=root, params=TreeParams(), n_features=len(PARAMETERS))


def test_evaluate_scores_handcrafted_exact_models(tmp_path):
    config_path, out = write_config(tmp_path)
    for command in ("generate", "inject", "label", "train"):
        assert run(config_path, command) == 0
    thresholds = read_thresholds_json(out / "thresholds.json")
    for index, parameter in enumerate(PARAMETERS):
        pair = thresholds[parameter]
        forest = ForestModel(
            trees=(exact_rule_tree(index, pair.fixed, pair.adaptive),),
            config=ForestConfig(n_trees=1),
            seed=0,
        )
        save_model(forest, out / "models" / f"forest_{parameter.key}.json")
        gbt = BoostedModel(
            rounds=(),
            config=GbtConfig(n_rounds=0),
            base_score=(0.0, 0.0, 0.0),
            objective_history=(1.0,),
            n_features=len(PARAMETERS),
        )
        save_model(gbt, out / "models" / f"gbt_{parameter.key}.json")
        svm = SvmModel(
            weights=np.zeros((3, len(PARAMETERS))),
            bias=np.zeros(3),
            feature_mean=np.zeros(len(PARAMETERS)),
            feature_std=np.ones(len(PARAMETERS)),
            config=SvmConfig(),
            objective_history=((1.0,), (1.0,), (1.0,)),
        )
        save_model(svm, out / "models" / f"svm_{parameter.key}.json")
    assert run(config_path, "evaluate") == 0
    with (out / "report.csv").open(encoding="utf-8", newline="") as handle:
        rows = list(csv.DictReader(handle))
    forest_rows = [r for r in rows if r["approach"] == "Random Forest"]
    assert len(forest_rows) == 5
    for row in forest_rows:
        assert float(row["accuracy"]) == 1.0
        assert float(row["f1_macro"]) == 1.0
