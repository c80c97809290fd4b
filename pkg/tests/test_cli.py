import json
from pathlib import Path

import pytest

from harfusion.core.exceptions import ExitCode
from harfusion.main import main
from harfusion.repositories.prediction_repo import PredictionRepository


CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def run(config, out, *args):
    return main([*args, "--config", str(config), "--out", str(out)])


def staged_pipeline(config, out):
    assert run(config, out, "synth") == ExitCode.SUCCESS
    assert run(config, out, "sample") == ExitCode.SUCCESS
    assert run(config, out, "transform") == ExitCode.SUCCESS
    for modality in ("freq", "och"):
        assert run(config, out, "train", "--modality", modality) == ExitCode.SUCCESS
        assert run(config, out, "predict", "--modality", modality) == ExitCode.SUCCESS
    assert run(config, out, "fuse") == ExitCode.SUCCESS


def test_staged_pipeline(tiny_config, tmp_path):
    out = tmp_path / "run"
    staged_pipeline(tiny_config, out)

    manifests = sorted(p.stem for p in (out / "manifests").glob("*.json"))
    assert manifests == [
        "fuse", "predict-freq", "predict-och", "sample", "synth",
        "train-freq", "train-och", "transform-freq", "transform-och",
    ]
    windows = json.loads((out / "windows" / "windows.json").read_text())
    assert windows["count"] == 2 * 6 * 3

    ids, probs, header = PredictionRepository(out / "predictions").read_probabilities("freq.prob")
    assert len(ids) == 18 and probs.shape == (18, 6)
    assert header["modality"] == "freq"
    decisions = (out / "predictions" / "fused_avg.txt").read_text().splitlines()
    assert [line.split("\t")[0] for line in decisions] == ids


def test_staged_runs_are_byte_identical(tiny_config, tmp_path):
    staged_pipeline(tiny_config, tmp_path / "a")
    staged_pipeline(tiny_config, tmp_path / "b")
    for name in ("models/freq.harw", "models/och.harw", "predictions/och.prob", "predictions/fused_avg.txt"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_augmented_training(tiny_config, tmp_path):
    out = tmp_path / "run"
    for args in (("synth",), ("sample",), ("transform", "--mode", "freq")):
        assert run(tiny_config, out, *args) == ExitCode.SUCCESS
    ka = ("--set", 'augmentation.mode="ka"')
    assert run(tiny_config, out, "augment", "--modality", "freq", *ka) == ExitCode.SUCCESS
    manifest = json.loads((out / "manifests" / "augment-freq.json").read_text())
    assert manifest["details"]["images"] == 7 * 18
    assert run(tiny_config, out, "train", "--modality", "freq", *ka) == ExitCode.SUCCESS
    sidecar = json.loads((out / "models" / "freq.json").read_text())
    assert sidecar["n_samples"] == 7 * 18


def test_train_rejects_augmented_images_of_another_fold(tiny_config, tmp_path):
    out = tmp_path / "run"
    for args in (("synth",), ("sample",), ("transform", "--mode", "freq")):
        assert run(tiny_config, out, *args) == ExitCode.SUCCESS
    loo = ("--set", 'augmentation.mode="ka"', "--set", 'protocol.name="loo"')
    assert run(tiny_config, out, "augment", "--modality", "freq", *loo, "--set", "protocol.fold=0") == ExitCode.SUCCESS
    assert run(tiny_config, out, "train", "--modality", "freq", *loo, "--set", "protocol.fold=1") == ExitCode.STAGE_ORDER
    assert not (out / "models" / "freq.json").exists()
    assert run(tiny_config, out, "train", "--modality", "freq", *loo, "--set", "protocol.fold=0") == ExitCode.SUCCESS


def test_eval_and_report(tiny_config, tmp_path):
    out = tmp_path / "run"
    assert run(tiny_config, out, "synth") == ExitCode.SUCCESS
    assert run(tiny_config, out, "sample") == ExitCode.SUCCESS
    assert run(tiny_config, out, "transform") == ExitCode.SUCCESS
    assert run(tiny_config, out, "eval", "--grid") == ExitCode.SUCCESS

    report = json.loads((out / "reports" / "eval_hh.json").read_text())
    assert [row["modalities"] for row in report["grid"]] == [["freq"], ["och"], ["freq", "och"]]
    assert set(report["fusion_comparison"]) == {"max", "avg", "wmax", "wavg"}

    assert run(tiny_config, out, "report", "--scale", "2") == ExitCode.SUCCESS
    assert "freq+och" in (out / "reports" / "report.txt").read_text()
    previews = sorted(p.name for p in (out / "reports" / "previews").glob("*.png"))
    assert len(previews) == 2 * 6
    assert "och_RA.png" in previews


def test_external_modality(tiny_config, tmp_path):
    out = tmp_path / "run"
    staged_pipeline(tiny_config, out)
    external = out / "predictions" / "freq.prob"
    assert run(tiny_config, out, "fuse", "--external", f"video={external}", "--method", "max") == ExitCode.SUCCESS
    manifest = json.loads((out / "manifests" / "fuse.json").read_text())
    assert manifest["details"]["modalities"] == ["freq", "och", "video"]


def test_missing_upstream_stage(tiny_config, tmp_path):
    assert run(tiny_config, tmp_path / "empty", "transform") == ExitCode.STAGE_ORDER
    assert run(tiny_config, tmp_path / "empty", "report") == ExitCode.STAGE_ORDER


def test_config_errors(tiny_config, tmp_path):
    assert run(tiny_config, tmp_path, "synth", "--set", "sampling.overlap=1.0") == ExitCode.CONFIG
    assert run(tmp_path / "absent.toml", tmp_path, "synth") == ExitCode.CONFIG
    assert run(tiny_config, tmp_path, "fuse", "--external", "broken") == ExitCode.CONFIG


def test_provenance_mismatch(tiny_config, tmp_path):
    assert run(tiny_config, tmp_path, "synth") == ExitCode.SUCCESS
    assert run(tiny_config, tmp_path, "sample") == ExitCode.SUCCESS
    changed = ("--set", "sampling.window=32")
    assert run(tiny_config, tmp_path, "transform", *changed) == ExitCode.STAGE_ORDER
    assert run(tiny_config, tmp_path, "transform", *changed, "--force") == ExitCode.SUCCESS


@pytest.mark.slow
def test_synthetic_benchmark(tmp_path):
    config = CONFIGS / "benchmark.toml"
    for args in (("synth",), ("sample",), ("eval", "--grid", "--workers", "4")):
        assert run(config, tmp_path, *args) == ExitCode.SUCCESS
    report = json.loads((tmp_path / "reports" / "eval_loo.json").read_text())
    accuracy = {"+".join(row["modalities"]): row["reports"]["loo"]["accuracy"] for row in report["grid"]}
    assert accuracy["freq+och"] >= max(accuracy["freq"], accuracy["och"]) - 0.01
    assert accuracy["freq+och"] > min(accuracy["freq"], accuracy["och"])
