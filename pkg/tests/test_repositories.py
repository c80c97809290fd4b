import numpy as np
import pytest
from numpy import testing

from harfusion.core.exceptions import (
    ArchitectureMismatchError,
    CorruptArtifactError,
    InvalidProbabilityError,
    ProvenanceError,
    StageOrderError,
)
from harfusion.repositories.image_repo import ImageRepository
from harfusion.repositories.manifest_repo import ManifestRepository
from harfusion.repositories.model_repo import ModelRepository
from harfusion.repositories.prediction_repo import PredictionRepository
from harfusion.repositories.window_repo import WindowRepository
from harfusion.schemas.features import FeatureImage, FeatureKind
from harfusion.schemas.fusion import Decision
from harfusion.schemas.manifest import StageManifest
from harfusion.schemas.nn import LayerKind, LayerSpec, TrainConfig
from harfusion.services.training_service import TrainingService

from conftest import make_dataset


LAYERS = [LayerSpec(kind=LayerKind.dense, units=2), LayerSpec(kind=LayerKind.softmax)]


@pytest.fixture
def trained():
    rng = np.random.default_rng(0)
    x = rng.normal(size=(8, 4))
    _, result = TrainingService.train(x, np.arange(8) % 2, LAYERS, TrainConfig(epochs=1, batch_size=4), seed=1)
    return result


def test_model_round_trip_is_byte_stable(tmp_path, trained):
    repo = ModelRepository(tmp_path)
    weights, _ = repo.save("m", trained, extra={"modality": "freq"})
    params, meta = repo.load("m", expected_layers=LAYERS)
    assert params.equals(trained.params)
    assert meta["modality"] == "freq"
    first = weights.read_bytes()
    repo.save("m", trained.model_copy(update={"params": params}))
    assert weights.read_bytes() == first


def test_model_architecture_mismatch(tmp_path, trained):
    repo = ModelRepository(tmp_path)
    repo.save("m", trained)
    with pytest.raises(ArchitectureMismatchError) as info:
        repo.load("m", expected_layers=[LayerSpec(kind=LayerKind.dense, units=3), LayerSpec(kind=LayerKind.softmax)])
    assert info.value.exit_code == 3


def test_model_truncated_file(tmp_path, trained):
    repo = ModelRepository(tmp_path)
    weights, _ = repo.save("m", trained)
    weights.write_bytes(weights.read_bytes()[:-3])
    with pytest.raises(CorruptArtifactError):
        repo.load("m")
    with pytest.raises(CorruptArtifactError):
        repo.load("absent")


def images():
    rng = np.random.default_rng(2)
    return [
        FeatureImage(pixels=rng.random((6, 5, 3)), kind=FeatureKind.och, provenance=f"w{i}", label=i, subject="S01")
        for i in range(2)
    ]


def test_image_round_trip_and_truncation(tmp_path):
    repo = ImageRepository(tmp_path)
    stream, _ = repo.save("och", images())
    loaded = repo.load("och")
    assert [img.provenance for img in loaded] == ["w0", "w1"]
    assert [img.label for img in loaded] == [0, 1]
    testing.assert_allclose(loaded[1].pixels, images()[1].pixels, atol=1e-7)

    stream.write_bytes(stream.read_bytes()[:-4])
    with pytest.raises(CorruptArtifactError):
        repo.load("och")


def test_image_sidecar_count_mismatch(tmp_path):
    repo = ImageRepository(tmp_path)
    _, sidecar = repo.save("och", images())
    sidecar.write_text(sidecar.read_text().splitlines()[0] + "\n")
    with pytest.raises(CorruptArtifactError):
        repo.load("och")


def test_probability_file(tmp_path):
    repo = PredictionRepository(tmp_path)
    probs = np.array([[0.25, 0.75], [1.0, 0.0]])
    repo.write_probabilities("freq.prob", ["a", "b"], probs, {"modality": "freq"})
    ids, matrix, header = repo.read_probabilities("freq.prob")
    assert ids == ["a", "b"]
    testing.assert_array_equal(matrix, probs)
    assert header == {"modality": "freq"}
    testing.assert_array_equal(repo.read_table("freq.prob")["b"], [1.0, 0.0])


@pytest.mark.parametrize("row", ["x 0.5 0.4", "x 0.5 nan", "x 1.5 -0.5", "x 0.5 zero"])
def test_probability_file_rejects_invalid_rows(tmp_path, row):
    (tmp_path / "bad.prob").write_text(row + "\n")
    with pytest.raises(InvalidProbabilityError):
        PredictionRepository(tmp_path).read_probabilities("bad.prob")


def test_probability_file_rejects_ragged_rows(tmp_path):
    (tmp_path / "bad.prob").write_text("a 0.5 0.5\nb 0.2 0.3 0.5\n")
    with pytest.raises(CorruptArtifactError):
        PredictionRepository(tmp_path).read_probabilities("bad.prob")


def test_decisions_file(tmp_path):
    repo = PredictionRepository(tmp_path)
    decisions = [Decision(index=1, tie=False), Decision(index=0, tie=True)]
    repo.write_decisions("fused.txt", ["a", "b"], decisions, ["RA", "UP"])
    assert (tmp_path / "fused.txt").read_text() == "a\t1\tUP\t0\nb\t0\tRA\t1\n"
    assert repo.read_decisions("fused.txt") == list(zip(["a", "b"], decisions))


def test_files_keep_spaces_in_ids_and_class_names(tmp_path):
    repo = PredictionRepository(tmp_path)
    ids = ["S01-Nordic walking-0", "S01-Nordic walking-160"]
    probs = np.array([[0.25, 0.75], [1.0, 0.0]])
    repo.write_probabilities("freq.prob", ids, probs, {"classes": "Nordic walking,running"})
    read_ids, matrix, _ = repo.read_probabilities("freq.prob")
    assert read_ids == ids
    testing.assert_array_equal(matrix, probs)

    decisions = [Decision(index=0, tie=False), Decision(index=1, tie=True)]
    repo.write_decisions("fused.txt", ids, decisions, ["Nordic walking", "running"])
    assert (tmp_path / "fused.txt").read_text().splitlines()[0] == "S01-Nordic walking-0\t0\tNordic walking\t0"
    assert repo.read_decisions("fused.txt") == list(zip(ids, decisions))


def test_space_separated_rows_split_from_the_right_by_class_count(tmp_path):
    (tmp_path / "old.prob").write_text("# classes=a,b\nS01-Nordic walking-0 0.25 0.75\n")
    ids, matrix, _ = PredictionRepository(tmp_path).read_probabilities("old.prob")
    assert ids == ["S01-Nordic walking-0"]
    testing.assert_array_equal(matrix, [[0.25, 0.75]])


def test_malformed_decision_line_is_corrupt(tmp_path):
    (tmp_path / "fused.txt").write_text("a\tone\tUP\t0\n")
    with pytest.raises(CorruptArtifactError):
        PredictionRepository(tmp_path).read_decisions("fused.txt")


def test_manifest_provenance(tmp_path):
    repo = ManifestRepository(tmp_path)
    with pytest.raises(StageOrderError) as info:
        repo.require("sample", "transform", "abc")
    assert info.value.exit_code == 3
    repo.write(StageManifest(stage="sample", config_hash="abc", seed=0))
    assert repo.require("sample", "transform", "abc", seed=0).config_hash == "abc"
    with pytest.raises(ProvenanceError):
        repo.require("sample", "transform", "def")
    assert repo.require("sample", "transform", "def", force=True).stage == "sample"
    repo.write(StageManifest(stage="eval-hh", config_hash="abc", seed=0))
    assert repo.list_stages("eval-") == ["eval-hh"]


def test_window_archive_is_deterministic(tmp_path):
    dataset = make_dataset()
    first = WindowRepository(tmp_path / "a").save(dataset, "abc", 0)[0].read_bytes()
    second = WindowRepository(tmp_path / "b").save(dataset, "abc", 0)[0].read_bytes()
    assert first == second

    loaded, meta = WindowRepository(tmp_path / "a").load()
    assert meta["config_hash"] == "abc"
    assert [w.window_id for w in loaded.windows] == [w.window_id for w in dataset.windows]
    testing.assert_array_equal(loaded.windows[3].channels, dataset.windows[3].channels)


def test_window_archive_missing(tmp_path):
    with pytest.raises(CorruptArtifactError):
        WindowRepository(tmp_path).load()
