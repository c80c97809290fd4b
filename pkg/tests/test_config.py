import pytest

from harfusion.core.config import PipelineConfig, apply_override, derive_seed, load_config
from harfusion.core.exceptions import ConfigError, ExitCode
from harfusion.schemas.evaluation import ProtocolName
from harfusion.schemas.fusion import FusionMethod


def test_defaults():
    cfg = load_config()
    assert cfg.sampling.window == 64
    assert cfg.sampling.stride == 16
    assert cfg.fusion.method is FusionMethod.avg
    assert set(cfg.modalities) == {"freq", "och"}


def test_file_and_overrides(tmp_path):
    path = tmp_path / "cfg.toml"
    path.write_text('seed = 4\n[fusion]\nmethod = "wmax"\n', encoding="utf-8")
    cfg = load_config(path, ['protocol.name="loo"', "modalities.och.train.epochs=3", "fusion.k=2"])
    assert cfg.seed == 4
    assert cfg.fusion.method is FusionMethod.wmax
    assert cfg.fusion.k == 2
    assert cfg.protocol.name is ProtocolName.loo
    assert cfg.modalities["och"].train.epochs == 3
    assert cfg.modalities["freq"].train.epochs != 3


def test_override_keeps_unparsable_values_as_strings():
    assert apply_override({}, "ingestion.preset=pamap2") == {"ingestion": {"preset": "pamap2"}}


@pytest.mark.parametrize(
    "overrides",
    [
        ["sampling.overlap=1.0"],
        ["sampling.window=1"],
        ["transforms.och_size=4"],
        ["modalities.gyro.kernel=3"],
        ["unknown.key=1"],
        ['ingestion.preset="nope"'],
        ["protocol.train_fraction=0"],
        ["no_equals_sign"],
    ],
)
def test_invalid_config_raises(overrides):
    with pytest.raises(ConfigError) as info:
        load_config(overrides=overrides)
    assert info.value.exit_code == ExitCode.CONFIG


def test_missing_and_malformed_files(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "absent.toml")
    broken = tmp_path / "broken.toml"
    broken.write_text("seed = = 1", encoding="utf-8")
    with pytest.raises(ConfigError):
        load_config(broken)


def test_stage_hash_tracks_upstream_sections_only():
    base = PipelineConfig()
    fused = load_config(overrides=['fusion.method="max"'])
    assert base.stage_hash("sample") == fused.stage_hash("sample")
    assert base.stage_hash("train") == fused.stage_hash("train")
    assert base.stage_hash("fuse") != fused.stage_hash("fuse")

    windowed = load_config(overrides=["sampling.window=32"])
    assert base.stage_hash("ingest") == windowed.stage_hash("ingest")
    assert base.stage_hash("sample") != windowed.stage_hash("sample")
    assert len(base.stage_hash("eval")) == 16


def test_augment_hash_tracks_the_fold():
    base = PipelineConfig()
    other_fold = load_config(overrides=["protocol.fold=1"])
    assert base.stage_hash("transform") == other_fold.stage_hash("transform")
    assert base.stage_hash("augment") != other_fold.stage_hash("augment")


def test_derive_seed():
    assert derive_seed(0, "train") == derive_seed(0, "train")
    assert derive_seed(0, "train") != derive_seed(0, "split")
    assert derive_seed(0, "train") != derive_seed(1, "train")
    assert 0 <= derive_seed(0, "train") < 2**64
    assert PipelineConfig(seed=9).stage_seed("augment") == derive_seed(9, "augment")
