import numpy as np
import pytest
from numpy import testing
from pydantic import ValidationError

from harfusion.repositories.recording_repo import RecordingRepository
from harfusion.schemas.synth import DEFAULT_PROFILES, SynthConfig
from harfusion.services.imu_service import ImuService, merge_by_subject
from harfusion.services.synth_service import SynthService, recording_length


@pytest.fixture(scope="module")
def generated():
    return SynthService.generate(SynthConfig(subjects=2, windows_per_class=10), seed=11)


def test_recording_length():
    assert recording_length(10) == 208
    assert recording_length(1) == 64


def test_generate_shapes(generated):
    recordings, annotations = generated
    assert len(recordings) == 2 * len(DEFAULT_PROFILES)
    assert len(annotations) == len(recordings)
    for _, recording in recordings:
        assert len(recording) == 208
        assert recording.channels.shape == (208, 10)
        testing.assert_allclose(np.linalg.norm(recording.channels[:, 6:], axis=1), 1.0, atol=1e-12)


def test_generate_is_deterministic(generated):
    again, _ = SynthService.generate(SynthConfig(subjects=2, windows_per_class=10), seed=11)
    for (name_a, a), (name_b, b) in zip(generated[0], again):
        assert name_a == name_b
        testing.assert_array_equal(a.channels, b.channels)
    other, _ = SynthService.generate(SynthConfig(subjects=2, windows_per_class=10), seed=12)
    assert not np.array_equal(other[0][1].channels, generated[0][0][1].channels)


def test_config_seed_overrides_argument():
    a, _ = SynthService.generate(SynthConfig(subjects=1, windows_per_class=1, seed=5), seed=0)
    b, _ = SynthService.generate(SynthConfig(subjects=1, windows_per_class=1, seed=5), seed=99)
    testing.assert_array_equal(a[0][1].channels, b[0][1].channels)


def test_windows_per_class(generated):
    recordings, annotations = generated
    merged = merge_by_subject([r for _, r in recordings])
    dataset, _ = ImuService.build_dataset(merged, annotations, 64, 0.75)
    summary = ImuService.dataset_summary(dataset)
    assert dataset.class_names == [p.name for p in DEFAULT_PROFILES]
    assert summary.counts == [[10] * len(DEFAULT_PROFILES)] * 2


def test_subjects_have_distinct_heading_offsets(generated):
    recordings, _ = generated
    rest = {r.subject: r.channels[0, 6:] for name, r in recordings if name.endswith("_RA.csv")}
    assert not np.allclose(rest["S01"], rest["S02"], atol=1e-3)


def test_write_round_trips_annotations(tmp_path, generated):
    recordings, annotations = generated
    paths = SynthService.write(tmp_path, recordings[:2], annotations[:2])
    assert [p.name for p in paths] == ["S01_GT.csv", "S01_HN.csv", "annotations.csv"]
    assert RecordingRepository(tmp_path).read_annotations() == annotations[:2]


def test_rejects_duplicate_profiles():
    with pytest.raises(ValidationError):
        SynthConfig(classes=[DEFAULT_PROFILES[0], DEFAULT_PROFILES[0]])
    with pytest.raises(ValidationError):
        SynthConfig(subjects=0)


def test_twist_has_far_more_gyro_energy_than_rest(generated):
    recordings, _ = generated
    energy = {name: np.sum(r.channels[:, 3:6] ** 2) for name, r in recordings if r.subject == "S01"}
    assert energy["S01_TS.csv"] > 10 * energy["S01_RA.csv"]
