import numpy as np
import pandas as pd
import pytest
from numpy import testing

from harfusion.core.exceptions import (
    ColumnMapError,
    EmptyRecordingError,
    InvalidParameterError,
    NonMonotonicTimestampsError,
    OverlappingAnnotationsError,
)
from harfusion.repositories.recording_repo import RecordingRepository
from harfusion.schemas.imu import Annotation, ColumnMap
from harfusion.services.imu_service import ImuService, merge_by_subject

from conftest import make_recording


def write_csv(path, recording):
    return RecordingRepository(path.parent).write_recording(recording, path.name)


def test_ingest_roundtrips_canonical_file(tmp_path, recording):
    path = write_csv(tmp_path / "S01_walk.csv", recording)
    loaded = ImuService.ingest_recording(path, ColumnMap())
    assert loaded.subject == "S01"
    testing.assert_array_equal(loaded.t, recording.t)
    testing.assert_allclose(loaded.channels, recording.channels)


def test_ingest_drops_non_finite_rows(tmp_path, recording):
    path = write_csv(tmp_path / "S01.csv", recording)
    frame = pd.read_csv(path)
    frame.loc[5, "gx"] = np.nan
    frame.loc[9, "qw"] = np.inf
    frame.to_csv(path, index=False)
    loaded = ImuService.ingest_recording(path, ColumnMap())
    assert loaded.dropped_rows == 2
    assert len(loaded) == len(recording) - 2


def test_ingest_rejects_non_monotonic_timestamps(tmp_path, recording):
    path = write_csv(tmp_path / "S01.csv", recording)
    frame = pd.read_csv(path)
    frame.loc[10, "t"] = frame.loc[9, "t"]
    frame.to_csv(path, index=False)
    with pytest.raises(NonMonotonicTimestampsError):
        ImuService.ingest_recording(path, ColumnMap())


def test_ingest_reports_missing_column(tmp_path, recording):
    path = write_csv(tmp_path / "S01.csv", recording)
    with pytest.raises(ColumnMapError):
        ImuService.ingest_recording(path, ColumnMap(gx="gyro_x"))


def test_ingest_empty_file(tmp_path):
    path = tmp_path / "S01.csv"
    path.write_text("t,ax,ay,az,gx,gy,gz,qx,qy,qz,qw\n")
    with pytest.raises(EmptyRecordingError):
        ImuService.ingest_recording(path, ColumnMap())


def test_ingest_headerless_whitespace_file_with_labels(tmp_path, recording):
    # seconds, label, then the ten channels with the quaternion scalar first
    rows = [
        [t / 1000.0, 1 if i < 60 else 2, *c[:6], c[9], c[6], c[7], c[8]]
        for i, (t, c) in enumerate(zip(recording.t, recording.channels))
    ]
    path = tmp_path / "subject101.dat"
    path.write_text("\n".join(" ".join(repr(float(v)) for v in row) for row in rows) + "\n")
    mapping = ColumnMap(
        t=0, label=1, ax=2, ay=3, az=4, gx=5, gy=6, gz=7, qw=8, qx=9, qy=10, qz=11,
        delimiter=None, header=False, t_scale=1000.0,
    )
    loaded = ImuService.ingest_recording(path, mapping)
    testing.assert_array_equal(loaded.t, recording.t)
    testing.assert_allclose(loaded.channels, recording.channels)

    annotations = ImuService.annotations_from_labels(loaded, ignore=["0"])
    assert [a.label for a in annotations] == ["1", "2"]
    assert annotations[0].start_ms == 0
    assert annotations[0].end_ms == annotations[1].start_ms == 1200


def test_annotations_skip_ignored_labels(recording):
    recording.row_labels = ["0"] * 50 + ["3"] * 62
    annotations = ImuService.annotations_from_labels(recording, ignore=["0"])
    assert len(annotations) == 1
    assert annotations[0].label == "3"
    assert annotations[0].start_ms == 1000


def test_segment_and_window_counts(recording):
    annotation = Annotation(subject="S01", label="walk", start_ms=0, end_ms=112 * 20)
    slices, reports = ImuService.segment(recording, [annotation])
    assert len(slices[0]) == 112
    assert not reports[0].short
    windows = ImuService.sliding_windows(slices[0], 64, 0.75)
    assert len(windows) == 4
    assert [w.t0 for w in windows] == [0, 320, 640, 960]
    testing.assert_array_equal(windows[1].channels, recording.channels[16:80].T)


def test_segment_is_half_open(recording):
    annotation = Annotation(subject="S01", label="walk", start_ms=20, end_ms=100)
    slices, _ = ImuService.segment(recording, [annotation])
    testing.assert_array_equal(slices[0].t, [20, 40, 60, 80])


def test_short_slice_is_reported_not_windowed(recording):
    annotation = Annotation(subject="S01", label="walk", start_ms=0, end_ms=63 * 20)
    slices, reports = ImuService.segment(recording, [annotation])
    assert reports[0].short and reports[0].n_records == 63
    assert ImuService.sliding_windows(slices[0], 64, 0.75) == []


def test_overlap_without_stride_is_a_parameter_error(recording):
    annotation = Annotation(subject="S01", label="walk", start_ms=0, end_ms=400)
    slices, _ = ImuService.segment(recording, [annotation])
    with pytest.raises(InvalidParameterError):
        ImuService.sliding_windows(slices[0], window=4, overlap=0.9)


def test_overlapping_annotations_rejected(recording):
    annotations = [
        Annotation(subject="S01", label="a", start_ms=0, end_ms=500),
        Annotation(subject="S01", label="b", start_ms=400, end_ms=900),
    ]
    with pytest.raises(OverlappingAnnotationsError):
        ImuService.segment(recording, annotations)


@pytest.mark.parametrize("length, overlap, expected", [(64, 0.75, 1), (79, 0.75, 1), (80, 0.75, 2), (128, 0.5, 3)])
def test_window_count_formula(length, overlap, expected):
    recording = make_recording(n=length)
    annotation = Annotation(subject="S01", label="a", start_ms=0, end_ms=20 * length)
    slices, _ = ImuService.segment(recording, [annotation])
    assert len(ImuService.sliding_windows(slices[0], 64, overlap)) == expected


def test_build_dataset_and_summary():
    recordings = [make_recording("S01", n=224), make_recording("S02", n=224, seed=1)]
    annotations = [
        Annotation(subject=s, label=label, start_ms=lo, end_ms=hi)
        for s in ("S01", "S02")
        for label, lo, hi in (("walk", 0, 2240), ("run", 2240, 4480))
    ]
    dataset, reports = ImuService.build_dataset(recordings, annotations, 64, 0.75)
    assert dataset.class_names == ["walk", "run"]
    summary = ImuService.dataset_summary(dataset)
    assert summary.counts == [[4, 4], [4, 4]]
    assert summary.total == 16
    assert len(reports) == 4


def test_merge_by_subject_orders_by_time():
    late = make_recording("S01", n=10, t0=1000)
    early = make_recording("S01", n=10, t0=0)
    other = make_recording("S02", n=5)
    merged = merge_by_subject([late, other, early])
    assert [r.subject for r in merged] == ["S01", "S02"]
    testing.assert_array_equal(merged[0].t[:10], early.t)
    assert len(merged[0]) == 20


def test_merge_by_subject_rejects_overlap():
    with pytest.raises(NonMonotonicTimestampsError):
        merge_by_subject([make_recording("S01", n=10, t0=0), make_recording("S01", n=10, t0=100)])
