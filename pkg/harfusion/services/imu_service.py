import logging
from pathlib import Path

import numpy as np

from harfusion.core.exceptions import (
    EmptyRecordingError,
    InvalidParameterError,
    NonMonotonicTimestampsError,
    OverlappingAnnotationsError,
)
from harfusion.repositories.recording_repo import RecordingRepository, finite_rows
from harfusion.schemas.imu import (
    CHANNELS,
    Annotation,
    ColumnMap,
    Dataset,
    DatasetSummary,
    ImuWindow,
    RecordSlice,
    Recording,
    SegmentReport,
)


logger = logging.getLogger(__name__)

RATE_TOLERANCE = 0.05


def window_stride(window: int, overlap: float) -> int:
    return int(round(window * (1.0 - overlap)))


def subject_from_path(path: Path) -> str:
    return path.stem.split("_", 1)[0]


class ImuService:
    """
    Service for recording ingestion, annotation-driven segmentation and
    sliding-window sampling.
    """

    @staticmethod
    def ingest_recording(
        path: str | Path,
        mapping: ColumnMap,
        subject: str | None = None,
        expected_rate_hz: float | None = None,
    ) -> Recording:
        """
        Read one recording file into timestamp-ordered records.

        Rows with any non-finite mapped value are dropped and counted. A nominal
        rate that differs from the measured or expected rate is logged, never resampled.

        :param path: str | Path
            Delimited text file.
        :param mapping: ColumnMap
            Binding of source columns to t and the ten channels.
        :param subject: str | None, optional
            Subject id; defaults to the file-name prefix before the first underscore.
        :param expected_rate_hz: float | None, optional
            Pipeline sample rate to compare against.
        :raises ColumnMapError:
            If a mapped column is missing.
        :raises EmptyRecordingError:
            If the file is empty or no row survives filtering.
        :raises NonMonotonicTimestampsError:
            If timestamps do not strictly increase; reports the first offending row.
        :return: Recording
            The parsed recording.
        """
        path = Path(path)
        frame = RecordingRepository(path.parent).read_table(path.name, mapping)

        keep = finite_rows(frame)
        dropped = int((~keep).sum())
        if dropped:
            logger.warning(f"{path.name}: dropped {dropped} row(s) with non-finite values.")
        frame = frame[keep]
        if frame.empty:
            raise EmptyRecordingError(path)

        t = np.rint(frame["t"].to_numpy(dtype=np.float64) * mapping.t_scale).astype(np.int64)
        steps = np.diff(t)
        if np.any(steps <= 0):
            first = int(np.argmax(steps <= 0)) + 1
            raise NonMonotonicTimestampsError(path, int(frame.index[first]))

        measured = 1000.0 / float(np.median(steps)) if len(steps) else mapping.rate_hz
        for reference in (mapping.rate_hz, expected_rate_hz):
            if reference and abs(measured - reference) > RATE_TOLERANCE * reference:
                logger.warning(f"{path.name}: measured rate {measured:.2f} Hz differs from {reference:g} Hz; not resampled.")

        labels = None
        if "label" in frame.columns:
            labels = [_label_text(v) for v in frame["label"]]

        return Recording(
            subject=subject or subject_from_path(path),
            t=t,
            channels=frame[list(CHANNELS)].to_numpy(dtype=np.float64),
            rate_hz=mapping.rate_hz,
            source=str(path),
            dropped_rows=dropped,
            row_labels=labels,
        )

    @staticmethod
    def annotations_from_labels(recording: Recording, ignore: list[str] | None = None) -> list[Annotation]:
        """
        Turn runs of a per-row label column into annotations.

        A run ends one nominal sample period after its last row.

        :param recording: Recording
            Recording ingested with a mapped label column.
        :param ignore: list[str] | None, optional
            Labels that never become annotations (transient activity ids).
        :return: list[Annotation]
            One annotation per maximal run, in time order.
        """
        if not recording.row_labels:
            return []
        skip = set(ignore or [])
        period = int(round(1000.0 / recording.rate_hz))
        labels = recording.row_labels
        annotations = []
        start = 0
        for i in range(1, len(labels) + 1):
            if i == len(labels) or labels[i] != labels[start]:
                if labels[start] not in skip:
                    annotations.append(
                        Annotation(
                            subject=recording.subject,
                            label=labels[start],
                            start_ms=int(recording.t[start]),
                            end_ms=int(recording.t[i - 1]) + period,
                        )
                    )
                start = i
        return annotations

    @staticmethod
    def segment(
        recording: Recording, annotations: list[Annotation], window: int = 64
    ) -> tuple[list[RecordSlice], list[SegmentReport]]:
        """
        Cut a recording into one slice per annotation (start_ms <= t < end_ms).

        Annotations of other subjects are ignored. Slices shorter than `window`
        records, including empty ones, are kept and reported.

        :param recording: Recording
            Source recording.
        :param annotations: list[Annotation]
            Activity durations; must be pairwise disjoint per subject.
        :param window: int, optional
            Window length used to flag short slices.
        :raises OverlappingAnnotationsError:
            If two annotations of the subject overlap.
        :return: tuple[list[RecordSlice], list[SegmentReport]]
            Slices in annotation order and one report per slice.
        """
        own = [a for a in annotations if a.subject == recording.subject]
        ordered = sorted(own, key=lambda a: (a.start_ms, a.end_ms))
        for prev, nxt in zip(ordered, ordered[1:]):
            if nxt.start_ms < prev.end_ms:
                raise OverlappingAnnotationsError(
                    recording.subject, f"[{prev.start_ms},{prev.end_ms})", f"[{nxt.start_ms},{nxt.end_ms})"
                )

        slices, reports = [], []
        for ann in own:
            lo = int(np.searchsorted(recording.t, ann.start_ms, side="left"))
            hi = int(np.searchsorted(recording.t, ann.end_ms, side="left"))
            piece = RecordSlice(
                subject=ann.subject,
                label=ann.label,
                start_ms=ann.start_ms,
                end_ms=ann.end_ms,
                t=recording.t[lo:hi],
                channels=recording.channels[lo:hi],
            )
            short = len(piece) < window
            if short:
                logger.warning(
                    f"Annotation {ann.label} [{ann.start_ms},{ann.end_ms}) of {ann.subject} "
                    f"holds {len(piece)} record(s), fewer than {window}."
                )
            slices.append(piece)
            reports.append(SegmentReport(**ann.model_dump(), n_records=len(piece), short=short))
        return slices, reports

    @staticmethod
    def sliding_windows(
        record_slice: RecordSlice, window: int = 64, overlap: float = 0.75, label: int = 0
    ) -> list[ImuWindow]:
        """
        Cut fixed-length windows from a single-activity slice.

        Yields floor((L - T) / stride) + 1 windows for L >= T, none otherwise,
        with stride = round(T * (1 - overlap)).

        :param record_slice: RecordSlice
            Records of one annotation.
        :param window: int, optional
            Window length T.
        :param overlap: float, optional
            Fraction of overlap between consecutive windows, in [0, 1).
        :param label: int, optional
            Class index stored in every window.
        :return: list[ImuWindow]
            Windows in time order.
        """
        stride = window_stride(window, overlap)
        if stride < 1:
            raise InvalidParameterError("overlap", f"{overlap} leaves no stride for window {window}")
        length = len(record_slice)
        if length < window:
            return []
        windows = []
        for offset in range(0, length - window + 1, stride):
            t0 = int(record_slice.t[offset])
            windows.append(
                ImuWindow(
                    channels=record_slice.channels[offset : offset + window].T.copy(),
                    subject=record_slice.subject,
                    label=label,
                    t0=t0,
                    window_id=f"{record_slice.subject}-{record_slice.label}-{t0}",
                )
            )
        return windows

    @staticmethod
    def build_dataset(
        recordings: list[Recording],
        annotations: list[Annotation],
        window: int = 64,
        overlap: float = 0.75,
        class_names: list[str] | None = None,
    ) -> tuple[Dataset, list[SegmentReport]]:
        """
        Segment every recording and window every slice into one dataset.

        :param class_names: list[str] | None, optional
            Class catalog; defaults to labels in order of first appearance.
        :return: tuple[Dataset, list[SegmentReport]]
            The dataset and the segmentation reports.
        """
        names = list(class_names) if class_names else list(dict.fromkeys(a.label for a in annotations))
        index = {name: i for i, name in enumerate(names)}
        windows, reports = [], []
        for recording in recordings:
            slices, slice_reports = ImuService.segment(recording, annotations, window)
            reports.extend(slice_reports)
            for piece in slices:
                if piece.label not in index:
                    logger.warning(f"Skipping slice with label {piece.label!r} outside the class catalog.")
                    continue
                windows.extend(ImuService.sliding_windows(piece, window, overlap, label=index[piece.label]))
        subjects = sorted({r.subject for r in recordings})
        return Dataset(windows=windows, class_names=names, subjects=subjects), reports

    @staticmethod
    def dataset_summary(dataset: Dataset) -> DatasetSummary:
        """
        Count windows per subject and class.
        """
        counts = np.zeros((len(dataset.subjects), len(dataset.class_names)), dtype=np.int64)
        row = {s: i for i, s in enumerate(dataset.subjects)}
        for window in dataset.windows:
            counts[row[window.subject], window.label] += 1
        return DatasetSummary(
            subjects=dataset.subjects,
            class_names=dataset.class_names,
            counts=counts.tolist(),
            total=int(counts.sum()),
        )


def _label_text(value) -> str:
    if isinstance(value, float) and value.is_integer():
        return str(int(value))
    return str(value)


def merge_by_subject(recordings: list[Recording]) -> list[Recording]:
    """
    Concatenate each subject's recordings in order of their first timestamp.

    :raises NonMonotonicTimestampsError:
        If two recordings of a subject overlap in time.
    """
    grouped: dict[str, list[Recording]] = {}
    for recording in recordings:
        grouped.setdefault(recording.subject, []).append(recording)
    merged = []
    for subject in sorted(grouped):
        parts = sorted(grouped[subject], key=lambda r: int(r.t[0]))
        t = np.concatenate([r.t for r in parts])
        steps = np.diff(t)
        if np.any(steps <= 0):
            raise NonMonotonicTimestampsError(f"recordings of {subject}", int(np.argmax(steps <= 0)) + 1)
        labels = None
        if all(r.row_labels is not None for r in parts):
            labels = [label for r in parts for label in r.row_labels]
        merged.append(
            Recording(
                subject=subject,
                t=t,
                channels=np.concatenate([r.channels for r in parts]),
                rate_hz=parts[0].rate_hz,
                source=";".join(r.source for r in parts),
                dropped_rows=sum(r.dropped_rows for r in parts),
                row_labels=labels,
            )
        )
    return merged
