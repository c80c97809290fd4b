from pathlib import Path

import numpy as np
import pandas as pd

from harfusion.core.exceptions import ColumnMapError, EmptyRecordingError
from harfusion.schemas.imu import CHANNELS, Annotation, ColumnMap, Recording


ANNOTATION_COLUMNS = ["subject", "label", "start_ms", "end_ms"]


class RecordingRepository:
    """
    Repository for raw IMU recordings and annotation tables stored as delimited text.

    Provides methods to read recordings through a column map and to write
    recordings and annotations in the canonical column layout.
    """

    def __init__(self, root: str | Path):
        """
        Initialize the repository with its directory.

        :param root: str | Path
            Directory holding recording and annotation files.
        """
        self.root = Path(root)

    def _path(self, name: str | Path) -> Path:
        path = Path(name)
        return path if path.is_absolute() else self.root / path

    def list_recordings(self, pattern: str = "*.csv") -> list[Path]:
        return sorted(p for p in self.root.glob(pattern) if p.name != "annotations.csv")

    def read_table(self, name: str | Path, mapping: ColumnMap) -> pd.DataFrame:
        """
        Read the mapped source columns of one recording file.

        The frame has columns `t`, the ten channels and, when mapped, `label`,
        indexed by the source row number.

        :param name: str | Path
            File name relative to the repository root, or an absolute path.
        :param mapping: ColumnMap
            Binding of source columns to the timestamp and channels.
        :raises EmptyRecordingError:
            If the file has no data rows.
        :raises ColumnMapError:
            If a mapped column is absent from the file.
        :return: pd.DataFrame
            Raw mapped values; nothing is dropped yet.
        """
        path = self._path(name)
        sep = mapping.delimiter if mapping.delimiter is not None else r"\s+"
        try:
            frame = pd.read_csv(path, sep=sep, header=0 if mapping.header else None)
        except pd.errors.EmptyDataError as e:
            raise EmptyRecordingError(path, log_message=e)
        if frame.empty:
            raise EmptyRecordingError(path)

        sources = mapping.sources()
        if mapping.label is not None:
            sources["label"] = mapping.label
        missing = [str(col) for col in sources.values() if col not in frame.columns]
        if missing:
            raise ColumnMapError(", ".join(missing), path)

        mapped = pd.DataFrame({name: frame[col] for name, col in sources.items()})
        numeric = [name for name in sources if name != "label"]
        mapped[numeric] = mapped[numeric].apply(pd.to_numeric, errors="coerce")
        return mapped

    def write_recording(self, recording: Recording, name: str) -> Path:
        path = self._path(name)
        path.parent.mkdir(parents=True, exist_ok=True)
        frame = pd.DataFrame(recording.channels, columns=list(CHANNELS))
        frame.insert(0, "t", recording.t)
        frame.to_csv(path, index=False, lineterminator="\n")
        return path

    def read_annotations(self, name: str | Path = "annotations.csv") -> list[Annotation]:
        path = self._path(name)
        frame = pd.read_csv(path, dtype={"subject": str, "label": str})
        missing = [c for c in ANNOTATION_COLUMNS if c not in frame.columns]
        if missing:
            raise ColumnMapError(", ".join(missing), path)
        return [
            Annotation(subject=row.subject, label=row.label, start_ms=int(row.start_ms), end_ms=int(row.end_ms))
            for row in frame.itertuples(index=False)
        ]

    def write_annotations(self, annotations: list[Annotation], name: str = "annotations.csv") -> Path:
        path = self._path(name)
        path.parent.mkdir(parents=True, exist_ok=True)
        frame = pd.DataFrame([a.model_dump() for a in annotations], columns=ANNOTATION_COLUMNS)
        frame.to_csv(path, index=False, lineterminator="\n")
        return path


def finite_rows(frame: pd.DataFrame) -> np.ndarray:
    numeric = frame.drop(columns=["label"], errors="ignore").to_numpy(dtype=np.float64)
    return np.all(np.isfinite(numeric), axis=1)
