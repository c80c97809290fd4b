import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from harfusion.schemas.kinematics import Quaternion


CHANNELS = ("ax", "ay", "az", "gx", "gy", "gz", "qx", "qy", "qz", "qw")
"""
Channel order of every window: acceleration, angular velocity, orientation.
"""

N_CHANNELS = len(CHANNELS)
ACCEL_GYRO = slice(0, 6)
QUAT = slice(6, 10)


def _float_matrix(value, columns: int | None = None, rows: int | None = None) -> np.ndarray:
    array = np.asarray(value, dtype=np.float64)
    if array.ndim != 2:
        raise ValueError(f"expected a 2D array, got shape {array.shape}")
    if columns is not None and array.shape[1] != columns:
        raise ValueError(f"expected {columns} columns, got {array.shape[1]}")
    if rows is not None and array.shape[0] != rows:
        raise ValueError(f"expected {rows} rows, got {array.shape[0]}")
    return array


class ImuRecord(BaseModel):
    t: int
    a: tuple[float, float, float]
    g: tuple[float, float, float]
    q: Quaternion


class ColumnMap(BaseModel):
    """
    Binding of source file columns to the timestamp and the ten channels.

    Column names are strings for files with a header row and integer positions
    for header-less files.
    """

    model_config = ConfigDict(extra="forbid")

    t: str | int = "t"
    ax: str | int = "ax"
    ay: str | int = "ay"
    az: str | int = "az"
    gx: str | int = "gx"
    gy: str | int = "gy"
    gz: str | int = "gz"
    qx: str | int = "qx"
    qy: str | int = "qy"
    qz: str | int = "qz"
    qw: str | int = "qw"
    label: str | int | None = None
    delimiter: str | None = ","
    header: bool = True
    t_scale: float = 1.0
    rate_hz: float = 50.0

    def sources(self) -> dict[str, str | int]:
        """
        Source column for the timestamp followed by the channels in window order.
        """
        return {name: getattr(self, name) for name in ("t",) + CHANNELS}


class Recording(BaseModel):
    """
    One subject's IMU stream: integer millisecond timestamps and the ten channels.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)

    subject: str
    t: np.ndarray
    channels: np.ndarray
    rate_hz: float = 50.0
    source: str = ""
    dropped_rows: int = 0
    row_labels: list[str] | None = None

    @field_validator("t", mode="before")
    @classmethod
    def _timestamps(cls, value):
        return np.asarray(value, dtype=np.int64).reshape(-1)

    @field_validator("channels", mode="before")
    @classmethod
    def _channels(cls, value):
        return _float_matrix(value, columns=N_CHANNELS)

    @model_validator(mode="after")
    def _consistent(self):
        if len(self.t) == 0:
            raise ValueError("recording must not be empty")
        if len(self.t) != len(self.channels):
            raise ValueError("timestamps and channels differ in length")
        if self.rate_hz <= 0:
            raise ValueError("rate_hz must be positive")
        return self

    def __len__(self) -> int:
        return len(self.t)

    @property
    def records(self) -> list[ImuRecord]:
        return [
            ImuRecord(t=int(t), a=tuple(row[0:3]), g=tuple(row[3:6]), q=Quaternion(*row[6:10]))
            for t, row in zip(self.t, self.channels)
        ]


class Annotation(BaseModel):
    subject: str
    label: str
    start_ms: int
    end_ms: int

    @model_validator(mode="after")
    def _ordered(self):
        if self.start_ms >= self.end_ms:
            raise ValueError("start_ms must be < end_ms")
        return self


class RecordSlice(BaseModel):
    """
    Records of one recording inside one annotation's duration.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)

    subject: str
    label: str
    start_ms: int
    end_ms: int
    t: np.ndarray
    channels: np.ndarray

    def __len__(self) -> int:
        return len(self.t)


class ImuWindow(BaseModel):
    """
    A 10×T sample cut from a single-activity slice.

    `label` indexes the owning dataset's class catalog; `provenance` is the
    origin window id plus a transform descriptor for augmented windows.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)

    channels: np.ndarray
    subject: str
    label: int
    t0: int
    window_id: str = ""
    provenance: str | None = None

    @field_validator("channels", mode="before")
    @classmethod
    def _channels(cls, value):
        return _float_matrix(value, rows=N_CHANNELS)

    @property
    def length(self) -> int:
        return self.channels.shape[1]

    @property
    def origin(self) -> str:
        if self.provenance:
            return self.provenance.split("~", 1)[0]
        return self.window_id


class Dataset(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    windows: list[ImuWindow]
    class_names: list[str]
    subjects: list[str]

    @model_validator(mode="after")
    def _catalogs(self):
        if len(self.class_names) < 2:
            raise ValueError("a dataset needs at least two classes")
        known = set(self.subjects)
        for window in self.windows:
            if not 0 <= window.label < len(self.class_names):
                raise ValueError(f"window {window.window_id} has unknown label {window.label}")
            if window.subject not in known:
                raise ValueError(f"window {window.window_id} has unknown subject {window.subject}")
        return self

    def __len__(self) -> int:
        return len(self.windows)

    @property
    def labels(self) -> np.ndarray:
        return np.array([w.label for w in self.windows], dtype=np.int64)

    @property
    def window_subjects(self) -> np.ndarray:
        return np.array([w.subject for w in self.windows], dtype=object)

    def subset(self, indices) -> "Dataset":
        return Dataset(
            windows=[self.windows[i] for i in indices],
            class_names=self.class_names,
            subjects=self.subjects,
        )

    def with_windows(self, windows: list[ImuWindow]) -> "Dataset":
        return Dataset(windows=windows, class_names=self.class_names, subjects=self.subjects)


class SegmentReport(BaseModel):
    subject: str
    label: str
    start_ms: int
    end_ms: int
    n_records: int
    short: bool


class DatasetSummary(BaseModel):
    subjects: list[str]
    class_names: list[str]
    counts: list[list[int]]
    total: int

    def to_text(self) -> str:
        width = max([len(c) for c in self.class_names] + [5]) + 2
        head = "subject".ljust(10) + "".join(c.rjust(width) for c in self.class_names) + "total".rjust(width)
        lines = [head]
        for subject, row in zip(self.subjects, self.counts):
            lines.append(subject.ljust(10) + "".join(str(n).rjust(width) for n in row) + str(sum(row)).rjust(width))
        column_totals = [sum(col) for col in zip(*self.counts)] if self.counts else [0] * len(self.class_names)
        lines.append("total".ljust(10) + "".join(str(n).rjust(width) for n in column_totals) + str(self.total).rjust(width))
        return "\n".join(lines)
