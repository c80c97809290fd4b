from enum import Enum
from itertools import combinations

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator


class FeatureKind(str, Enum):
    freq = "freq"
    och = "och"

    @property
    def code(self) -> int:
        return 0 if self is FeatureKind.freq else 1

    @property
    def depth(self) -> int:
        return 1 if self is FeatureKind.freq else 3

    @classmethod
    def from_code(cls, code: int) -> "FeatureKind":
        return cls.freq if code == 0 else cls.och


class FeatureImage(BaseModel):
    """
    H×W×D network input built from one window.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)

    pixels: np.ndarray
    kind: FeatureKind
    provenance: str
    label: int | None = None
    subject: str | None = None
    origin: str | None = None

    @field_validator("pixels", mode="before")
    @classmethod
    def _pixels(cls, value):
        array = np.asarray(value, dtype=np.float64)
        if array.ndim == 2:
            array = array[:, :, None]
        if array.ndim != 3 or array.shape[2] not in (1, 3):
            raise ValueError(f"expected H×W×D with D in (1, 3), got {array.shape}")
        if not np.all(np.isfinite(array)):
            raise ValueError("feature image contains non-finite values")
        return array

    @model_validator(mode="after")
    def _depth(self):
        if self.pixels.shape[2] != self.kind.depth:
            raise ValueError(f"{self.kind.value} images have depth {self.kind.depth}")
        return self

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.pixels.shape


class RowExpansionPlan(BaseModel):
    """
    Row sequence that makes channel pairs vertical neighbours.
    """

    model_config = ConfigDict(frozen=True)

    sequence: tuple[int, ...]
    circular: bool = True

    @property
    def rows(self) -> int:
        return len(self.sequence)

    def adjacent_pairs(self) -> set[frozenset[int]]:
        seq = self.sequence
        pairs = {frozenset((a, b)) for a, b in zip(seq, seq[1:]) if a != b}
        if self.circular and len(seq) > 1 and seq[0] != seq[-1]:
            pairs.add(frozenset((seq[-1], seq[0])))
        return pairs

    def covers_all_pairs(self, n_channels: int) -> bool:
        wanted = {frozenset(p) for p in combinations(range(n_channels), 2)}
        return wanted <= self.adjacent_pairs()
