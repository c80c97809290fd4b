from enum import Enum

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator


PROB_TOLERANCE = 1e-9


class FusionMethod(str, Enum):
    max = "max"
    avg = "avg"
    wmax = "wmax"
    wavg = "wavg"


class ProbDist(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    p: np.ndarray

    @field_validator("p", mode="before")
    @classmethod
    def _valid(cls, value):
        p = np.asarray(value, dtype=np.float64).reshape(-1)
        if p.size == 0 or not np.all(np.isfinite(p)):
            raise ValueError("probabilities must be finite and non-empty")
        if np.any(p < 0):
            raise ValueError("probabilities must be nonnegative")
        if abs(p.sum() - 1.0) > PROB_TOLERANCE:
            raise ValueError(f"probabilities sum to {p.sum()!r}, not 1")
        return p

    @property
    def classes(self) -> int:
        return self.p.size


class FusionInput(BaseModel):
    """
    Per-modality distributions for one sample.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)

    dists: list[ProbDist]
    modalities: list[str] = []

    @model_validator(mode="after")
    def _shared_classes(self):
        if not self.dists:
            raise ValueError("fusion needs at least one modality")
        if len({d.classes for d in self.dists}) != 1:
            raise ValueError("all modalities must share the class count")
        if self.modalities and len(self.modalities) != len(self.dists):
            raise ValueError("one name per modality")
        return self

    @property
    def matrix(self) -> np.ndarray:
        """
        M×C array of the stacked distributions.
        """
        return np.stack([d.p for d in self.dists])


class Decision(BaseModel):
    index: int
    tie: bool = False
