from enum import Enum

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator


class ProtocolName(str, Enum):
    hh = "hh"
    loo = "loo"


class ConfusionMatrix(BaseModel):
    """
    Rows are ground truth, columns are predictions.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)

    counts: np.ndarray

    @field_validator("counts", mode="before")
    @classmethod
    def _square(cls, value):
        counts = np.asarray(value, dtype=np.int64)
        if counts.ndim != 2 or counts.shape[0] != counts.shape[1]:
            raise ValueError(f"confusion matrix must be C×C, got {counts.shape}")
        if np.any(counts < 0):
            raise ValueError("counts must be nonnegative")
        return counts

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def classes(self) -> int:
        return self.counts.shape[0]


class ClassMetrics(BaseModel):
    name: str
    precision: float
    recall: float
    f1: float
    support: int


class FoldMetrics(BaseModel):
    fold: str
    accuracy: float
    macro_precision: float
    macro_recall: float
    macro_f1: float
    n_test: int


class MetricReport(BaseModel):
    """
    Headline metrics are the macro averages; leave-one-out headlines are the
    unweighted mean over folds.
    """

    accuracy: float
    macro_precision: float
    macro_recall: float
    macro_f1: float
    per_class: list[ClassMetrics] = []
    folds: list[FoldMetrics] = []
    zero_division: list[str] = []
    confusion: list[list[int]] = []


class GridRow(BaseModel):
    modalities: list[str]
    method: str
    reports: dict[str, MetricReport] = {}


class EvaluationReport(BaseModel):
    """
    Everything one `eval` run produced: the configured subset grid, the
    fusion-method comparison and optional augmentation sweep.
    """

    protocol: str
    class_names: list[str]
    config_hash: str
    seed: int
    grid: list[GridRow] = []
    fusion_comparison: dict[str, MetricReport] = {}
    augmentation_sweep: dict[str, dict[str, float]] = {}


class Fold(BaseModel):
    """
    Index partition of a dataset for one train/test round.
    """

    name: str
    train: list[int]
    test: list[int]


class FoldPrediction(BaseModel):
    """
    Test-set probabilities of every modality for one fold, rows aligned with `window_ids`.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)

    fold: str
    window_ids: list[str]
    truths: list[int]
    probabilities: dict[str, np.ndarray] = {}
    loss_curves: dict[str, list[float]] = {}
