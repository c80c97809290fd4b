from enum import Enum
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator


class LayerKind(str, Enum):
    conv2d = "conv2d"
    conv3d = "conv3d"
    maxpool2d = "maxpool2d"
    flatten = "flatten"
    dense = "dense"
    dropout = "dropout"
    softmax = "softmax"


class Padding(str, Enum):
    valid = "valid"
    same = "same"


class Activation(str, Enum):
    relu = "relu"
    linear = "linear"


class LayerSpec(BaseModel):
    """
    Hyper-parameters of one layer.

    `kernel` is (P, Q) for conv2d, (R, P, Q) for conv3d (temporal extent first)
    and the pool window for maxpool2d.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: LayerKind
    kernel: tuple[int, ...] | None = None
    filters: int | None = None
    units: int | None = None
    padding: Padding = Padding.valid
    activation: Activation = Activation.linear
    rate: float = 0.0

    @model_validator(mode="after")
    def _extents(self):
        if self.kernel is not None and any(k <= 0 for k in self.kernel):
            raise ValueError("kernel extents must be positive")
        if self.kind is LayerKind.conv2d and (self.kernel is None or len(self.kernel) != 2 or not self.filters):
            raise ValueError("conv2d needs a 2D kernel and a filter count")
        if self.kind is LayerKind.conv3d and (self.kernel is None or len(self.kernel) != 3 or not self.filters):
            raise ValueError("conv3d needs a 3D kernel and a filter count")
        if self.kind is LayerKind.dense and not self.units:
            raise ValueError("dense needs a unit count")
        if not 0.0 <= self.rate < 1.0:
            raise ValueError("dropout rate must lie in [0, 1)")
        return self


class TrainConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    lr: float = 0.001
    momentum: float = 0.9
    l2_lambda: float = 1e-5
    batch_size: int = 64
    epochs: int = 50
    dropout_rate: float = 0.5
    reduction: Literal["mean", "sum"] = "mean"
    seed: int | None = None

    @field_validator("lr")
    @classmethod
    def _lr(cls, value: float) -> float:
        if value <= 0:
            raise ValueError("lr must be > 0")
        return value

    @field_validator("momentum")
    @classmethod
    def _momentum(cls, value: float) -> float:
        if not 0.0 <= value < 1.0:
            raise ValueError("momentum must lie in [0, 1)")
        return value

    @model_validator(mode="after")
    def _counts(self):
        if self.batch_size < 1 or self.epochs < 0:
            raise ValueError("batch_size must be >= 1 and epochs >= 0")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError("dropout_rate must lie in [0, 1)")
        return self


class ModelParams(BaseModel):
    """
    All weights and biases of one network, in layer order (w, b per layer).
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)

    tensors: list[np.ndarray]
    seed: int
    architecture_hash: str
    input_shape: tuple[int, ...]
    layers: list[LayerSpec]

    def equals(self, other: "ModelParams") -> bool:
        return (
            self.architecture_hash == other.architecture_hash
            and len(self.tensors) == len(other.tensors)
            and all(np.array_equal(a, b) for a, b in zip(self.tensors, other.tensors))
        )


class TrainResult(BaseModel):
    """
    Trained parameters plus the per-epoch mean batch loss.
    """

    params: ModelParams
    config: TrainConfig
    loss_curve: list[float] = []
    n_samples: int = 0
