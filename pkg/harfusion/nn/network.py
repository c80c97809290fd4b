import hashlib
import json

import numpy as np

from harfusion.core.exceptions import ArchitectureMismatchError, ShapeMismatchError
from harfusion.nn.layers import Conv2D, Conv3D, Dense, Dropout, Flatten, Layer, MaxPool2D, Softmax
from harfusion.schemas.nn import LayerKind, LayerSpec, ModelParams


LAYER_TYPES: dict[LayerKind, type[Layer]] = {
    LayerKind.conv2d: Conv2D,
    LayerKind.conv3d: Conv3D,
    LayerKind.maxpool2d: MaxPool2D,
    LayerKind.flatten: Flatten,
    LayerKind.dense: Dense,
    LayerKind.dropout: Dropout,
    LayerKind.softmax: Softmax,
}


def architecture_hash(layers: list[LayerSpec], input_shape: tuple[int, ...]) -> str:
    """
    First 8 bytes (16 hex characters) of SHA-256 over the canonical layer list and input shape.
    """
    payload = json.dumps(
        {"input_shape": list(input_shape), "layers": [spec.model_dump(mode="json") for spec in layers]},
        sort_keys=True,
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]


class Network:
    """
    Sequential network over the fixed layer set.

    Parameters are drawn from a generator seeded with (seed, 0) in layer
    order; dropout masks come from a separate generator seeded with (seed, 1),
    so a network rebuilt with the same seed replays the same training run.

    Attributes:
        layers (list[Layer]): Built layers in forward order.
        specs (list[LayerSpec]): Their hyper-parameters.
        input_shape (tuple[int, ...]): Per-sample input shape.
        output_shape (tuple[int, ...]): Per-sample output shape.
        seed (int): Seed for initialization and dropout.
    """

    def __init__(self, specs: list[LayerSpec], input_shape: tuple[int, ...], seed: int = 0):
        self.specs = list(specs)
        self.input_shape = tuple(int(s) for s in input_shape)
        self.seed = int(seed)
        init_rng = np.random.default_rng([self.seed, 0])
        dropout_rng = np.random.default_rng([self.seed, 1])

        self.layers: list[Layer] = []
        shape = self.input_shape
        for spec in self.specs:
            layer_type = LAYER_TYPES[spec.kind]
            layer = layer_type(spec, dropout_rng) if layer_type is Dropout else layer_type(spec)
            shape = layer.build(shape, init_rng)
            self.layers.append(layer)
        self.output_shape = shape

    @property
    def architecture_hash(self) -> str:
        return architecture_hash(self.specs, self.input_shape)

    @property
    def ends_with_softmax(self) -> bool:
        return bool(self.layers) and isinstance(self.layers[-1], Softmax)

    @property
    def params(self) -> list[np.ndarray]:
        return [p for layer in self.layers for p in layer.params]

    @property
    def grads(self) -> list[np.ndarray]:
        return [g for layer in self.layers for g in layer.grads]

    def weights(self) -> list[np.ndarray]:
        """
        Weight tensors only; biases are excluded from L2 regularization.
        """
        return [layer.params[0] for layer in self.layers if layer.params]

    def is_weight(self) -> list[bool]:
        return [i == 0 for layer in self.layers for i in range(len(layer.params))]

    def forward(self, x: np.ndarray, training: bool = False, logits: bool = False) -> np.ndarray:
        """
        Run the batch through the layers.

        :param x: np.ndarray
            Batch of shape (N, *input_shape).
        :param training: bool, optional
            Activate dropout.
        :param logits: bool, optional
            Stop before a trailing softmax layer.
        :return: np.ndarray
            Probabilities, or scores when `logits` is set.
        """
        x = np.asarray(x, dtype=np.float64)
        if tuple(x.shape[1:]) != self.input_shape:
            raise ShapeMismatchError("network input", tuple(x.shape[1:]), self.input_shape)
        layers = self.layers[:-1] if logits and self.ends_with_softmax else self.layers
        for layer in layers:
            x = layer.forward(x, training=training)
        return x

    def backward(self, dout: np.ndarray, from_logits: bool = False) -> np.ndarray:
        """
        Propagate an output gradient back, filling every layer's `grads`.

        :param dout: np.ndarray
            Gradient with respect to the network output, or to the softmax
            scores when `from_logits` is set.
        :return: np.ndarray
            Gradient with respect to the input batch.
        """
        layers = self.layers[:-1] if from_logits and self.ends_with_softmax else self.layers
        for layer in reversed(layers):
            dout = layer.backward(dout)
        return dout

    def predict_proba(self, x: np.ndarray, batch_size: int = 64) -> np.ndarray:
        """
        Inference in fixed batches; read-only with respect to parameters.
        """
        x = np.asarray(x, dtype=np.float64)
        if len(x) == 0:
            return np.zeros((0,) + self.output_shape)
        return np.concatenate([self.forward(x[i : i + batch_size]) for i in range(0, len(x), batch_size)])

    def get_params(self) -> ModelParams:
        return ModelParams(
            tensors=[p.copy() for p in self.params],
            seed=self.seed,
            architecture_hash=self.architecture_hash,
            input_shape=self.input_shape,
            layers=self.specs,
        )

    def set_params(self, params: ModelParams) -> None:
        """
        Load parameters into the built layers.

        :raises ArchitectureMismatchError:
            If the parameters belong to another architecture.
        :raises ShapeMismatchError:
            If a tensor's shape differs from the layer's.
        """
        if params.architecture_hash != self.architecture_hash:
            raise ArchitectureMismatchError("<in memory>", params.architecture_hash, self.architecture_hash)
        own = self.params
        if len(own) != len(params.tensors):
            raise ShapeMismatchError("parameter list", len(params.tensors), len(own))
        for target, source in zip(own, params.tensors):
            if target.shape != source.shape:
                raise ShapeMismatchError("parameter tensor", source.shape, target.shape)
            target[...] = source

    @classmethod
    def from_params(cls, params: ModelParams) -> "Network":
        network = cls(params.layers, params.input_shape, seed=params.seed)
        network.set_params(params)
        return network
