import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from harfusion.core.exceptions import ShapeMismatchError
from harfusion.schemas.nn import Activation, LayerSpec, Padding


class Layer:
    """
    Base class of the fixed layer set.

    Inputs are batches, channel-last: N×H×W×K for 2D maps, N×L×H×W×K for
    volumes, N×D for vectors. `params` and `grads` are parallel lists; layers
    without parameters keep them empty.

    Attributes:
        spec (LayerSpec): Hyper-parameters of the layer.
        input_shape (tuple): Per-sample input shape, set by `build`.
        params (list[np.ndarray]): Trainable tensors, weights before biases.
        grads (list[np.ndarray]): Gradients of `params` after `backward`.
    """

    def __init__(self, spec: LayerSpec):
        self.spec = spec
        self.input_shape: tuple[int, ...] = ()
        self.params: list[np.ndarray] = []
        self.grads: list[np.ndarray] = []

    def build(self, input_shape: tuple[int, ...], rng: np.random.Generator) -> tuple[int, ...]:
        """
        Allocate parameters for a per-sample input shape.

        :return: tuple[int, ...]
            Per-sample output shape.
        """
        self.input_shape = tuple(input_shape)
        return self.input_shape

    def forward(self, x: np.ndarray, training: bool = False) -> np.ndarray:
        raise NotImplementedError

    def backward(self, dout: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _check_input(self, x: np.ndarray) -> None:
        if tuple(x.shape[1:]) != self.input_shape:
            raise ShapeMismatchError(self.spec.kind.value, tuple(x.shape[1:]), self.input_shape)


def he_uniform(rng: np.random.Generator, shape: tuple[int, ...], fan_in: int) -> np.ndarray:
    limit = np.sqrt(6.0 / fan_in)
    return rng.uniform(-limit, limit, size=shape)


def _same_pads(kernel: tuple[int, ...]) -> list[tuple[int, int]]:
    return [((k - 1) // 2, k - 1 - (k - 1) // 2) for k in kernel]


class _Activated(Layer):
    def _activate(self, pre: np.ndarray) -> np.ndarray:
        if self.spec.activation is Activation.relu:
            self._mask = pre > 0
            return pre * self._mask
        self._mask = None
        return pre

    def _deactivate(self, dout: np.ndarray) -> np.ndarray:
        return dout if self._mask is None else dout * self._mask


class ConvND(_Activated):
    """
    Cross-correlation over the leading spatial axes followed by bias and activation.

    out[x, y, j] = g(b[j] + Σ_k Σ_p Σ_q w[p, q, k, j] · in[x + p, y + q, k]),
    and likewise with a temporal offset r for volumes. Weights are stored as
    (*kernel, K, J); "same" padding puts the odd pixel after the map.
    """

    def build(self, input_shape, rng):
        super().build(input_shape, rng)
        kernel = tuple(self.spec.kernel)
        dims = len(kernel)
        if len(input_shape) != dims + 1:
            raise ShapeMismatchError(self.spec.kind.value, tuple(input_shape), f"{dims} spatial axes plus channels")
        *spatial, channels = input_shape
        self.kernel = kernel
        self.pads = _same_pads(kernel) if self.spec.padding is Padding.same else [(0, 0)] * dims
        padded = [s + lo + hi for s, (lo, hi) in zip(spatial, self.pads)]
        out = [s - k + 1 for s, k in zip(padded, kernel)]
        if any(o < 1 for o in out):
            raise ShapeMismatchError(self.spec.kind.value, tuple(input_shape), f"extents >= kernel {kernel}")
        filters = self.spec.filters
        fan_in = int(np.prod(kernel)) * channels
        self.params = [he_uniform(rng, kernel + (channels, filters), fan_in), np.zeros(filters)]
        self.grads = [np.zeros_like(p) for p in self.params]
        return tuple(out) + (filters,)

    def _weight_matrix(self) -> np.ndarray:
        w = self.params[0]
        dims = len(self.kernel)
        # (*kernel, K, J) -> (K, *kernel, J) to match the window layout
        order = (dims,) + tuple(range(dims)) + (dims + 1,)
        return w.transpose(order).reshape(-1, w.shape[-1])

    def forward(self, x, training=False):
        self._check_input(x)
        dims = len(self.kernel)
        padded = np.pad(x, [(0, 0)] + self.pads + [(0, 0)])
        windows = sliding_window_view(padded, self.kernel, axis=tuple(range(1, dims + 1)))
        out_spatial = windows.shape[1 : dims + 1]
        self._cols = windows.reshape(-1, int(np.prod(windows.shape[dims + 1 :])))
        self._padded_shape = padded.shape
        self._out_spatial = out_spatial
        pre = self._cols @ self._weight_matrix() + self.params[1]
        return self._activate(pre.reshape((x.shape[0],) + out_spatial + (-1,)))

    def backward(self, dout):
        dout = self._deactivate(dout)
        w = self.params[0]
        dims = len(self.kernel)
        flat = dout.reshape(-1, w.shape[-1])
        channels = w.shape[-2]

        dw = (self._cols.T @ flat).reshape((channels,) + self.kernel + (w.shape[-1],))
        self.grads[0] = dw.transpose(tuple(range(1, dims + 1)) + (0, dims + 1))
        self.grads[1] = flat.sum(axis=0)

        dcols = (flat @ self._weight_matrix().T).reshape(
            (dout.shape[0],) + self._out_spatial + (channels,) + self.kernel
        )
        dpadded = np.zeros(self._padded_shape)
        for offset in np.ndindex(*self.kernel):
            target = (slice(None),) + tuple(slice(o, o + n) for o, n in zip(offset, self._out_spatial))
            dpadded[target] += dcols[(Ellipsis,) + offset]
        crop = (slice(None),) + tuple(slice(lo, size - hi) for (lo, hi), size in zip(self.pads, self._padded_shape[1:]))
        return dpadded[crop]


class Conv2D(ConvND):
    pass


class Conv3D(ConvND):
    pass


class MaxPool2D(Layer):
    """
    Non-overlapping max pooling; odd extents are floored (21 -> 10).
    Ties route the gradient to the first maximum.
    """

    def build(self, input_shape, rng):
        super().build(input_shape, rng)
        if len(input_shape) != 3:
            raise ShapeMismatchError("maxpool2d", tuple(input_shape), "H×W×K")
        self.pool = tuple(self.spec.kernel or (2, 2))
        height, width, channels = input_shape
        self.out_hw = (height // self.pool[0], width // self.pool[1])
        if min(self.out_hw) < 1:
            raise ShapeMismatchError("maxpool2d", tuple(input_shape), f"extents >= pool {self.pool}")
        return self.out_hw + (channels,)

    def forward(self, x, training=False):
        self._check_input(x)
        (a, b), (ho, wo) = self.pool, self.out_hw
        n, k = x.shape[0], x.shape[3]
        blocks = x[:, : ho * a, : wo * b].reshape(n, ho, a, wo, b, k).transpose(0, 1, 3, 5, 2, 4).reshape(n, ho, wo, k, a * b)
        self._argmax = blocks.argmax(axis=-1)
        self._batch = n
        return np.take_along_axis(blocks, self._argmax[..., None], axis=-1)[..., 0]

    def backward(self, dout):
        (a, b), (ho, wo) = self.pool, self.out_hw
        n, k = self._batch, self.input_shape[2]
        blocks = np.zeros((n, ho, wo, k, a * b))
        np.put_along_axis(blocks, self._argmax[..., None], dout[..., None], axis=-1)
        cropped = blocks.reshape(n, ho, wo, k, a, b).transpose(0, 1, 4, 2, 5, 3).reshape(n, ho * a, wo * b, k)
        dx = np.zeros((n,) + self.input_shape)
        dx[:, : ho * a, : wo * b] = cropped
        return dx


class Flatten(Layer):
    def build(self, input_shape, rng):
        super().build(input_shape, rng)
        return (int(np.prod(input_shape)),)

    def forward(self, x, training=False):
        self._check_input(x)
        return x.reshape(x.shape[0], -1)

    def backward(self, dout):
        return dout.reshape((dout.shape[0],) + self.input_shape)


class Dense(_Activated):
    """
    Fully connected layer: y = g(W x + b) with W of shape (units, inputs).
    """

    def build(self, input_shape, rng):
        super().build(input_shape, rng)
        if len(input_shape) != 1:
            raise ShapeMismatchError("dense", tuple(input_shape), "a flat vector")
        fan_in = input_shape[0]
        self.params = [he_uniform(rng, (self.spec.units, fan_in), fan_in), np.zeros(self.spec.units)]
        self.grads = [np.zeros_like(p) for p in self.params]
        return (self.spec.units,)

    def forward(self, x, training=False):
        self._check_input(x)
        self._x = x
        return self._activate(x @ self.params[0].T + self.params[1])

    def backward(self, dout):
        dout = self._deactivate(dout)
        self.grads[0] = dout.T @ self._x
        self.grads[1] = dout.sum(axis=0)
        return dout @ self.params[0]


class Dropout(Layer):
    """
    Inverted dropout: kept units are scaled by 1 / (1 - rate) in training, identity otherwise.
    """

    def __init__(self, spec: LayerSpec, rng: np.random.Generator | None = None):
        super().__init__(spec)
        self.rng = rng or np.random.default_rng(0)

    def forward(self, x, training=False):
        self._check_input(x)
        if not training or self.spec.rate == 0.0:
            self._scale = None
            return x
        keep = self.rng.random(x.shape) >= self.spec.rate
        self._scale = keep / (1.0 - self.spec.rate)
        return x * self._scale

    def backward(self, dout):
        return dout if self._scale is None else dout * self._scale


class Softmax(Layer):
    def forward(self, x, training=False):
        self._check_input(x)
        self._p = softmax(x)
        return self._p

    def backward(self, dout):
        p = self._p
        return p * (dout - np.sum(dout * p, axis=-1, keepdims=True))


def softmax(scores: np.ndarray) -> np.ndarray:
    """
    Row-wise softmax with max subtraction.
    """
    scores = np.asarray(scores, dtype=np.float64)
    shifted = np.exp(scores - scores.max(axis=-1, keepdims=True))
    return shifted / shifted.sum(axis=-1, keepdims=True)
