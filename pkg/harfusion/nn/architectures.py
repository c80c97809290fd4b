from harfusion.core.exceptions import InvalidParameterError
from harfusion.schemas.nn import Activation, LayerKind, LayerSpec, Padding


def build_m1_architecture(
    height: int,
    width: int,
    classes: int,
    conv1_filters: int = 32,
    conv2_filters: int = 64,
    kernel: int = 5,
    hidden_units: int = 128,
    dropout_rate: float = 0.5,
) -> list[LayerSpec]:
    """
    Two-stage convolutional classifier used for every image modality.

    conv k×k (same, relu) -> 2×2 pool -> conv k×k (same, relu) -> 2×2 pool ->
    flatten -> dense hidden (relu) -> dropout -> dense C -> softmax.
    A 42×32 input flattens to 10·8·64 = 5120 features.

    :param height: int
        Input height (>= 8).
    :param width: int
        Input width (>= 8).
    :param classes: int
        Number of classes C (>= 2).
    :return: list[LayerSpec]
        Layer list in forward order.
    """
    if height < 8 or width < 8:
        raise InvalidParameterError("input", f"{height}×{width} is smaller than 8×8")
    if classes < 2:
        raise InvalidParameterError("classes", "at least two classes are needed")
    conv = dict(kernel=(kernel, kernel), padding=Padding.same, activation=Activation.relu)
    return [
        LayerSpec(kind=LayerKind.conv2d, filters=conv1_filters, **conv),
        LayerSpec(kind=LayerKind.maxpool2d, kernel=(2, 2)),
        LayerSpec(kind=LayerKind.conv2d, filters=conv2_filters, **conv),
        LayerSpec(kind=LayerKind.maxpool2d, kernel=(2, 2)),
        LayerSpec(kind=LayerKind.flatten),
        LayerSpec(kind=LayerKind.dense, units=hidden_units, activation=Activation.relu),
        LayerSpec(kind=LayerKind.dropout, rate=dropout_rate),
        LayerSpec(kind=LayerKind.dense, units=classes),
        LayerSpec(kind=LayerKind.softmax),
    ]


def flatten_width(layers: list[LayerSpec], height: int, width: int, depth: int = 1) -> int:
    """
    Length of the vector entering the first dense layer.
    """
    h, w, d = height, width, depth
    for spec in layers:
        if spec.kind is LayerKind.conv2d:
            if spec.padding is Padding.valid:
                h, w = h - spec.kernel[0] + 1, w - spec.kernel[1] + 1
            d = spec.filters
        elif spec.kind is LayerKind.maxpool2d:
            h, w = h // spec.kernel[0], w // spec.kernel[1]
        elif spec.kind is LayerKind.flatten:
            return h * w * d
    return h * w * d
