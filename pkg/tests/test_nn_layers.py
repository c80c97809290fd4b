import numpy as np
import pytest
from numpy import testing

from harfusion.core.exceptions import ArchitectureMismatchError, InvalidParameterError, ShapeMismatchError
from harfusion.nn.architectures import build_m1_architecture, flatten_width
from harfusion.nn.layers import Dropout, softmax
from harfusion.nn.losses import cross_entropy, cross_entropy_grad, loss
from harfusion.nn.network import Network
from harfusion.nn.optim import SGD
from harfusion.schemas.nn import Activation, LayerKind, LayerSpec, Padding


EPS = 1e-6


def relative_error(analytic, numeric):
    analytic, numeric = np.ravel(analytic), np.ravel(numeric)
    scale = max(np.linalg.norm(analytic) + np.linalg.norm(numeric), 1e-12)
    return float(np.linalg.norm(analytic - numeric) / scale)


def numeric_grad(f, array):
    grad = np.zeros_like(array)
    for idx in np.ndindex(*array.shape):
        saved = array[idx]
        array[idx] = saved + EPS
        plus = f()
        array[idx] = saved - EPS
        minus = f()
        array[idx] = saved
        grad[idx] = (plus - minus) / (2 * EPS)
    return grad


def check_gradients(spec, input_shape, seed):
    rng = np.random.default_rng(seed)
    network = Network([spec], input_shape, seed=seed)
    for p in network.params:
        p[...] = rng.normal(size=p.shape)
    x = rng.normal(size=(2,) + tuple(input_shape))
    upstream = rng.normal(size=(2,) + network.output_shape)

    def objective():
        return float(np.sum(network.forward(x) * upstream))

    objective()
    dx = network.backward(upstream)
    analytic = [g.copy() for g in network.grads]
    assert relative_error(dx, numeric_grad(objective, x)) < 1e-4
    for param, grad in zip(network.params, analytic):
        assert relative_error(grad, numeric_grad(objective, param)) < 1e-4


@pytest.mark.parametrize("seed", range(5))
@pytest.mark.parametrize("padding", [Padding.valid, Padding.same])
def test_conv2d_gradients(seed, padding):
    spec = LayerSpec(kind=LayerKind.conv2d, kernel=(3, 2), filters=3, padding=padding)
    check_gradients(spec, (5, 4, 2), seed)


@pytest.mark.parametrize("seed", range(5))
def test_conv3d_gradients(seed):
    spec = LayerSpec(kind=LayerKind.conv3d, kernel=(2, 2, 2), filters=2, padding=Padding.same)
    check_gradients(spec, (3, 4, 3, 2), seed)


@pytest.mark.parametrize("seed", range(5))
def test_maxpool_gradients(seed):
    check_gradients(LayerSpec(kind=LayerKind.maxpool2d, kernel=(2, 2)), (5, 4, 2), seed)


@pytest.mark.parametrize("seed", range(5))
def test_dense_gradients(seed):
    check_gradients(LayerSpec(kind=LayerKind.dense, units=4), (6,), seed)


@pytest.mark.parametrize("seed", range(5))
def test_softmax_layer_gradients(seed):
    check_gradients(LayerSpec(kind=LayerKind.softmax), (5,), seed)


@pytest.mark.parametrize("seed", range(5))
def test_softmax_cross_entropy_gradient(seed):
    rng = np.random.default_rng(seed)
    scores = rng.normal(size=(3, 4))
    labels = rng.integers(0, 4, size=3)
    numeric = numeric_grad(lambda: cross_entropy(softmax(scores), labels), scores)
    assert relative_error(cross_entropy_grad(softmax(scores), labels), numeric) < 1e-4


def test_full_network_gradients():
    specs = build_m1_architecture(8, 8, 3, conv1_filters=2, conv2_filters=2, hidden_units=4, dropout_rate=0.0)
    network = Network(specs, (8, 8, 1), seed=1)
    rng = np.random.default_rng(1)
    x = rng.normal(size=(2, 8, 8, 1))
    labels = np.array([0, 2])

    def objective():
        return cross_entropy(network.forward(x), labels)

    network.backward(cross_entropy_grad(network.forward(x), labels), from_logits=True)
    analytic = [g.copy() for g in network.grads]
    for param, grad in zip(network.params[-4:], analytic[-4:]):
        assert relative_error(grad, numeric_grad(objective, param)) < 1e-4


def set_conv(network, weights, bias):
    network.params[0][...] = weights
    network.params[1][...] = bias


def test_conv2d_hand_computed():
    spec = LayerSpec(kind=LayerKind.conv2d, kernel=(2, 2), filters=1)
    network = Network([spec], (3, 3, 1))
    set_conv(network, np.ones((2, 2, 1, 1)), 0.0)
    x = np.arange(1.0, 10.0).reshape(1, 3, 3, 1)
    testing.assert_array_equal(network.forward(x)[0, :, :, 0], [[12.0, 16.0], [24.0, 28.0]])


def test_conv2d_identity_kernel_and_relu():
    network = Network([LayerSpec(kind=LayerKind.conv2d, kernel=(1, 1), filters=1)], (4, 4, 1))
    set_conv(network, np.ones((1, 1, 1, 1)), 0.0)
    x = np.random.default_rng(0).normal(size=(2, 4, 4, 1))
    testing.assert_array_equal(network.forward(x), x)

    relu = Network(
        [LayerSpec(kind=LayerKind.conv2d, kernel=(1, 1), filters=1, activation=Activation.relu)], (4, 4, 1)
    )
    set_conv(relu, np.ones((1, 1, 1, 1)), 0.0)
    testing.assert_array_equal(relu.forward(-np.abs(x) - 1.0), 0.0)


def test_conv3d_all_ones():
    network = Network([LayerSpec(kind=LayerKind.conv3d, kernel=(2, 2, 2), filters=1)], (2, 2, 2, 1))
    set_conv(network, np.ones((2, 2, 2, 1, 1)), 0.0)
    out = network.forward(np.ones((1, 2, 2, 2, 1)))
    assert out.shape == (1, 1, 1, 1, 1)
    assert out.item() == 8.0


def test_maxpool_values_and_floor():
    pool = LayerSpec(kind=LayerKind.maxpool2d, kernel=(2, 2))
    network = Network([pool], (2, 2, 1))
    assert network.forward(np.array([[[[1.0], [2.0]], [[3.0], [4.0]]]])).item() == 4.0
    assert Network([pool], (21, 16, 64)).output_shape == (10, 8, 64)
    flat = Network([pool], (4, 6, 1)).forward(np.full((1, 4, 6, 1), 0.5))
    testing.assert_array_equal(flat, 0.5)


def test_dense_hand_computed():
    network = Network([LayerSpec(kind=LayerKind.dense, units=2)], (2,))
    network.params[0][...] = [[1.0, 1.0], [1.0, -1.0]]
    network.params[1][...] = [0.0, 1.0]
    testing.assert_array_equal(network.forward(np.array([[2.0, 3.0]])), [[5.0, 0.0]])


def test_shape_mismatch_is_reported():
    network = Network([LayerSpec(kind=LayerKind.dense, units=2)], (3,))
    with pytest.raises(ShapeMismatchError):
        network.forward(np.zeros((1, 4)))


def test_softmax_properties():
    testing.assert_allclose(softmax(np.zeros(6)), np.full(6, 1 / 6))
    big = softmax(np.array([1000.0, 0.0]))
    assert np.all(np.isfinite(big)) and big[0] == pytest.approx(1.0)
    s = np.random.default_rng(0).normal(size=(4, 5))
    testing.assert_allclose(softmax(s), softmax(s + 123.0), atol=1e-12)
    testing.assert_allclose(softmax(s).sum(axis=-1), 1.0, atol=1e-12)


def test_loss_values():
    onehot = np.eye(3)
    assert loss(onehot, [0, 1, 2]) == 0.0
    assert loss(np.full((1, 6), 1 / 6), [0]) == pytest.approx(np.log(6))
    probs = np.array([[0.7, 0.3]])
    assert loss(probs, [0], [np.zeros((3, 3))], l2_lambda=0.1) == cross_entropy(probs, [0])
    assert loss(probs, [0], [np.ones((2, 2))], l2_lambda=0.1) == pytest.approx(cross_entropy(probs, [0]) + 0.4)


def test_dropout_is_inverted_and_train_only():
    layer = Dropout(LayerSpec(kind=LayerKind.dropout, rate=0.5), np.random.default_rng(0))
    layer.build((1000,), np.random.default_rng(0))
    x = np.ones((4, 1000))
    testing.assert_array_equal(layer.forward(x), x)
    out = layer.forward(x, training=True)
    assert set(np.unique(out)) <= {0.0, 2.0}
    assert abs(out.mean() - 1.0) < 0.1


def test_sgd_first_step_moves_by_lr_times_grad():
    w = np.array([1.0])
    SGD([w], lr=0.1, momentum=0.0).step([np.array([2.0])])
    testing.assert_allclose(w, [0.8])

    v = np.array([1.0])
    optimizer = SGD([v], lr=0.1, momentum=0.9)
    optimizer.step([np.array([1.0])])
    optimizer.step([np.array([1.0])])
    testing.assert_allclose(v, [1.0 - 0.1 - 0.19])


@pytest.mark.parametrize("height, width, expected", [(42, 32, 5120), (50, 32, 6144)])
def test_architecture_flatten_width(height, width, expected):
    specs = build_m1_architecture(height, width, 6)
    assert flatten_width(specs, height, width) == expected
    network = Network(specs, (height, width, 1))
    assert network.layers[5].input_shape == (expected,)
    assert network.output_shape == (6,)


def test_architecture_validates_input():
    with pytest.raises(InvalidParameterError):
        build_m1_architecture(7, 32, 6)
    with pytest.raises(InvalidParameterError):
        build_m1_architecture(42, 32, 1)


def test_params_roundtrip_and_architecture_check():
    specs = build_m1_architecture(8, 8, 2, conv1_filters=2, conv2_filters=2, hidden_units=4)
    network = Network(specs, (8, 8, 1), seed=4)
    clone = Network.from_params(network.get_params())
    x = np.random.default_rng(0).uniform(size=(3, 8, 8, 1))
    testing.assert_array_equal(network.predict_proba(x), clone.predict_proba(x))

    other = Network(build_m1_architecture(8, 8, 3, conv1_filters=2, conv2_filters=2, hidden_units=4), (8, 8, 1))
    with pytest.raises(ArchitectureMismatchError):
        other.set_params(network.get_params())
