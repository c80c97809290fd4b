import logging

import numpy as np

from harfusion.core.config import PipelineConfig
from harfusion.core.exceptions import NonFiniteLossError, ShapeMismatchError
from harfusion.nn.architectures import build_m1_architecture
from harfusion.nn.losses import cross_entropy_grad, loss
from harfusion.nn.network import Network
from harfusion.nn.optim import SGD
from harfusion.schemas.features import FeatureImage, FeatureKind
from harfusion.schemas.imu import ImuWindow
from harfusion.schemas.nn import LayerSpec, TrainConfig, TrainResult
from harfusion.services.augmentation_service import AugmentationService, with_seeds
from harfusion.services.transform_service import TransformService, plan_from_sequence


logger = logging.getLogger(__name__)


def images_to_array(images: list[FeatureImage]) -> np.ndarray:
    """
    Stack feature images into an N×H×W×D batch.
    """
    if not images:
        raise ShapeMismatchError("image batch", 0, "at least one image")
    shapes = {img.shape for img in images}
    if len(shapes) != 1:
        raise ShapeMismatchError("image batch", sorted(shapes), "one shared shape")
    return np.stack([img.pixels for img in images])


def image_labels(images: list[FeatureImage]) -> np.ndarray:
    return np.array([img.label for img in images], dtype=np.int64)


def backward_and_step(
    network: Network,
    optimizer: SGD,
    x: np.ndarray,
    labels: np.ndarray,
    cfg: TrainConfig,
    epoch: int = 0,
    step: int = 0,
) -> float:
    """
    One training step: forward with dropout, loss, reverse pass, momentum update.

    The softmax and cross-entropy gradients are fused (P - onehot), the L2
    gradient 2λw is added to weight tensors only.

    :param network: Network
        Network ending in a softmax layer; updated in place.
    :param optimizer: SGD
        Optimizer bound to `network.params`.
    :param x: np.ndarray
        Input batch.
    :param labels: np.ndarray
        Class index per sample.
    :param cfg: TrainConfig
        Reduction and regularization settings.
    :raises NonFiniteLossError:
        If the batch loss is NaN or infinite; parameters are left untouched.
    :return: float
        Batch loss before the update.
    """
    probs = network.forward(x, training=True)
    value = loss(probs, labels, network.weights(), cfg.l2_lambda, cfg.reduction)
    if not np.isfinite(value):
        raise NonFiniteLossError(epoch, step, value)

    dscores = cross_entropy_grad(probs, labels, cfg.reduction)
    network.backward(dscores, from_logits=True)
    grads = [
        g + 2.0 * cfg.l2_lambda * p if is_weight else g
        for g, p, is_weight in zip(network.grads, network.params, network.is_weight())
    ]
    optimizer.step(grads)
    return value


class TrainingService:
    """
    Seeded mini-batch training of one modality network.
    """

    @staticmethod
    def train(
        x: np.ndarray,
        labels: np.ndarray,
        layers: list[LayerSpec],
        cfg: TrainConfig,
        seed: int = 0,
    ) -> tuple[Network, TrainResult]:
        """
        Train a freshly initialized network.

        Batches follow a per-epoch permutation from a generator seeded with
        (seed, 2); with the same seed two runs produce bit-identical
        parameters and loss curves.

        :param x: np.ndarray
            N×H×W×D training images.
        :param labels: np.ndarray
            N class indices.
        :param layers: list[LayerSpec]
            Architecture ending in softmax.
        :param cfg: TrainConfig
            Optimizer and schedule; `cfg.seed` overrides `seed` when set.
        :param seed: int, optional
            Seed for initialization, dropout and shuffling.
        :raises NonFiniteLossError:
            If a batch loss diverges.
        :return: tuple[Network, TrainResult]
            The trained network and its parameters with the loss curve.
        """
        seed = cfg.seed if cfg.seed is not None else seed
        x = np.asarray(x, dtype=np.float64)
        labels = np.asarray(labels, dtype=np.int64)
        if len(x) != len(labels):
            raise ShapeMismatchError("training set", len(labels), f"{len(x)} labels")

        network = Network(layers, x.shape[1:], seed=seed)
        optimizer = SGD(network.params, lr=cfg.lr, momentum=cfg.momentum)
        order_rng = np.random.default_rng([seed, 2])
        curve: list[float] = []

        for epoch in range(cfg.epochs):
            order = order_rng.permutation(len(x))
            batch_losses = []
            for step, start in enumerate(range(0, len(x), cfg.batch_size)):
                idx = order[start : start + cfg.batch_size]
                batch_losses.append(backward_and_step(network, optimizer, x[idx], labels[idx], cfg, epoch, step))
            curve.append(float(np.mean(batch_losses)))
            logger.debug(f"epoch {epoch + 1}/{cfg.epochs}: loss {curve[-1]:.6f}")

        if curve:
            logger.info(f"Trained on {len(x)} samples for {cfg.epochs} epochs, final loss {curve[-1]:.6f}.")
        result = TrainResult(params=network.get_params(), config=cfg, loss_curve=curve, n_samples=len(x))
        return network, result

    @staticmethod
    def train_images(
        images: list[FeatureImage],
        classes: int,
        cfg: TrainConfig,
        seed: int = 0,
        conv1_filters: int = 32,
        conv2_filters: int = 64,
        kernel: int = 5,
        hidden_units: int = 128,
    ) -> tuple[Network, TrainResult]:
        """
        Build the two-stage convolutional architecture for the image shape and train it.
        """
        x = images_to_array(images)
        height, width = x.shape[1:3]
        layers = build_m1_architecture(
            height,
            width,
            classes,
            conv1_filters=conv1_filters,
            conv2_filters=conv2_filters,
            kernel=kernel,
            hidden_units=hidden_units,
            dropout_rate=cfg.dropout_rate,
        )
        return TrainingService.train(x, image_labels(images), layers, cfg, seed)

    @staticmethod
    def predict(network: Network, images: list[FeatureImage], batch_size: int = 64) -> np.ndarray:
        """
        N×C class probabilities in input order.
        """
        if not images:
            return np.zeros((0,) + network.output_shape)
        return network.predict_proba(images_to_array(images), batch_size)

    @staticmethod
    def modality_images(
        windows: list[ImuWindow], modality: str, cfg: PipelineConfig, augment: bool = False
    ) -> list[FeatureImage]:
        """
        Feature images of one modality, optionally enlarged by the configured augmentation.
        """
        kind = FeatureKind(modality)
        plan = plan_from_sequence(cfg.expansion.row_sequence, cfg.expansion.circular, cfg.expansion.seed)
        transformer = TransformService(plan, cfg.transforms.och_size)
        if not augment:
            return transformer.transform_all(windows, kind)
        augmentation = with_seeds(cfg.augmentation, cfg.stage_seed("augment"))
        return AugmentationService.augment_dataset(windows, augmentation, lambda ws: transformer.transform_all(ws, kind))

    @staticmethod
    def train_modality(
        windows: list[ImuWindow], modality: str, classes: int, cfg: PipelineConfig, seed: int
    ) -> tuple[Network, TrainResult]:
        """
        Transform, augment and train one modality's network on original windows.

        :param windows: list[ImuWindow]
            Un-augmented training windows.
        :param modality: str
            Feature kind name ("freq" or "och").
        :param classes: int
            Class count C.
        :param cfg: PipelineConfig
            Pipeline configuration providing transform, augmentation and training settings.
        :param seed: int
            Training seed.
        :return: tuple[Network, TrainResult]
            The trained network and its result.
        """
        images = TrainingService.modality_images(windows, modality, cfg, augment=True)
        modality_cfg = cfg.modalities[modality]
        logger.info(f"Training {modality} on {len(images)} images from {len(windows)} windows.")
        return TrainingService.train_images(
            images,
            classes,
            modality_cfg.train,
            seed,
            conv1_filters=modality_cfg.conv1_filters,
            conv2_filters=modality_cfg.conv2_filters,
            kernel=modality_cfg.kernel,
            hidden_units=modality_cfg.hidden_units,
        )
