import hashlib
import logging
import math
from typing import Callable

import numpy as np
from scipy import ndimage

from harfusion.schemas.augmentation import AugmentationConfig, AugmentMode, JaConfig, KaConfig
from harfusion.schemas.features import FeatureImage
from harfusion.schemas.imu import ACCEL_GYRO, QUAT, ImuWindow
from harfusion.schemas.kinematics import Z_AXIS
from harfusion.services.kinematics import (
    axis_angle_quat,
    direction_vectors,
    mirror_vec,
    normalize_quat,
    qmul,
    transition_quat,
)


logger = logging.getLogger(__name__)

REFERENCE = np.array(Z_AXIS)


def sample_rng(seed: int | None, key: str) -> np.random.Generator:
    """
    Generator for one original sample, derived from the run seed and the sample id.

    Deriving from the id keeps every original's augmentations identical no
    matter which subset or fold it is processed in.
    """
    digest = hashlib.sha256(key.encode("utf-8")).digest()
    return np.random.default_rng([seed or 0, int.from_bytes(digest[:8], "little")])


def _unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    return v / np.linalg.norm(v)


def _with_noise(window: ImuWindow, quats: np.ndarray, rng: np.random.Generator, noise_frac: float) -> np.ndarray:
    channels = window.channels.copy()
    motion = channels[ACCEL_GYRO]
    channels[ACCEL_GYRO] = motion + motion * rng.uniform(-noise_frac, noise_frac, size=motion.shape)
    channels[QUAT] = quats.T
    return channels


def ka_augment(window: ImuWindow, cfg: KaConfig) -> list[ImuWindow]:
    """
    Kinematics augmentation of one window.

    One output per rotation angle (every orientation left-multiplied by the
    rotation about `cfg.rotation_axis`) and one per mirror plane (direction
    vectors mirrored, then re-encoded as the transition from ẑ). Accel and gyro
    channels get independent uniform noise within ±noise_frac of each sample.

    :param window: ImuWindow
        Original window.
    :param cfg: KaConfig
        Angles, mirror planes, noise fraction and seed.
    :raises DegenerateQuaternionError:
        If an input orientation is degenerate.
    :return: list[ImuWindow]
        len(angles) + len(planes) windows with the original's label and subject.
    """
    quats = normalize_quat(window.channels[QUAT].T, what=f"orientation of {window.window_id}")
    rng = sample_rng(cfg.seed, window.window_id)
    variants: list[tuple[str, np.ndarray]] = []

    for theta in cfg.rotation_angles:
        rotation = axis_angle_quat(cfg.rotation_axis, theta)
        variants.append((f"rot{theta:+.6f}", qmul(rotation, quats)))

    if cfg.mirror_planes:
        directions = direction_vectors(quats)
        for normal in cfg.mirror_planes:
            n = _unit(normal)
            mirrored = mirror_vec(directions, n)
            mirrored /= np.linalg.norm(mirrored, axis=-1, keepdims=True)
            tag = "mirror(" + ",".join(f"{c:g}" for c in n) + ")"
            variants.append((tag, transition_quat(REFERENCE, mirrored)))

    outputs = []
    for j, (tag, new_quats) in enumerate(variants):
        outputs.append(
            ImuWindow(
                channels=_with_noise(window, new_quats, rng, cfg.noise_frac),
                subject=window.subject,
                label=window.label,
                t0=window.t0,
                window_id=f"{window.window_id}~ka{j}",
                provenance=f"{window.origin}~ka:{tag}",
            )
        )
    return outputs


def _affine(image: np.ndarray, scale: float, angle_deg: float, shift: tuple[float, float]) -> np.ndarray:
    """
    Rotate and scale about the image centre, then translate; bilinear, zero fill.
    """
    height, width = image.shape[:2]
    centre = np.array([(height - 1) / 2.0, (width - 1) / 2.0])
    a = math.radians(angle_deg)
    rotation = np.array([[math.cos(a), -math.sin(a)], [math.sin(a), math.cos(a)]])
    inverse = rotation.T / scale
    offset = centre - inverse @ (centre + np.asarray(shift))
    planes = [
        ndimage.affine_transform(image[:, :, d], inverse, offset=offset, order=1, mode="constant", cval=0.0)
        for d in range(image.shape[2])
    ]
    return np.clip(np.stack(planes, axis=-1), 0.0, 1.0)


def ja_augment(image: FeatureImage, cfg: JaConfig) -> list[FeatureImage]:
    """
    Jittering augmentation: `per_original` random affine copies of an image.

    Translation is uniform within ±translate_frac of the height/width, scale
    and rotation uniform within their ranges.

    :param image: FeatureImage
        Original feature image.
    :param cfg: JaConfig
        Sampling bounds, count and seed.
    :return: list[FeatureImage]
        Images of the input's shape with values clamped to [0, 1].
    """
    height, width = image.pixels.shape[:2]
    rng = sample_rng(cfg.seed, f"ja:{image.kind.value}:{image.provenance}")
    outputs = []
    for j in range(cfg.per_original):
        dy = rng.uniform(-cfg.translate_frac, cfg.translate_frac) * height
        dx = rng.uniform(-cfg.translate_frac, cfg.translate_frac) * width
        scale = rng.uniform(*cfg.scale_range)
        angle = rng.uniform(*cfg.rotate_deg_range)
        pixels = _affine(image.pixels, scale, angle, (dy, dx))
        tag = f"ja:t({dy:+.3f},{dx:+.3f})s{scale:.4f}r{angle:+.3f}"
        outputs.append(
            image.model_copy(
                update={
                    "pixels": pixels,
                    "provenance": f"{image.provenance}~ja{j}",
                    "origin": f"{image.origin or image.provenance}~{tag}",
                }
            )
        )
    return outputs


class AugmentationService:
    """
    Enlarges training sets: KA before the feature transforms, JA after them.
    """

    @staticmethod
    def augment_windows(windows: list[ImuWindow], mode: AugmentMode, ka: KaConfig) -> list[ImuWindow]:
        """
        Originals followed by their KA outputs when the mode uses KA.
        """
        if not mode.uses_ka:
            return list(windows)
        augmented = [out for w in windows for out in ka_augment(w, ka)]
        logger.info(f"KA: {len(windows)} originals -> {len(windows) + len(augmented)} windows.")
        return list(windows) + augmented

    @staticmethod
    def augment_images(images: list[FeatureImage], mode: AugmentMode, ja: JaConfig) -> list[FeatureImage]:
        """
        Originals followed by their JA outputs when the mode uses JA.
        """
        if not mode.uses_ja:
            return list(images)
        augmented = [out for img in images for out in ja_augment(img, ja)]
        logger.info(f"JA: {len(images)} originals -> {len(images) + len(augmented)} images.")
        return list(images) + augmented

    @staticmethod
    def augment_dataset(
        windows: list[ImuWindow],
        cfg: AugmentationConfig,
        transform: Callable[[list[ImuWindow]], list[FeatureImage]],
    ) -> list[FeatureImage]:
        """
        Build the training image set for one modality.

        Originals are always kept; KA windows are transformed like originals;
        JA jitters the originals' images. JA+KA concatenates both pools, so the
        set holds originals × (1 + 6 + 6) with default configs.

        :param windows: list[ImuWindow]
            Original windows.
        :param cfg: AugmentationConfig
            Mode plus KA and JA settings.
        :param transform: Callable
            Window-to-image transform of the modality.
        :return: list[FeatureImage]
            Originals, then KA images, then JA images.
        """
        originals = transform(list(windows))
        images = list(originals)
        if cfg.mode.uses_ka:
            ka_windows = AugmentationService.augment_windows(windows, AugmentMode.ka, cfg.ka)[len(windows) :]
            images.extend(transform(ka_windows))
        if cfg.mode.uses_ja:
            images.extend(AugmentationService.augment_images(originals, AugmentMode.ja, cfg.ja)[len(originals) :])
        return images


def with_seeds(cfg: AugmentationConfig, seed: int) -> AugmentationConfig:
    """
    Fill unset KA/JA seeds from a stage seed.
    """
    ka = cfg.ka if cfg.ka.seed is not None else cfg.ka.model_copy(update={"seed": seed})
    ja = cfg.ja if cfg.ja.seed is not None else cfg.ja.model_copy(update={"seed": seed + 1})
    return cfg.model_copy(update={"ka": ka, "ja": ja})
