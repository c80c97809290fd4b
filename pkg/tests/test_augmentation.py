import math

import numpy as np
from numpy import testing

from harfusion.schemas.augmentation import AugmentationConfig, AugmentMode, JaConfig, KaConfig
from harfusion.schemas.features import FeatureImage, FeatureKind
from harfusion.services.augmentation_service import AugmentationService, ja_augment, ka_augment, with_seeds
from harfusion.services.kinematics import direction_vectors, mirror_vec
from harfusion.services.transform_service import TransformService, build_expansion_plan

from conftest import make_window


def test_default_ka_yields_six_labelled_windows(window):
    outputs = ka_augment(window, KaConfig(seed=1))
    assert len(outputs) == 6
    for out in outputs:
        assert out.label == window.label and out.subject == window.subject
        assert out.channels.shape == window.channels.shape
        testing.assert_allclose(np.linalg.norm(out.channels[6:], axis=0), 1.0, atol=1e-6)
        assert out.origin == window.window_id


def test_identity_rotation_keeps_orientations(window):
    cfg = KaConfig(rotation_angles=[0.0], mirror_planes=[], noise_frac=0.0, seed=0)
    (out,) = ka_augment(window, cfg)
    testing.assert_allclose(out.channels[6:], window.channels[6:], atol=1e-12)
    testing.assert_array_equal(out.channels[:6], window.channels[:6])


def test_rotation_and_inverse_rotation_cancel(window):
    forward = KaConfig(rotation_angles=[math.pi / 4], mirror_planes=[], noise_frac=0.0, seed=0)
    backward = KaConfig(rotation_angles=[-math.pi / 4], mirror_planes=[], noise_frac=0.0, seed=0)
    (rotated,) = ka_augment(window, forward)
    (restored,) = ka_augment(rotated, backward)
    testing.assert_allclose(restored.channels[6:], window.channels[6:], atol=1e-9)


def test_mirror_reencodes_mirrored_direction(window):
    cfg = KaConfig(rotation_angles=[], mirror_planes=[(1.0, 0.0, 0.0)], noise_frac=0.0, seed=0)
    (out,) = ka_augment(window, cfg)
    expected = mirror_vec(direction_vectors(window.channels[6:].T), np.array([1.0, 0.0, 0.0]))
    testing.assert_allclose(direction_vectors(out.channels[6:].T), expected, atol=1e-9)


def test_ka_noise_is_bounded(window):
    outputs = ka_augment(window, KaConfig(noise_frac=0.05, seed=3))
    original = window.channels[:6]
    for out in outputs:
        assert np.all(np.abs(out.channels[:6] - original) <= 0.05 * np.abs(original) + 1e-12)


def test_ka_is_reproducible(window):
    a = ka_augment(window, KaConfig(seed=9))
    b = ka_augment(window, KaConfig(seed=9))
    for x, y in zip(a, b):
        testing.assert_array_equal(x.channels, y.channels)


def image(pixels, kind=FeatureKind.och):
    return FeatureImage(pixels=pixels, kind=kind, provenance="S01-a-0", label=0, subject="S01")


def test_identity_jitter_returns_input():
    pixels = np.random.default_rng(0).uniform(size=(16, 16, 3))
    cfg = JaConfig(translate_frac=0.0, scale_range=(1.0, 1.0), rotate_deg_range=(0.0, 0.0), seed=0)
    outputs = ja_augment(image(pixels), cfg)
    assert len(outputs) == 6
    for out in outputs:
        testing.assert_allclose(out.pixels, pixels, atol=1e-6)


def test_jitter_keeps_shape_and_range():
    pixels = np.random.default_rng(1).uniform(size=(20, 12, 1))
    outputs = ja_augment(image(pixels, FeatureKind.freq), JaConfig(seed=2))
    for out in outputs:
        assert out.shape == (20, 12, 1)
        assert out.pixels.min() >= 0.0 and out.pixels.max() <= 1.0


def test_jitter_of_zero_image_is_zero():
    outputs = ja_augment(image(np.zeros((16, 16, 3))), JaConfig(seed=4))
    for out in outputs:
        testing.assert_array_equal(out.pixels, 0.0)


def test_augment_dataset_multipliers():
    windows = [make_window(label=i % 2, seed=i, t0=1000 * i) for i in range(4)]
    service = TransformService(build_expansion_plan(), och_size=16)

    def transform(ws):
        return service.transform_all(ws, FeatureKind.och)

    expected = {AugmentMode.none: 4, AugmentMode.ka: 28, AugmentMode.ja: 28, AugmentMode.ja_ka: 52}
    for mode, count in expected.items():
        cfg = with_seeds(AugmentationConfig(mode=mode), seed=11)
        images = AugmentationService.augment_dataset(windows, cfg, transform)
        assert len(images) == count
        assert [img.provenance for img in images[:4]] == [w.window_id for w in windows]


def test_with_seeds_fills_only_missing():
    cfg = with_seeds(AugmentationConfig(ka=KaConfig(seed=5)), seed=100)
    assert cfg.ka.seed == 5
    assert cfg.ja.seed == 101
