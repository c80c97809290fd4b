import numpy as np
import pytest

from harfusion.schemas.imu import Dataset, ImuWindow, Recording
from harfusion.services.kinematics import axis_angle_quat


def make_channels(n: int, seed: int = 0) -> np.ndarray:
    """
    N×10 records: noisy acceleration and rate, a slow rotation about x.
    """
    rng = np.random.default_rng(seed)
    channels = np.empty((n, 10))
    channels[:, :6] = rng.normal(size=(n, 6))
    channels[:, 6:] = axis_angle_quat([1.0, 0.0, 0.0], np.linspace(0.0, 1.0, n))
    return channels


def make_recording(subject: str = "S01", n: int = 112, t0: int = 0, period: int = 20, seed: int = 0) -> Recording:
    return Recording(subject=subject, t=t0 + period * np.arange(n), channels=make_channels(n, seed))


def make_window(label: int = 0, subject: str = "S01", length: int = 64, seed: int = 0, t0: int = 0) -> ImuWindow:
    return ImuWindow(
        channels=make_channels(length, seed).T,
        subject=subject,
        label=label,
        t0=t0,
        window_id=f"{subject}-{label}-{t0}",
    )


def make_dataset(subjects: int = 2, classes: int = 2, per_cell: int = 3, length: int = 64) -> Dataset:
    windows = [
        make_window(label=c, subject=f"S{s + 1:02d}", length=length, seed=100 * s + 10 * c + i, t0=1000 * i)
        for s in range(subjects)
        for c in range(classes)
        for i in range(per_cell)
    ]
    return Dataset(
        windows=windows,
        class_names=[f"C{c}" for c in range(classes)],
        subjects=[f"S{s + 1:02d}" for s in range(subjects)],
    )


@pytest.fixture
def recording() -> Recording:
    return make_recording()


@pytest.fixture
def window() -> ImuWindow:
    return make_window()


@pytest.fixture
def dataset() -> Dataset:
    return make_dataset()


@pytest.fixture
def tiny_config(tmp_path):
    """
    A config file for fast end-to-end command runs on synthetic data.
    """
    path = tmp_path / "tiny.toml"
    path.write_text(
        """
seed = 3

[synth]
subjects = 2
windows_per_class = 3

[transforms]
och_size = 16

[modalities.freq]
conv1_filters = 4
conv2_filters = 4
hidden_units = 8

[modalities.freq.train]
epochs = 1
batch_size = 16

[modalities.och]
conv1_filters = 4
conv2_filters = 4
hidden_units = 8

[modalities.och.train]
epochs = 1
batch_size = 16
""",
        encoding="utf-8",
    )
    return path
