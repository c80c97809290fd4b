from enum import Enum

from pydantic import BaseModel, ConfigDict, model_validator


class Trajectory(str, Enum):
    static = "static"
    twist = "twist"
    arc = "arc"


class ClassProfile(BaseModel):
    """
    Signal recipe of one synthetic activity.

    `tilt` is the resting tilt of the forearm (radians about x); `twist`
    trajectories rotate about the sensor's own z axis, `arc` trajectories
    sweep the tilt axis back and forth about `axis`.
    """

    model_config = ConfigDict(extra="forbid")

    name: str
    accel_freq_hz: float
    accel_amplitude: float
    impulsiveness: float = 0.0
    gyro_freq_hz: float
    gyro_amplitude: float
    trajectory: Trajectory
    trajectory_freq_hz: float = 0.0
    trajectory_amplitude: float = 0.0
    axis: tuple[float, float, float] = (1.0, 0.0, 0.0)
    tilt: float = 0.6

    def signature(self) -> tuple:
        return (
            self.accel_freq_hz,
            self.accel_amplitude,
            self.impulsiveness,
            self.gyro_freq_hz,
            self.gyro_amplitude,
            self.trajectory,
            self.trajectory_freq_hz,
            self.trajectory_amplitude,
            self.axis,
            self.tilt,
        )


DEFAULT_PROFILES = [
    ClassProfile(
        name="GT", accel_freq_hz=0.8, accel_amplitude=1.2, impulsiveness=0.2,
        gyro_freq_hz=0.8, gyro_amplitude=0.8, trajectory=Trajectory.arc,
        trajectory_freq_hz=0.8, trajectory_amplitude=0.9, axis=(1.0, 0.0, 0.0), tilt=0.9,
    ),
    ClassProfile(
        name="HN", accel_freq_hz=3.0, accel_amplitude=2.5, impulsiveness=0.8,
        gyro_freq_hz=3.0, gyro_amplitude=2.0, trajectory=Trajectory.arc,
        trajectory_freq_hz=3.0, trajectory_amplitude=0.35, axis=(0.0, 1.0, 0.0), tilt=0.6,
    ),
    ClassProfile(
        name="UP", accel_freq_hz=12.0, accel_amplitude=0.6, impulsiveness=0.0,
        gyro_freq_hz=12.0, gyro_amplitude=0.05, trajectory=Trajectory.static, tilt=0.6,
    ),
    ClassProfile(
        name="RA", accel_freq_hz=0.2, accel_amplitude=0.02, impulsiveness=0.0,
        gyro_freq_hz=0.2, gyro_amplitude=0.02, trajectory=Trajectory.static, tilt=0.6,
    ),
    ClassProfile(
        name="TS", accel_freq_hz=1.0, accel_amplitude=0.3, impulsiveness=0.0,
        gyro_freq_hz=1.0, gyro_amplitude=2.0, trajectory=Trajectory.twist,
        trajectory_freq_hz=1.0, trajectory_amplitude=1.2, tilt=0.6,
    ),
    ClassProfile(
        name="UW", accel_freq_hz=0.5, accel_amplitude=0.8, impulsiveness=0.1,
        gyro_freq_hz=0.5, gyro_amplitude=1.0, trajectory=Trajectory.arc,
        trajectory_freq_hz=0.5, trajectory_amplitude=0.7, axis=(0.0, 0.0, 1.0), tilt=0.9,
    ),
]


class SynthConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    subjects: int = 8
    windows_per_class: int = 100
    classes: list[ClassProfile] = DEFAULT_PROFILES
    noise: float = 0.05
    orientation_offset: float = 0.6
    amplitude_jitter: float = 0.15
    frequency_jitter: float = 0.08
    rate_hz: float = 50.0
    seed: int | None = None

    @model_validator(mode="after")
    def _valid(self):
        if self.subjects < 1 or self.windows_per_class < 1:
            raise ValueError("subject and window counts must be positive")
        if len({p.name for p in self.classes}) != len(self.classes):
            raise ValueError("class names must be unique")
        if len({p.signature() for p in self.classes}) != len(self.classes):
            raise ValueError("class profiles must be distinct")
        if self.noise < 0 or self.orientation_offset < 0:
            raise ValueError("noise and orientation_offset must be >= 0")
        return self
