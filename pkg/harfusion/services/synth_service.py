import logging
import math
from pathlib import Path

import numpy as np

from harfusion.repositories.recording_repo import RecordingRepository
from harfusion.schemas.imu import Annotation, Recording
from harfusion.schemas.kinematics import X_AXIS, Z_AXIS
from harfusion.schemas.synth import ClassProfile, SynthConfig, Trajectory
from harfusion.services.kinematics import axis_angle_quat, qconj, qmul, rotate_vec


logger = logging.getLogger(__name__)

# Per-axis weights and phase shifts of the accel/gyro patterns.
AXIS_WEIGHTS = np.array([1.0, 0.6, 0.3])
AXIS_PHASES = np.array([0.0, 2.0 * math.pi / 3.0, 4.0 * math.pi / 3.0])
GAP_MS = 1000


def subject_name(index: int) -> str:
    return f"S{index + 1:02d}"


def recording_length(windows: int, window: int = 64, stride: int = 16) -> int:
    """
    Samples needed for exactly `windows` sliding windows.
    """
    return window + stride * (windows - 1)


def _waveform(phase: np.ndarray, impulsiveness: float) -> np.ndarray:
    s = np.sin(phase)
    return (1.0 - impulsiveness) * s + impulsiveness * 2.0 * s**7


def _orientation(
    profile: ClassProfile, t: np.ndarray, yaw: float, amplitude: float, freq: float, phase: float
) -> np.ndarray:
    tilt = axis_angle_quat(X_AXIS, profile.tilt)
    heading = axis_angle_quat(Z_AXIS, yaw)
    angle = amplitude * np.sin(2.0 * math.pi * freq * t + phase)
    if profile.trajectory is Trajectory.twist:
        # rotation about the sensor's own z axis leaves the pointing direction fixed
        q = qmul(qmul(heading, tilt), axis_angle_quat(Z_AXIS, angle))
    elif profile.trajectory is Trajectory.arc:
        q = qmul(qmul(heading, axis_angle_quat(profile.axis, angle)), tilt)
    else:
        q = np.broadcast_to(qmul(heading, tilt), (len(t), 4))
    q = np.array(q, dtype=np.float64)
    return q / np.linalg.norm(q, axis=-1, keepdims=True)


def synth_recording(
    profile: ClassProfile,
    subject: str,
    yaw: float,
    n_samples: int,
    t_start: int,
    cfg: SynthConfig,
    rng: np.random.Generator,
) -> Recording:
    """
    One subject's recording of one activity.

    Acceleration is gravity expressed in the sensor frame plus the profile's
    periodic (optionally impulsive) pattern; gyro follows the profile's
    pattern, plus the twist rate for twisting activities. Amplitudes and
    frequencies are jittered per recording and Gaussian noise is added to
    accel and gyro; orientations are exact unit quaternions.
    """
    period_ms = 1000.0 / cfg.rate_hz
    t_ms = t_start + np.rint(np.arange(n_samples) * period_ms).astype(np.int64)
    t = np.arange(n_samples) / cfg.rate_hz

    def jitter(value: float, spread: float) -> float:
        return value * (1.0 + rng.uniform(-spread, spread))

    accel_amp = jitter(profile.accel_amplitude, cfg.amplitude_jitter)
    accel_freq = jitter(profile.accel_freq_hz, cfg.frequency_jitter)
    gyro_amp = jitter(profile.gyro_amplitude, cfg.amplitude_jitter)
    gyro_freq = jitter(profile.gyro_freq_hz, cfg.frequency_jitter)
    traj_amp = jitter(profile.trajectory_amplitude, cfg.amplitude_jitter)
    traj_freq = jitter(profile.trajectory_freq_hz, cfg.frequency_jitter)
    accel_phase, gyro_phase, traj_phase = rng.uniform(0.0, 2.0 * math.pi, size=3)

    quats = _orientation(profile, t, yaw, traj_amp, traj_freq, traj_phase)
    gravity = rotate_vec(qconj(quats), np.broadcast_to(Z_AXIS, (n_samples, 3)))

    accel_arg = 2.0 * math.pi * accel_freq * t[:, None] + accel_phase + AXIS_PHASES
    accel = gravity + accel_amp * AXIS_WEIGHTS * _waveform(accel_arg, profile.impulsiveness)
    gyro_arg = 2.0 * math.pi * gyro_freq * t[:, None] + gyro_phase + AXIS_PHASES
    gyro = gyro_amp * AXIS_WEIGHTS * _waveform(gyro_arg, profile.impulsiveness)
    if profile.trajectory is not Trajectory.static:
        rate = traj_amp * 2.0 * math.pi * traj_freq * np.cos(2.0 * math.pi * traj_freq * t + traj_phase)
        axis = np.asarray(Z_AXIS if profile.trajectory is Trajectory.twist else profile.axis)
        gyro = gyro + rate[:, None] * axis

    accel = accel + rng.normal(0.0, cfg.noise, size=accel.shape)
    gyro = gyro + rng.normal(0.0, cfg.noise, size=gyro.shape)
    return Recording(
        subject=subject,
        t=t_ms,
        channels=np.concatenate([accel, gyro, quats], axis=1),
        rate_hz=cfg.rate_hz,
        source=f"synth:{profile.name}",
    )


class SynthService:
    """
    Deterministic generator of labeled multi-subject recordings.
    """

    @staticmethod
    def generate(
        cfg: SynthConfig, seed: int = 0, window: int = 64, stride: int = 16
    ) -> tuple[list[tuple[str, Recording]], list[Annotation]]:
        """
        Generate one recording per (subject, class) and its annotation.

        Each subject gets a fixed heading offset drawn from
        U(-orientation_offset, orientation_offset), shared by all of its
        recordings. Class c of a subject starts at c · (L · period + 1 s) ms so
        the subject's annotations never overlap.

        :param cfg: SynthConfig
            Subject/class counts and signal parameters; `cfg.seed` overrides `seed`.
        :param seed: int, optional
            Generator seed.
        :param window: int, optional
            Window length the recordings are sized for.
        :param stride: int, optional
            Sliding-window stride the recordings are sized for.
        :return: tuple[list[tuple[str, Recording]], list[Annotation]]
            (file name, recording) pairs and the annotations, in subject then class order.
        """
        seed = cfg.seed if cfg.seed is not None else seed
        n_samples = recording_length(cfg.windows_per_class, window, stride)
        period_ms = int(round(1000.0 / cfg.rate_hz))
        span = n_samples * period_ms + GAP_MS

        recordings, annotations = [], []
        for s in range(cfg.subjects):
            subject = subject_name(s)
            yaw = float(np.random.default_rng([seed, s]).uniform(-cfg.orientation_offset, cfg.orientation_offset))
            for c, profile in enumerate(cfg.classes):
                rng = np.random.default_rng([seed, s, c + 1])
                recording = synth_recording(profile, subject, yaw, n_samples, c * span, cfg, rng)
                recordings.append((f"{subject}_{profile.name}.csv", recording))
                annotations.append(
                    Annotation(
                        subject=subject,
                        label=profile.name,
                        start_ms=int(recording.t[0]),
                        end_ms=int(recording.t[-1]) + period_ms,
                    )
                )
        logger.info(
            f"Generated {len(recordings)} recordings of {n_samples} samples for {cfg.subjects} subject(s)."
        )
        return recordings, annotations

    @staticmethod
    def write(
        out_dir: str | Path, recordings: list[tuple[str, Recording]], annotations: list[Annotation]
    ) -> list[Path]:
        repo = RecordingRepository(out_dir)
        paths = [repo.write_recording(recording, name) for name, recording in recordings]
        paths.append(repo.write_annotations(annotations))
        return paths
