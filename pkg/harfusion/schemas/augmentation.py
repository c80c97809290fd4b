import math
from enum import Enum

from pydantic import BaseModel, ConfigDict, field_validator, model_validator


class AugmentMode(str, Enum):
    none = "none"
    ja = "ja"
    ka = "ka"
    ja_ka = "ja+ka"

    @property
    def uses_ka(self) -> bool:
        return self in (AugmentMode.ka, AugmentMode.ja_ka)

    @property
    def uses_ja(self) -> bool:
        return self in (AugmentMode.ja, AugmentMode.ja_ka)


class KaConfig(BaseModel):
    """
    Kinematics augmentation: rotations about `rotation_axis`, mirrors across
    the planes with the given normals, and accel/gyro noise.
    """

    model_config = ConfigDict(extra="forbid")

    rotation_angles: list[float] = [math.pi / 8, -math.pi / 8, math.pi / 4, -math.pi / 4]
    rotation_axis: tuple[float, float, float] = (0.0, 0.0, 1.0)
    mirror_planes: list[tuple[float, float, float]] = [(1.0, 0.0, 0.0), (0.0, 1.0, 0.0)]
    noise_frac: float = 0.05
    seed: int | None = None

    @field_validator("noise_frac")
    @classmethod
    def _noise(cls, value: float) -> float:
        if value < 0:
            raise ValueError("noise_frac must be >= 0")
        return value

    @field_validator("rotation_angles")
    @classmethod
    def _angles(cls, value: list[float]) -> list[float]:
        if not all(math.isfinite(a) for a in value):
            raise ValueError("rotation angles must be finite")
        return value

    @property
    def per_original(self) -> int:
        return len(self.rotation_angles) + len(self.mirror_planes)


class JaConfig(BaseModel):
    """
    Jittering augmentation: random affine translate, scale and rotate of images.
    """

    model_config = ConfigDict(extra="forbid")

    translate_frac: float = 0.10
    scale_range: tuple[float, float] = (0.9, 1.1)
    rotate_deg_range: tuple[float, float] = (-5.0, 5.0)
    per_original: int = 6
    seed: int | None = None

    @model_validator(mode="after")
    def _ranges(self):
        low, high = self.scale_range
        if low <= 0 or high <= 0 or low > high:
            raise ValueError("scale_range must be positive and ordered")
        if self.rotate_deg_range[0] > self.rotate_deg_range[1]:
            raise ValueError("rotate_deg_range must be ordered")
        if self.translate_frac < 0 or self.per_original < 0:
            raise ValueError("translate_frac and per_original must be >= 0")
        return self


class AugmentationConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    mode: AugmentMode = AugmentMode.none
    ka: KaConfig = KaConfig()
    ja: JaConfig = JaConfig()
