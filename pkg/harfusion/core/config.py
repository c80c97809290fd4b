import hashlib
import json
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path
from typing import Any

from pydantic import BaseModel, ConfigDict, ValidationError, field_validator, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from harfusion.core.exceptions import ConfigError
from harfusion.schemas.augmentation import AugmentationConfig
from harfusion.schemas.evaluation import ProtocolName
from harfusion.schemas.features import FeatureKind
from harfusion.schemas.fusion import FusionMethod
from harfusion.schemas.imu import ColumnMap
from harfusion.schemas.nn import TrainConfig
from harfusion.schemas.synth import SynthConfig


class Settings(BaseSettings):
    """
    Runtime settings loaded from environment variables.

    Attributes:
        log_level (str): Root logging level (default: "INFO").
        workers (int): Size of the fold worker pool (default: 1).
        force (bool): Accept artifacts with mismatching provenance (default: False).
        out_dir (str): Default output directory for artifacts (default: "runs/default").

    Config:
        env_prefix (str): Prefix of the environment variables ("HARFUSION_").
        env_file (str): Path to the .env file containing environment variables.
    """

    log_level: str = "INFO"
    workers: int = 1
    force: bool = False
    out_dir: str = "runs/default"

    model_config = SettingsConfigDict(
        env_prefix="HARFUSION_",
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )


settings = Settings()
"""
Instance of runtime settings loaded from environment variables.
"""


COLUMN_MAP_PRESETS: dict[str, ColumnMap] = {
    "default": ColumnMap(),
    # Hand IMU of the public 100 Hz protocol dump: seconds, activity id, heart
    # rate, temperature, acc ±16g, acc ±6g, gyro, magnetometer, orientation (w, x, y, z).
    "pamap2": ColumnMap(
        t=0, ax=4, ay=5, az=6, gx=10, gy=11, gz=12, qw=16, qx=17, qy=18, qz=19,
        label=1, delimiter=None, header=False, t_scale=1000.0, rate_hz=100.0,
    ),
}
"""
Column maps selectable by name through `ingestion.preset`.
"""


class IngestionConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    preset: str | None = None
    columns: ColumnMap = ColumnMap()
    expected_rate_hz: float = 50.0
    ignore_labels: list[str] = ["0"]

    @field_validator("preset")
    @classmethod
    def _known_preset(cls, value: str | None) -> str | None:
        if value is not None and value not in COLUMN_MAP_PRESETS:
            raise ValueError(f"unknown column map preset {value!r}")
        return value

    def column_map(self) -> ColumnMap:
        return COLUMN_MAP_PRESETS[self.preset] if self.preset else self.columns


class SamplingConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    window: int = 64
    overlap: float = 0.75

    @model_validator(mode="after")
    def _stride(self):
        if self.window < 2:
            raise ValueError("window must be >= 2")
        if not 0.0 <= self.overlap < 1.0:
            raise ValueError("overlap must lie in [0, 1)")
        if self.stride < 1:
            raise ValueError("overlap leaves a stride below 1")
        return self

    @property
    def stride(self) -> int:
        return int(round(self.window * (1.0 - self.overlap)))


class ExpansionConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    seed: int = 0
    row_sequence: list[int] | None = None
    circular: bool = False

    @field_validator("row_sequence")
    @classmethod
    def _indices(cls, value: list[int] | None) -> list[int] | None:
        if value is not None and (not value or any(not 0 <= i < 10 for i in value)):
            raise ValueError("row_sequence entries must be channel indices 0..9")
        return value


class TransformConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    och_size: int = 64

    @field_validator("och_size")
    @classmethod
    def _size(cls, value: int) -> int:
        if value < 8:
            raise ValueError("och_size must be >= 8")
        return value


class ModalityConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    train: TrainConfig = TrainConfig()
    conv1_filters: int = 32
    conv2_filters: int = 64
    kernel: int = 5
    hidden_units: int = 128


class FusionConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    method: FusionMethod = FusionMethod.avg
    k: int | None = None
    modalities: list[str] = ["freq", "och"]
    external: dict[str, str] = {}


class ProtocolConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: ProtocolName = ProtocolName.hh
    stratified: bool = False
    train_fraction: float = 1.0
    fold: int = 0

    @field_validator("train_fraction")
    @classmethod
    def _fraction(cls, value: float) -> float:
        if not 0.0 < value <= 1.0:
            raise ValueError("train_fraction must lie in (0, 1]")
        return value


def _default_modalities() -> dict[str, ModalityConfig]:
    return {kind.value: ModalityConfig() for kind in FeatureKind}


class PipelineConfig(BaseModel):
    """
    Complete, validated pipeline configuration. Unknown keys are rejected.
    """

    model_config = ConfigDict(extra="forbid")

    seed: int = 0
    ingestion: IngestionConfig = IngestionConfig()
    sampling: SamplingConfig = SamplingConfig()
    expansion: ExpansionConfig = ExpansionConfig()
    transforms: TransformConfig = TransformConfig()
    augmentation: AugmentationConfig = AugmentationConfig()
    modalities: dict[str, ModalityConfig] = _default_modalities()
    fusion: FusionConfig = FusionConfig()
    protocol: ProtocolConfig = ProtocolConfig()
    synth: SynthConfig = SynthConfig()

    @field_validator("modalities")
    @classmethod
    def _known_modalities(cls, value: dict[str, ModalityConfig]) -> dict[str, ModalityConfig]:
        known = {kind.value for kind in FeatureKind}
        unknown = set(value) - known
        if unknown:
            raise ValueError(f"unknown modalities {sorted(unknown)}")
        return {**_default_modalities(), **value}

    def stage_hash(self, stage: str) -> str:
        """
        Hash of the config sections consumed by `stage` and everything upstream of it.

        :param stage: str
            Stage name as used by the command line.
        :return: str
            16 hex characters.
        """
        sections = STAGE_SECTIONS[stage]
        dumped = self.model_dump(mode="json")
        payload = json.dumps({key: dumped[key] for key in sections}, sort_keys=True)
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]

    def stage_seed(self, stage: str) -> int:
        return derive_seed(self.seed, stage)


_CHAIN = ["ingestion", "sampling", "expansion", "transforms", "seed", "augmentation", "modalities", "protocol"]

STAGE_SECTIONS: dict[str, list[str]] = {
    "synth": ["seed", "synth"],
    "ingest": _CHAIN[:1],
    "sample": _CHAIN[:2],
    "transform": _CHAIN[:4],
    "augment": _CHAIN[:6] + ["protocol"],
    "train": _CHAIN,
    "predict": _CHAIN,
    "fuse": _CHAIN + ["fusion"],
    "eval": _CHAIN + ["fusion", "synth"],
    "report": _CHAIN + ["fusion", "synth"],
}
"""
Config sections each stage's artifacts depend on.
"""


def derive_seed(seed: int, stage: str) -> int:
    """
    Derive a stage seed from the global seed so stages rerun independently.

    :param seed: int
        Global seed.
    :param stage: str
        Stage or sub-stage name.
    :return: int
        Unsigned 64-bit seed.
    """
    digest = hashlib.sha256(f"{seed}:{stage}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def _parse_value(raw: str) -> Any:
    try:
        return tomllib.loads(f"value = {raw}")["value"]
    except tomllib.TOMLDecodeError:
        return raw


def apply_override(data: dict, assignment: str) -> dict:
    """
    Apply one `section.key=value` override to a raw config mapping.

    :param data: dict
        Raw (unvalidated) config mapping, modified in place.
    :param assignment: str
        Dotted path and TOML-literal value.
    :raises ConfigError:
        If the assignment has no `=` or an empty path.
    :return: dict
        The updated mapping.
    """
    path, sep, raw = assignment.partition("=")
    keys = [k for k in path.strip().split(".") if k]
    if not sep or not keys:
        raise ConfigError(f"malformed override {assignment!r}, expected section.key=value")
    node = data
    for key in keys[:-1]:
        node = node.setdefault(key, {})
        if not isinstance(node, dict):
            raise ConfigError(f"override {assignment!r} descends into a scalar")
    node[keys[-1]] = _parse_value(raw.strip())
    return data


def load_config(path: str | Path | None = None, overrides: list[str] | None = None) -> PipelineConfig:
    """
    Load, override and validate the pipeline configuration.

    :param path: str | Path | None, optional
        TOML config file; defaults only when None.
    :param overrides: list[str] | None, optional
        `section.key=value` assignments applied after the file.
    :raises ConfigError:
        If the file is missing, unparsable, or fails validation.
    :return: PipelineConfig
        The validated configuration.
    """
    data: dict = {}
    if path is not None:
        try:
            data = tomllib.loads(Path(path).read_text(encoding="utf-8"))
        except FileNotFoundError as e:
            raise ConfigError(f"config file {path} not found", log_message=e)
        except tomllib.TOMLDecodeError as e:
            raise ConfigError(f"config file {path} is not valid TOML: {e}")
    for assignment in overrides or []:
        apply_override(data, assignment)
    return validate_config(data)


def validate_config(data: dict) -> PipelineConfig:
    try:
        return PipelineConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(str(e).replace("\n", "; "))
