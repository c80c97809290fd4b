import argparse
import json
import logging
from pathlib import Path

import numpy as np

from harfusion.core.config import PipelineConfig, load_config, settings
from harfusion.core.exceptions import ConfigError, CorruptArtifactError, ShapeMismatchError
from harfusion.repositories.manifest_repo import ManifestRepository
from harfusion.repositories.prediction_repo import PredictionRepository
from harfusion.schemas.features import FeatureKind
from harfusion.schemas.manifest import StageManifest


logger = logging.getLogger(__name__)

TRAIN_FLAGS = {"lr": "lr", "momentum": "momentum", "l2": "l2_lambda", "batch": "batch_size", "epochs": "epochs"}
MODALITIES = [kind.value for kind in FeatureKind]


def add_common_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, help="TOML pipeline configuration")
    parser.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE", help="config override")
    parser.add_argument("--seed", type=int, help="global seed")
    parser.add_argument("--out", type=Path, default=None, help="artifact directory")
    parser.add_argument("--force", action="store_true", default=None, help="accept mismatching upstream artifacts")


def add_train_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--lr", type=float)
    parser.add_argument("--momentum", type=float)
    parser.add_argument("--l2", type=float)
    parser.add_argument("--batch", type=int)
    parser.add_argument("--epochs", type=int)


def add_fusion_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--method", choices=["max", "avg", "wmax", "wavg"])
    parser.add_argument("--k", type=int, help="top-K candidates for weighted fusion")


def collect_overrides(args: argparse.Namespace) -> list[str]:
    """
    Translate command flags into `section.key=value` overrides, applied after `--set`.
    """
    overrides = list(getattr(args, "set", None) or [])
    if getattr(args, "seed", None) is not None:
        overrides.append(f"seed={args.seed}")
    targets = [args.modality] if getattr(args, "modality", None) else MODALITIES
    for flag, field in TRAIN_FLAGS.items():
        value = getattr(args, flag, None)
        if value is not None:
            overrides += [f"modalities.{m}.train.{field}={value}" for m in targets]
    if getattr(args, "method", None):
        overrides.append(f'fusion.method="{args.method}"')
    if getattr(args, "k", None) is not None:
        overrides.append(f"fusion.k={args.k}")
    if getattr(args, "protocol", None):
        overrides.append(f'protocol.name="{args.protocol}"')
    if getattr(args, "augment_mode", None):
        overrides.append(f'augmentation.mode="{args.augment_mode}"')
    for entry in getattr(args, "external", None) or []:
        name, sep, path = entry.partition("=")
        if not sep or not name:
            raise ConfigError(f"malformed --external {entry!r}, expected name=path")
        overrides.append(f"fusion.external.{name}={json.dumps(path)}")
    return overrides


class StageContext:
    """
    Per-command state: validated config, output directory and manifest bookkeeping.

    Attributes:
        stage (str): Stage name used for config hashing.
        cfg (PipelineConfig): Validated configuration with flag overrides applied.
        out (Path): Artifact directory.
        force (bool): Accept upstream artifacts with mismatching config hashes.
        manifests (ManifestRepository): Manifest store of `out`.
    """

    def __init__(self, args: argparse.Namespace, stage: str):
        self.stage = stage
        self.cfg: PipelineConfig = load_config(args.config, collect_overrides(args))
        self.out = Path(args.out or settings.out_dir)
        self.force = settings.force if args.force is None else args.force
        self.manifests = ManifestRepository(self.out)
        logger.info(f"{stage}: config {self.cfg.stage_hash(stage)}, seed {self.cfg.seed}, output {self.out}")

    @property
    def config_hash(self) -> str:
        return self.cfg.stage_hash(self.stage)

    @property
    def seed(self) -> int:
        return self.cfg.stage_seed(self.stage)

    def require(self, upstream: str, hash_stage: str | None = None) -> StageManifest:
        """
        Check an upstream stage ran with the current configuration.

        :param upstream: str
            Manifest name of the upstream stage (e.g. "sample", "train-freq").
        :param hash_stage: str | None, optional
            Stage whose config sections the manifest was hashed with; defaults to `upstream`.
        """
        return self.manifests.require(
            upstream, self.stage, self.cfg.stage_hash(hash_stage or upstream), self.cfg.seed, self.force
        )

    def finish(self, files: list[Path], name: str | None = None, details: dict | None = None) -> StageManifest:
        manifest = StageManifest(
            stage=name or self.stage,
            config_hash=self.config_hash,
            seed=self.cfg.seed,
            files=[p.relative_to(self.out).as_posix() if p.is_relative_to(self.out) else str(p) for p in files],
            details=details or {},
        )
        self.manifests.write(manifest)
        logger.info(f"{manifest.stage}: wrote {len(files)} file(s).")
        return manifest


def load_windows(ctx: StageContext):
    """
    Dataset written by `sample`, after checking its provenance.
    """
    from harfusion.repositories.window_repo import WindowRepository

    ctx.require("sample")
    dataset, _ = WindowRepository(ctx.out / "windows").load()
    return dataset


def select_images(images, window_ids: list[str]):
    """
    Images of the given window ids, in that order.
    """
    by_id = {image.provenance: image for image in images}
    missing = [wid for wid in window_ids if wid not in by_id]
    if missing:
        raise CorruptArtifactError("feature images", f"no image for window {missing[0]}")
    return [by_id[wid] for wid in window_ids]


def add_external_argument(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--external", action="append", default=[], metavar="NAME=PATH", help="externally produced probability file"
    )


def load_external(cfg: PipelineConfig, classes: int) -> dict[str, dict[str, np.ndarray]]:
    """
    Probability tables of the external modalities, keyed by window id.

    :raises ShapeMismatchError:
        If a table's class count differs from the dataset's.
    """
    tables = {}
    for name, path in cfg.fusion.external.items():
        table = PredictionRepository(Path(path).parent).read_table(Path(path))
        widths = {len(row) for row in table.values()}
        if widths and widths != {classes}:
            raise ShapeMismatchError(f"external modality {name}", sorted(widths), f"{classes} classes")
        logger.info(f"External modality {name}: {len(table)} rows from {path}.")
        tables[name] = table
    return tables
