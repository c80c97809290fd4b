import argparse
import logging

from harfusion.cli.common import (
    MODALITIES,
    StageContext,
    add_common_arguments,
    add_train_arguments,
    load_windows,
    select_images,
)
from harfusion.core.config import derive_seed
from harfusion.repositories.image_repo import ImageRepository
from harfusion.repositories.model_repo import ModelRepository
from harfusion.services.protocol_service import ProtocolService
from harfusion.services.training_service import TrainingService


logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser("train", help="train one modality network")
    add_common_arguments(parser)
    add_train_arguments(parser)
    parser.add_argument("--modality", choices=MODALITIES, required=True)
    parser.set_defaults(func=run)


def run(args: argparse.Namespace) -> int:
    """
    Train the modality network on the configured fold.

    Uses the augmented `<modality>.train` images when `augment` ran for the
    modality, otherwise the fold's original training images.
    """
    ctx = StageContext(args, "train")
    modality = args.modality
    ctx.require(f"transform-{modality}", hash_stage="transform")
    dataset = load_windows(ctx)
    fold, train_idx = ProtocolService.configured_fold(dataset, ctx.cfg)
    images = ImageRepository(ctx.out / "images")

    if ctx.manifests.exists(f"augment-{modality}"):
        ctx.require(f"augment-{modality}", hash_stage="augment")
        train_images = images.load(f"{modality}.train")
    else:
        logger.info(f"No augment manifest for {modality}; training on original images.")
        train_images = select_images(images.load(modality), [dataset.windows[i].window_id for i in train_idx])

    modality_cfg = ctx.cfg.modalities[modality]
    _, result = TrainingService.train_images(
        train_images,
        len(dataset.class_names),
        modality_cfg.train,
        derive_seed(ctx.seed, f"{modality}:{fold.name}"),
        conv1_filters=modality_cfg.conv1_filters,
        conv2_filters=modality_cfg.conv2_filters,
        kernel=modality_cfg.kernel,
        hidden_units=modality_cfg.hidden_units,
    )
    extra = {"modality": modality, "classes": dataset.class_names, "config_hash": ctx.config_hash, "fold": fold.name}
    files = ModelRepository(ctx.out / "models").save(modality, result, extra)
    final = result.loss_curve[-1] if result.loss_curve else None
    ctx.finish(files, name=f"train-{modality}", details={"samples": result.n_samples, "final_loss": final})
    return 0
