import argparse
import logging

from harfusion.cli.common import MODALITIES, StageContext, add_common_arguments, load_windows
from harfusion.repositories.image_repo import ImageRepository
from harfusion.schemas.augmentation import AugmentMode
from harfusion.services.protocol_service import ProtocolService
from harfusion.services.training_service import TrainingService


logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser("augment", help="enlarge the training images of one fold")
    add_common_arguments(parser)
    parser.add_argument("--mode", dest="augment_mode", choices=[m.value for m in AugmentMode])
    parser.add_argument("--modality", choices=MODALITIES, required=True)
    parser.set_defaults(func=run)


def run(args: argparse.Namespace) -> int:
    """
    Augment the training windows of the configured fold and write `<modality>.train` images.

    Test windows are never augmented.
    """
    ctx = StageContext(args, "augment")
    ctx.require(f"transform-{args.modality}", hash_stage="transform")
    dataset = load_windows(ctx)
    fold, train_idx = ProtocolService.configured_fold(dataset, ctx.cfg)
    windows = [dataset.windows[i] for i in train_idx]
    images = TrainingService.modality_images(windows, args.modality, ctx.cfg, augment=True)
    files = ImageRepository(ctx.out / "images").save(f"{args.modality}.train", images)
    logger.info(f"{args.modality} fold {fold.name}: {len(windows)} windows -> {len(images)} training images.")
    ctx.finish(
        files,
        name=f"augment-{args.modality}",
        details={"fold": fold.name, "mode": ctx.cfg.augmentation.mode.value, "images": len(images)},
    )
    return 0
