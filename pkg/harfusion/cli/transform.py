import argparse
import logging

from harfusion.cli.common import MODALITIES, StageContext, add_common_arguments, load_windows
from harfusion.repositories.image_repo import ImageRepository
from harfusion.services.training_service import TrainingService


logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser("transform", help="turn windows into feature images")
    add_common_arguments(parser)
    parser.add_argument("--mode", choices=MODALITIES + ["all"], default="all", help="feature modality")
    parser.set_defaults(func=run)


def run(args: argparse.Namespace) -> int:
    ctx = StageContext(args, "transform")
    dataset = load_windows(ctx)
    repo = ImageRepository(ctx.out / "images")
    modalities = MODALITIES if args.mode == "all" else [args.mode]
    for modality in modalities:
        images = TrainingService.modality_images(dataset.windows, modality, ctx.cfg)
        files = repo.save(modality, images)
        shape = list(images[0].shape) if images else []
        logger.info(f"{modality}: {len(images)} images of shape {shape}.")
        ctx.finish(files, name=f"transform-{modality}", details={"images": len(images), "shape": shape})
    return 0
