import argparse

from harfusion.cli.common import MODALITIES, StageContext, add_common_arguments, load_windows, select_images
from harfusion.nn.architectures import build_m1_architecture
from harfusion.nn.network import Network
from harfusion.repositories.image_repo import ImageRepository
from harfusion.repositories.model_repo import ModelRepository
from harfusion.repositories.prediction_repo import PredictionRepository
from harfusion.services.protocol_service import ProtocolService
from harfusion.services.training_service import TrainingService


def register(subparsers) -> None:
    parser = subparsers.add_parser("predict", help="class probabilities for the test windows")
    add_common_arguments(parser)
    parser.add_argument("--modality", choices=MODALITIES, required=True)
    parser.set_defaults(func=run)


def run(args: argparse.Namespace) -> int:
    ctx = StageContext(args, "predict")
    modality = args.modality
    ctx.require(f"train-{modality}", hash_stage="train")
    dataset = load_windows(ctx)
    fold, _ = ProtocolService.configured_fold(dataset, ctx.cfg)
    ids = [dataset.windows[i].window_id for i in fold.test]
    test_images = select_images(ImageRepository(ctx.out / "images").load(modality), ids)

    modality_cfg = ctx.cfg.modalities[modality]
    height, width = test_images[0].shape[:2] if test_images else (8, 8)
    expected = build_m1_architecture(
        height,
        width,
        len(dataset.class_names),
        conv1_filters=modality_cfg.conv1_filters,
        conv2_filters=modality_cfg.conv2_filters,
        kernel=modality_cfg.kernel,
        hidden_units=modality_cfg.hidden_units,
        dropout_rate=modality_cfg.train.dropout_rate,
    )
    params, _ = ModelRepository(ctx.out / "models").load(modality, expected_layers=expected)
    probs = TrainingService.predict(Network.from_params(params), test_images, modality_cfg.train.batch_size)

    header = {"modality": modality, "classes": ",".join(dataset.class_names), "config_hash": ctx.config_hash}
    path = PredictionRepository(ctx.out / "predictions").write_probabilities(f"{modality}.prob", ids, probs, header)
    ctx.finish([path], name=f"predict-{modality}", details={"fold": fold.name, "windows": len(ids)})
    return 0
