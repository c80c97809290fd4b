import argparse
import logging

from harfusion.cli.common import (
    StageContext,
    add_common_arguments,
    add_external_argument,
    add_fusion_arguments,
    load_external,
    load_windows,
)
from harfusion.core.exceptions import ShapeMismatchError
from harfusion.repositories.prediction_repo import PredictionRepository
from harfusion.services.evaluation_service import confusion, metrics
from harfusion.services.fusion_service import FusionService


logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser("fuse", help="fuse per-modality probabilities into decisions")
    add_common_arguments(parser)
    add_fusion_arguments(parser)
    add_external_argument(parser)
    parser.set_defaults(func=run)


def run(args: argparse.Namespace) -> int:
    """
    Align the predicted modalities (and any external ones) by window id, fuse
    and write `fused_<method>.txt`.

    Rows follow the first modality's file; every other modality must cover them.
    """
    ctx = StageContext(args, "fuse")
    dataset = load_windows(ctx)
    fusion = ctx.cfg.fusion
    repo = PredictionRepository(ctx.out / "predictions")

    tables = {}
    for modality in fusion.modalities:
        if modality in fusion.external:
            continue
        ctx.require(f"predict-{modality}", hash_stage="predict")
        tables[modality] = repo.read_table(f"{modality}.prob")
    tables.update(load_external(ctx.cfg, len(dataset.class_names)))
    if not tables:
        raise ShapeMismatchError("fusion input", 0, "at least one modality")

    modalities = list(tables)
    ids = list(tables[modalities[0]])
    for modality in modalities[1:]:
        missing = [wid for wid in ids if wid not in tables[modality]]
        if missing:
            raise ShapeMismatchError(f"modality {modality}", f"no row for {missing[0]}", "one row per window")

    probabilities = [[tables[m][wid] for wid in ids] for m in modalities]
    _, decisions = FusionService.fuse_many(probabilities, fusion.method, fusion.k, modalities)
    path = repo.write_decisions(f"fused_{fusion.method.value}.txt", ids, decisions, dataset.class_names)

    details = {"modalities": modalities, "method": fusion.method.value, "windows": len(ids)}
    labels = {w.window_id: w.label for w in dataset.windows}
    if ids and all(wid in labels for wid in ids):
        report = metrics(confusion([d.index for d in decisions], [labels[wid] for wid in ids], len(dataset.class_names)))
        logger.info(f"{'+'.join(modalities)} ({fusion.method.value}): accuracy {report.accuracy:.4f} on {len(ids)} windows.")
        details["accuracy"] = report.accuracy
    ctx.finish([path], details=details)
    return 0
