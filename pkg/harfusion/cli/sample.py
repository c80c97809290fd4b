import argparse
import logging

from harfusion.cli.common import StageContext, add_common_arguments
from harfusion.core.exceptions import StageOrderError
from harfusion.repositories.recording_repo import RecordingRepository
from harfusion.repositories.window_repo import WindowRepository
from harfusion.schemas.imu import ColumnMap
from harfusion.services.imu_service import ImuService, merge_by_subject


logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser("sample", help="segment recordings and cut sliding windows")
    add_common_arguments(parser)
    parser.set_defaults(func=run)


def _source(ctx: StageContext) -> RecordingRepository:
    if ctx.manifests.exists("ingest"):
        ctx.require("ingest")
        return RecordingRepository(ctx.out / "recordings")
    if ctx.manifests.exists("synth"):
        ctx.require("synth")
        logger.info("No ingest manifest; reading synthetic recordings directly.")
        return RecordingRepository(ctx.out / "raw")
    raise StageOrderError("sample", "ingest", ctx.out)


def run(args: argparse.Namespace) -> int:
    """
    Window the canonical recordings of `ingest`, or the raw output of `synth`
    when ingestion was skipped.
    """
    ctx = StageContext(args, "sample")
    repo = _source(ctx)
    canonical = ColumnMap(rate_hz=ctx.cfg.ingestion.expected_rate_hz)
    recordings = merge_by_subject([ImuService.ingest_recording(p, canonical) for p in repo.list_recordings()])
    annotations = repo.read_annotations()

    sampling = ctx.cfg.sampling
    dataset, reports = ImuService.build_dataset(recordings, annotations, sampling.window, sampling.overlap)
    summary = ImuService.dataset_summary(dataset)
    print(summary.to_text())

    files = WindowRepository(ctx.out / "windows").save(dataset, ctx.config_hash, ctx.cfg.seed)
    short = sum(r.short for r in reports)
    ctx.finish(files, details={"windows": len(dataset), "classes": dataset.class_names, "short_slices": short})
    return 0
