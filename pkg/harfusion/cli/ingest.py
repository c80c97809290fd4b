import argparse
import logging
from pathlib import Path

from harfusion.cli.common import StageContext, add_common_arguments
from harfusion.core.exceptions import EmptyRecordingError
from harfusion.repositories.recording_repo import RecordingRepository
from harfusion.services.imu_service import ImuService, merge_by_subject


logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser("ingest", help="read raw recordings into the canonical layout")
    add_common_arguments(parser)
    parser.add_argument("--data", type=Path, help="directory of raw recordings (default: <out>/raw)")
    parser.add_argument("--pattern", default="*.csv", help="glob of recording files")
    parser.add_argument("--annotations", type=Path, help="annotation file (default: <data>/annotations.csv)")
    parser.set_defaults(func=run)


def run(args: argparse.Namespace) -> int:
    """
    Parse raw files through the configured column map and write one canonical
    recording per subject to `<out>/recordings` with the annotations.

    Without an annotation file, runs of a mapped label column become annotations.
    """
    ctx = StageContext(args, "ingest")
    source = RecordingRepository(args.data or ctx.out / "raw")
    mapping = ctx.cfg.ingestion.column_map()
    paths = source.list_recordings(args.pattern)
    if not paths:
        raise EmptyRecordingError(source.root / args.pattern)

    recordings = merge_by_subject(
        [ImuService.ingest_recording(p, mapping, expected_rate_hz=ctx.cfg.ingestion.expected_rate_hz) for p in paths]
    )
    annotation_file = args.annotations or source.root / "annotations.csv"
    if annotation_file.exists():
        annotations = source.read_annotations(annotation_file)
    else:
        logger.info(f"No annotation file at {annotation_file}; deriving annotations from the label column.")
        annotations = [
            a for r in recordings for a in ImuService.annotations_from_labels(r, ctx.cfg.ingestion.ignore_labels)
        ]

    target = RecordingRepository(ctx.out / "recordings")
    files = [target.write_recording(r, f"{r.subject}.csv") for r in recordings]
    files.append(target.write_annotations(annotations))
    dropped = sum(r.dropped_rows for r in recordings)
    ctx.finish(files, details={"subjects": len(recordings), "annotations": len(annotations), "dropped_rows": dropped})
    return 0
