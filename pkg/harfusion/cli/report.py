import argparse
import json
import logging

from harfusion.cli.common import MODALITIES, StageContext, add_common_arguments
from harfusion.core.exceptions import StageOrderError
from harfusion.repositories.image_repo import ImageRepository
from harfusion.repositories.report_repo import ReportRepository
from harfusion.schemas.features import FeatureImage
from harfusion.services.report_service import ReportService


logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser("report", help="merge evaluation reports and render previews")
    add_common_arguments(parser)
    parser.add_argument("--scale", type=int, default=4, help="preview enlargement factor")
    parser.set_defaults(func=run)


def run(args: argparse.Namespace) -> int:
    """
    Merge every `eval_<protocol>` report into `report.txt`/`report.json` and
    save one preview image per class and modality.

    Reports from another configuration are refused unless forced.
    """
    ctx = StageContext(args, "report")
    stages = ctx.manifests.list_stages("eval-")
    if not stages:
        raise StageOrderError("report", "eval", ctx.out)
    for stage in stages:
        ctx.require(stage, hash_stage="eval")

    repo = ReportRepository(ctx.out / "reports")
    reports = [repo.read_report(path) for path in repo.list_reports()]
    rows = ReportService.merge(reports, force=ctx.force)
    protocols = [r.protocol for r in reports]
    sections = [ReportService.grid_table(rows, protocols)] + [ReportService.render(r) for r in reports]
    text = "\n\n".join(s.rstrip("\n") for s in sections)
    print(text)

    merged = {"protocols": protocols, "grid": [row.model_dump(mode="json") for row in rows]}
    files = [repo.write_text("report.txt", text), repo.write_text("report.json", json.dumps(merged, indent=2))]

    images = ImageRepository(ctx.out / "images")
    class_names = reports[0].class_names if reports else []
    for modality in MODALITIES:
        if not images.exists(modality):
            continue
        first: dict[int, FeatureImage] = {}
        for image in images.load(modality):
            first.setdefault(image.label, image)
        for label, image in sorted(first.items()):
            name = class_names[label] if label < len(class_names) else str(label)
            files.append(repo.write_preview(f"{modality}_{name}", image, scale=args.scale))
    logger.info(f"Report merges {len(reports)} protocol(s) and {len(rows)} row(s).")
    ctx.finish(files, details={"protocols": protocols})
    return 0
