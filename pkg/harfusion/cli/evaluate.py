import argparse

from harfusion.cli.common import (
    StageContext,
    add_common_arguments,
    add_external_argument,
    add_fusion_arguments,
    load_external,
    load_windows,
)
from harfusion.core.config import settings
from harfusion.repositories.report_repo import ReportRepository
from harfusion.schemas.evaluation import ProtocolName
from harfusion.services.protocol_service import ProtocolService
from harfusion.services.report_service import ReportService


def register(subparsers) -> None:
    parser = subparsers.add_parser("eval", help="train, fuse and score under an evaluation protocol")
    add_common_arguments(parser)
    add_fusion_arguments(parser)
    add_external_argument(parser)
    parser.add_argument("--protocol", choices=[p.value for p in ProtocolName])
    parser.add_argument("--grid", action="store_true", help="score every modality subset")
    parser.add_argument("--augment-sweep", action="store_true", help="repeat for every augmentation mode")
    parser.add_argument("--workers", type=int, help="concurrent folds (default: HARFUSION_WORKERS)")
    parser.set_defaults(func=run)


def run(args: argparse.Namespace) -> int:
    ctx = StageContext(args, "eval")
    dataset = load_windows(ctx)
    external = load_external(ctx.cfg, len(dataset.class_names))
    workers = args.workers or settings.workers

    report = ProtocolService.run_protocol(
        dataset, ctx.cfg, external, grid=args.grid, augment_sweep=args.augment_sweep, workers=workers
    )
    repo = ReportRepository(ctx.out / "reports")
    name = f"eval_{report.protocol}"
    text = ReportService.render(report)
    print(text, end="")
    files = [repo.write_report(name, report), repo.write_text(f"{name}.txt", text)]
    headline = report.grid[-1].reports[report.protocol] if report.grid else None
    ctx.finish(
        files,
        name=f"eval-{report.protocol}",
        details={"rows": len(report.grid), "accuracy": headline.accuracy if headline else None},
    )
    return 0
