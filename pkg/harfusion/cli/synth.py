import argparse
from pathlib import Path

from harfusion.cli.common import StageContext, add_common_arguments
from harfusion.services.synth_service import SynthService


def register(subparsers) -> None:
    parser = subparsers.add_parser("synth", help="generate synthetic labeled recordings")
    add_common_arguments(parser)
    parser.add_argument("--data", type=Path, help="output directory for recordings (default: <out>/raw)")
    parser.set_defaults(func=run)


def run(args: argparse.Namespace) -> int:
    """
    Write one recording per subject and class plus `annotations.csv`.
    """
    ctx = StageContext(args, "synth")
    data_dir = args.data or ctx.out / "raw"
    recordings, annotations = SynthService.generate(
        ctx.cfg.synth, seed=ctx.seed, window=ctx.cfg.sampling.window, stride=ctx.cfg.sampling.stride
    )
    files = SynthService.write(data_dir, recordings, annotations)
    ctx.finish(files, details={"recordings": len(recordings), "data_dir": str(data_dir)})
    return 0
