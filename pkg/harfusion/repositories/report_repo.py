from pathlib import Path

import numpy as np
from PIL import Image

from harfusion.core.exceptions import CorruptArtifactError
from harfusion.schemas.evaluation import EvaluationReport
from harfusion.schemas.features import FeatureImage


class ReportRepository:
    """
    Repository for evaluation reports (JSON and text) and feature-image previews (PNG).
    """

    def __init__(self, root: str | Path):
        self.root = Path(root)

    def write_report(self, name: str, report: EvaluationReport) -> Path:
        self.root.mkdir(parents=True, exist_ok=True)
        path = self.root / f"{name}.json"
        path.write_text(report.model_dump_json(indent=2) + "\n", encoding="utf-8")
        return path

    def list_reports(self, pattern: str = "eval_*.json") -> list[Path]:
        return sorted(self.root.glob(pattern))

    def read_report(self, path: str | Path) -> EvaluationReport:
        path = Path(path)
        try:
            return EvaluationReport.model_validate_json(path.read_text(encoding="utf-8"))
        except (OSError, ValueError) as e:
            raise CorruptArtifactError(path, str(e).splitlines()[0], log_message=e)

    def write_text(self, name: str, text: str) -> Path:
        self.root.mkdir(parents=True, exist_ok=True)
        path = self.root / name
        path.write_text(text if text.endswith("\n") else text + "\n", encoding="utf-8")
        return path

    def write_preview(self, name: str, image: FeatureImage, scale: int = 4) -> Path:
        """
        Save an image as an 8-bit PNG: grayscale for depth 1, RGB for depth 3,
        enlarged by nearest-neighbour `scale`.
        """
        directory = self.root / "previews"
        directory.mkdir(parents=True, exist_ok=True)
        pixels = np.rint(np.clip(image.pixels, 0.0, 1.0) * 255).astype(np.uint8)
        if pixels.shape[2] == 1:
            picture = Image.fromarray(np.ascontiguousarray(pixels[:, :, 0]))
        else:
            picture = Image.fromarray(pixels)
        if scale > 1:
            picture = picture.resize((picture.width * scale, picture.height * scale), Image.Resampling.NEAREST)
        path = directory / f"{name}.png"
        picture.save(path, format="PNG")
        return path
