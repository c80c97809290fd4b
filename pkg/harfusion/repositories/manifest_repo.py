import json
from pathlib import Path

from pydantic import ValidationError

from harfusion.core.exceptions import CorruptArtifactError, StageOrderError
from harfusion.core.validation import check_provenance
from harfusion.schemas.manifest import StageManifest


class ManifestRepository:
    """
    Repository for stage manifests stored as `<out>/manifests/<stage>.json`.
    """

    def __init__(self, out_dir: str | Path):
        self.out_dir = Path(out_dir)
        self.root = self.out_dir / "manifests"

    def _path(self, stage: str) -> Path:
        return self.root / f"{stage}.json"

    def exists(self, stage: str) -> bool:
        return self._path(stage).exists()

    def list_stages(self, prefix: str = "") -> list[str]:
        return sorted(p.stem for p in self.root.glob(f"{prefix}*.json"))

    def write(self, manifest: StageManifest) -> Path:
        self.root.mkdir(parents=True, exist_ok=True)
        path = self._path(manifest.stage)
        path.write_text(json.dumps(manifest.model_dump(mode="json"), indent=2, sort_keys=True) + "\n", encoding="utf-8")
        return path

    def read(self, stage: str, required_by: str = "") -> StageManifest:
        """
        Read the manifest of a completed stage.

        :raises StageOrderError:
            If the stage has not run in this output directory.
        :raises CorruptArtifactError:
            If the manifest cannot be parsed.
        """
        path = self._path(stage)
        if not path.exists():
            raise StageOrderError(required_by or stage, stage, self.out_dir)
        try:
            return StageManifest.model_validate_json(path.read_text(encoding="utf-8"))
        except ValidationError as e:
            raise CorruptArtifactError(path, str(e).splitlines()[0])

    def require(
        self, stage: str, required_by: str, expected_hash: str, seed: int | None = None, force: bool = False
    ) -> StageManifest:
        """
        Read an upstream manifest and check it matches the current configuration.

        :raises StageOrderError:
            If the upstream stage has not run.
        :raises ProvenanceError:
            If its config hash differs and `force` is not set.
        """
        manifest = self.read(stage, required_by)
        check_provenance(manifest, expected_hash, seed, force)
        return manifest
