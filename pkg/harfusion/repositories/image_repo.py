import json
import struct
from pathlib import Path

import numpy as np

from harfusion.core.exceptions import CorruptArtifactError
from harfusion.schemas.features import FeatureImage, FeatureKind


MAGIC = b"HARI"
VERSION = 1
HEADER = struct.Struct("<4sBBHII")


def encode_image(image: FeatureImage) -> bytes:
    """
    16-byte header (magic, version, kind, reserved, H, W) and little-endian float32 pixels, channel-last.
    """
    height, width, _ = image.shape
    header = HEADER.pack(MAGIC, VERSION, image.kind.code, 0, height, width)
    return header + image.pixels.astype("<f4").tobytes(order="C")


class ImageRepository:
    """
    Repository for feature-image sets.

    A set `<name>` is one `<name>.hari` stream of framed images and a
    `<name>.jsonl` sidecar with one line per image (window id, label,
    subject, provenance).
    """

    def __init__(self, root: str | Path):
        self.root = Path(root)

    def paths(self, name: str) -> tuple[Path, Path]:
        return self.root / f"{name}.hari", self.root / f"{name}.jsonl"

    def exists(self, name: str) -> bool:
        return all(p.exists() for p in self.paths(name))

    def save(self, name: str, images: list[FeatureImage]) -> list[Path]:
        self.root.mkdir(parents=True, exist_ok=True)
        stream, sidecar = self.paths(name)
        with stream.open("wb") as f:
            for image in images:
                f.write(encode_image(image))
        lines = [
            json.dumps(
                {
                    "window_id": image.provenance,
                    "label": image.label,
                    "subject": image.subject,
                    "provenance": image.origin,
                },
                sort_keys=True,
            )
            for image in images
        ]
        sidecar.write_text("".join(line + "\n" for line in lines), encoding="utf-8")
        return [stream, sidecar]

    def load(self, name: str) -> list[FeatureImage]:
        """
        Read every image of a set.

        :raises CorruptArtifactError:
            On a missing file, bad magic or version, truncated data, or a
            sidecar whose line count differs from the image count.
        :return: list[FeatureImage]
            Images in stored order.
        """
        stream, sidecar = self.paths(name)
        try:
            data = stream.read_bytes()
            meta = [json.loads(line) for line in sidecar.read_text(encoding="utf-8").splitlines() if line]
        except (OSError, json.JSONDecodeError) as e:
            raise CorruptArtifactError(stream, str(e), log_message=e)

        images, offset = [], 0
        while offset < len(data):
            if offset + HEADER.size > len(data):
                raise CorruptArtifactError(stream, f"truncated header at byte {offset}")
            magic, version, code, _, height, width = HEADER.unpack_from(data, offset)
            if magic != MAGIC or version != VERSION or code not in (0, 1):
                raise CorruptArtifactError(stream, f"bad header at byte {offset}")
            kind = FeatureKind.from_code(code)
            count = height * width * kind.depth
            start = offset + HEADER.size
            end = start + 4 * count
            if end > len(data):
                raise CorruptArtifactError(stream, f"truncated image at byte {offset}")
            pixels = np.frombuffer(data, dtype="<f4", count=count, offset=start).reshape(height, width, kind.depth)
            if len(images) >= len(meta):
                raise CorruptArtifactError(sidecar, "fewer metadata lines than images")
            info = meta[len(images)]
            images.append(
                FeatureImage(
                    pixels=pixels.astype(np.float64),
                    kind=kind,
                    provenance=info["window_id"],
                    label=info.get("label"),
                    subject=info.get("subject"),
                    origin=info.get("provenance"),
                )
            )
            offset = end
        if len(images) != len(meta):
            raise CorruptArtifactError(sidecar, f"{len(meta)} metadata lines for {len(images)} images")
        return images
