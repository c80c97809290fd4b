import json
import struct
from pathlib import Path

import numpy as np

from harfusion.core.exceptions import ArchitectureMismatchError, CorruptArtifactError
from harfusion.nn.network import architecture_hash
from harfusion.schemas.nn import LayerSpec, ModelParams, TrainResult


MAGIC = b"HARW"
VERSION = 1
HEADER = struct.Struct("<4sH8sI")


def encode_params(params: ModelParams) -> bytes:
    """
    Magic, u16 version, 8-byte architecture hash, u32 block count, then per
    block u8 ndim, ndim × u32 dims and little-endian float64 data.
    """
    chunks = [HEADER.pack(MAGIC, VERSION, bytes.fromhex(params.architecture_hash), len(params.tensors))]
    for tensor in params.tensors:
        chunks.append(struct.pack("<B", tensor.ndim))
        chunks.append(struct.pack(f"<{tensor.ndim}I", *tensor.shape))
        chunks.append(np.ascontiguousarray(tensor, dtype="<f8").tobytes())
    return b"".join(chunks)


def decode_tensors(data: bytes, path: Path) -> tuple[str, list[np.ndarray]]:
    if len(data) < HEADER.size:
        raise CorruptArtifactError(path, "truncated header")
    magic, version, digest, blocks = HEADER.unpack_from(data, 0)
    if magic != MAGIC or version != VERSION:
        raise CorruptArtifactError(path, "not a model file")
    offset, tensors = HEADER.size, []
    for _ in range(blocks):
        if offset + 1 > len(data):
            raise CorruptArtifactError(path, "truncated block header")
        (ndim,) = struct.unpack_from("<B", data, offset)
        offset += 1
        if offset + 4 * ndim > len(data):
            raise CorruptArtifactError(path, "truncated block dims")
        dims = struct.unpack_from(f"<{ndim}I", data, offset)
        offset += 4 * ndim
        size = 8 * int(np.prod(dims, dtype=np.int64))
        if offset + size > len(data):
            raise CorruptArtifactError(path, "truncated parameter block")
        tensors.append(np.frombuffer(data, dtype="<f8", count=size // 8, offset=offset).reshape(dims).copy())
        offset += size
    if offset != len(data):
        raise CorruptArtifactError(path, "trailing bytes after the last block")
    return digest.hex(), tensors


class ModelRepository:
    """
    Repository for trained models: `<name>.harw` parameters plus a `<name>.json` sidecar.

    The sidecar carries the layer list, input shape, seed, training config,
    loss curve and any extra fields (modality, classes, config hash).
    """

    def __init__(self, root: str | Path):
        self.root = Path(root)

    def paths(self, name: str) -> tuple[Path, Path]:
        return self.root / f"{name}.harw", self.root / f"{name}.json"

    def save(self, name: str, result: TrainResult, extra: dict | None = None) -> list[Path]:
        self.root.mkdir(parents=True, exist_ok=True)
        weights, sidecar = self.paths(name)
        params = result.params
        weights.write_bytes(encode_params(params))
        meta = {
            "architecture_hash": params.architecture_hash,
            "input_shape": list(params.input_shape),
            "layers": [spec.model_dump(mode="json") for spec in params.layers],
            "seed": params.seed,
            "train": result.config.model_dump(mode="json"),
            "loss_curve": result.loss_curve,
            "n_samples": result.n_samples,
            **(extra or {}),
        }
        sidecar.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        return [weights, sidecar]

    def load(self, name: str, expected_layers: list[LayerSpec] | None = None) -> tuple[ModelParams, dict]:
        """
        Load parameters and sidecar, verifying the architecture hash.

        :param name: str
            Model name within the repository.
        :param expected_layers: list[LayerSpec] | None, optional
            Architecture the caller expects; its hash must match the file's.
        :raises ArchitectureMismatchError:
            If the file's hash differs from its sidecar's layers or from `expected_layers`.
        :raises CorruptArtifactError:
            If a file is missing or truncated.
        :return: tuple[ModelParams, dict]
            Parameters and sidecar metadata.
        """
        weights, sidecar = self.paths(name)
        try:
            data = weights.read_bytes()
            meta = json.loads(sidecar.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as e:
            raise CorruptArtifactError(weights, str(e), log_message=e)

        digest, tensors = decode_tensors(data, weights)
        layers = [LayerSpec.model_validate(spec) for spec in meta["layers"]]
        input_shape = tuple(meta["input_shape"])
        described = architecture_hash(layers, input_shape)
        if digest != described:
            raise ArchitectureMismatchError(weights, digest, described)
        if expected_layers is not None:
            expected = architecture_hash(expected_layers, input_shape)
            if digest != expected:
                raise ArchitectureMismatchError(weights, digest, expected)
        params = ModelParams(
            tensors=tensors, seed=meta["seed"], architecture_hash=digest, input_shape=input_shape, layers=layers
        )
        return params, meta
