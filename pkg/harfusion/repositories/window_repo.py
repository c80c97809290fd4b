import io
import json
import zipfile
from pathlib import Path

import numpy as np

from harfusion.core.exceptions import CorruptArtifactError
from harfusion.schemas.imu import Dataset, ImuWindow


FIXED_DATE = (1980, 1, 1, 0, 0, 0)
ARRAYS = ("channels", "labels", "subjects", "t0", "ids", "provenance")


def write_npz(path: Path, arrays: dict[str, np.ndarray]) -> None:
    """
    `.npz` archive with fixed member timestamps, so equal arrays give equal bytes.
    """
    with zipfile.ZipFile(path, "w", compression=zipfile.ZIP_DEFLATED) as archive:
        for name, array in arrays.items():
            buffer = io.BytesIO()
            np.lib.format.write_array(buffer, np.asarray(array), allow_pickle=False)
            info = zipfile.ZipInfo(f"{name}.npy", date_time=FIXED_DATE)
            info.compress_type = zipfile.ZIP_DEFLATED
            archive.writestr(info, buffer.getvalue())


class WindowRepository:
    """
    Repository for windowed datasets: `windows.npz` plus a `windows.json` sidecar.

    The archive holds channels (N×10×T), labels, subjects, t0, window ids and
    provenance tags; the sidecar holds the class and subject catalogs and the
    producing config hash and seed.
    """

    def __init__(self, root: str | Path, name: str = "windows"):
        self.root = Path(root)
        self.archive = self.root / f"{name}.npz"
        self.sidecar = self.root / f"{name}.json"

    def save(self, dataset: Dataset, config_hash: str, seed: int) -> list[Path]:
        self.root.mkdir(parents=True, exist_ok=True)
        windows = dataset.windows
        length = windows[0].length if windows else 0
        arrays = {
            "channels": np.stack([w.channels for w in windows]) if windows else np.zeros((0, 10, length)),
            "labels": np.array([w.label for w in windows], dtype=np.int64),
            "subjects": np.array([w.subject for w in windows], dtype=np.str_),
            "t0": np.array([w.t0 for w in windows], dtype=np.int64),
            "ids": np.array([w.window_id for w in windows], dtype=np.str_),
            "provenance": np.array([w.provenance or "" for w in windows], dtype=np.str_),
        }
        write_npz(self.archive, arrays)
        meta = {
            "class_names": dataset.class_names,
            "subjects": dataset.subjects,
            "config_hash": config_hash,
            "seed": seed,
            "count": len(windows),
        }
        self.sidecar.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        return [self.archive, self.sidecar]

    def load(self) -> tuple[Dataset, dict]:
        """
        Load the dataset and its sidecar metadata.

        :raises CorruptArtifactError:
            If the archive or sidecar is missing, unreadable or inconsistent.
        :return: tuple[Dataset, dict]
            The dataset and the sidecar content.
        """
        try:
            meta = json.loads(self.sidecar.read_text(encoding="utf-8"))
            with np.load(self.archive, allow_pickle=False) as bundle:
                arrays = {name: bundle[name] for name in ARRAYS}
        except (OSError, KeyError, ValueError, zipfile.BadZipFile) as e:
            raise CorruptArtifactError(self.archive, str(e), log_message=e)
        if len({len(a) for a in arrays.values()}) != 1 or len(arrays["ids"]) != meta.get("count"):
            raise CorruptArtifactError(self.archive, "array lengths disagree")
        windows = [
            ImuWindow(
                channels=arrays["channels"][i],
                subject=str(arrays["subjects"][i]),
                label=int(arrays["labels"][i]),
                t0=int(arrays["t0"][i]),
                window_id=str(arrays["ids"][i]),
                provenance=str(arrays["provenance"][i]) or None,
            )
            for i in range(len(arrays["ids"]))
        ]
        dataset = Dataset(windows=windows, class_names=meta["class_names"], subjects=meta["subjects"])
        return dataset, meta
