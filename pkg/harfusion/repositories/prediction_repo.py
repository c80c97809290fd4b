from pathlib import Path

import numpy as np
from pydantic import ValidationError

from harfusion.core.exceptions import CorruptArtifactError, InvalidProbabilityError
from harfusion.schemas.fusion import Decision, ProbDist


def _number(value: float) -> str:
    return repr(float(value))


def _fields(line: str, trailing: int | None = None) -> list[str]:
    """
    Split a data line into its fields.

    Tab-separated lines keep spaces inside ids and class names. Other
    whitespace-separated lines are split from the right when the number of
    trailing fields is known, so only the leading id may contain spaces.
    """
    if "\t" in line:
        return [field.strip() for field in line.split("\t")]
    if trailing is None:
        return line.split()
    return line.rsplit(maxsplit=trailing)


class PredictionRepository:
    """
    Repository for probability and decision files.

    Probability files hold optional `# key=value` header lines, then one line
    per sample: the sample id followed by C probabilities, tab separated.
    Decision files hold tab-separated `sample_id class_index class_name tie`
    lines. Sample ids and class names may contain spaces.
    """

    def __init__(self, root: str | Path):
        self.root = Path(root)

    def _path(self, name: str | Path) -> Path:
        path = Path(name)
        return path if path.is_absolute() or path.parent != Path(".") else self.root / path

    def write_probabilities(
        self, name: str | Path, ids: list[str], probs: np.ndarray, header: dict[str, str] | None = None
    ) -> Path:
        path = self._path(name)
        path.parent.mkdir(parents=True, exist_ok=True)
        lines = [f"# {key}={value}" for key, value in (header or {}).items()]
        lines += ["\t".join([sample] + [_number(p) for p in row]) for sample, row in zip(ids, probs)]
        path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")
        return path

    def read_probabilities(self, name: str | Path) -> tuple[list[str], np.ndarray, dict[str, str]]:
        """
        Read and validate a probability file.

        Lines without tabs are split on whitespace. When the header names the
        classes, those lines are split from the right into the class count.

        :raises CorruptArtifactError:
            If the file is missing or rows differ in class count.
        :raises InvalidProbabilityError:
            If a row is not a valid distribution (finite, nonnegative, sums to 1 within 1e-9).
        :return: tuple[list[str], np.ndarray, dict[str, str]]
            Sample ids, N×C probabilities and the header fields.
        """
        path = self._path(name)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as e:
            raise CorruptArtifactError(path, str(e), log_message=e)

        header, ids, rows = {}, [], []
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition("=")
                header[key.strip()] = value.strip()
                continue
            n_classes = len(header["classes"].split(",")) if header.get("classes") else None
            sample, *values = _fields(line, n_classes)
            try:
                dist = ProbDist(p=[float(v) for v in values])
            except (ValueError, ValidationError) as e:
                raise InvalidProbabilityError(sample, str(e).splitlines()[0])
            ids.append(sample)
            rows.append(dist.p)
        if len({len(r) for r in rows}) > 1:
            raise CorruptArtifactError(path, "rows differ in class count")
        matrix = np.array(rows) if rows else np.zeros((0, 0))
        return ids, matrix, header

    def read_table(self, name: str | Path) -> dict[str, np.ndarray]:
        """
        Probability rows keyed by sample id.
        """
        ids, matrix, _ = self.read_probabilities(name)
        return dict(zip(ids, matrix))

    def write_decisions(
        self, name: str | Path, ids: list[str], decisions: list[Decision], class_names: list[str]
    ) -> Path:
        path = self._path(name)
        path.parent.mkdir(parents=True, exist_ok=True)
        lines = [
            "\t".join([sample, str(d.index), class_names[d.index], str(int(d.tie))])
            for sample, d in zip(ids, decisions)
        ]
        path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")
        return path

    def read_decisions(self, name: str | Path) -> list[tuple[str, Decision]]:
        path = self._path(name)
        try:
            lines = path.read_text(encoding="utf-8").splitlines()
        except OSError as e:
            raise CorruptArtifactError(path, str(e), log_message=e)
        out = []
        for line in lines:
            if not line.strip():
                continue
            fields = _fields(line)
            try:
                if len(fields) < 4:
                    raise ValueError(f"expected 4 fields, got {len(fields)}")
                sample, index, tie = fields[0], fields[1], fields[-1]
                out.append((sample, Decision(index=int(index), tie=bool(int(tie)))))
            except (ValueError, ValidationError) as e:
                raise CorruptArtifactError(path, f"bad decision line {line!r}: {str(e).splitlines()[0]}")
        return out
