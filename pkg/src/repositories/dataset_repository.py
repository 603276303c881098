"""
Text formats for probit panels and class similarity matrices.

Panel file::

    RFI-PANELS version=1 n=<n> K=<K> count=<N> seed=<seed|none>
    panel <input_id> <label>
    <n lines of K space-separated floats>
    ...

Similarity file: a ``K=<int>`` header line, then K rows of K floats.
Floats are written in shortest round-trip form, so files reload bit-exactly.
"""

import logging
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np

from ..core.exceptions import DatasetFormatError, ValidationError
from ..core.models import ProbitDataset
from .base import FileRepository, PathLike

logger = logging.getLogger(__name__)

FORMAT_NAME = "RFI-PANELS"
FORMAT_VERSION = 1
EXACT_TOLERANCE = 1e-9
RENORMALIZE_TOLERANCE = 1e-6
SIMILARITY_FILE = "similarity.txt"


def _format_row(row: np.ndarray) -> str:
    return " ".join(repr(float(x)) for x in row)


def _parse_floats(text: str, expected: int, line_number: int,
                  panel_id: Optional[str] = None) -> List[float]:
    parts = text.split()
    if len(parts) != expected:
        raise DatasetFormatError(f"expected {expected} values, found {len(parts)}",
                                 line_number, panel_id)
    try:
        return [float(p) for p in parts]
    except ValueError as e:
        raise DatasetFormatError(f"not a number: {e}", line_number, panel_id) from e


def _parse_header(line: str) -> dict:
    fields = line.split()
    if not fields or fields[0] != FORMAT_NAME:
        raise DatasetFormatError(f"missing '{FORMAT_NAME}' header", 1)
    header = {}
    for field in fields[1:]:
        key, sep, value = field.partition("=")
        if not sep:
            raise DatasetFormatError(f"malformed header field '{field}'", 1)
        header[key] = value
    try:
        version = int(header["version"])
        n, num_classes, count = int(header["n"]), int(header["K"]), int(header["count"])
    except (KeyError, ValueError) as e:
        raise DatasetFormatError(f"incomplete header: {e}", 1) from e
    if version != FORMAT_VERSION:
        raise DatasetFormatError(f"unsupported format version {version}", 1)
    if n < 1 or num_classes < 2 or count < 0:
        raise DatasetFormatError(f"invalid header sizes n={n}, K={num_classes}, count={count}", 1)
    seed_text = header.get("seed", "none")
    seed = None if seed_text == "none" else int(seed_text)
    return {"n": n, "K": num_classes, "count": count, "seed": seed}


def normalize_row(row: np.ndarray, line_number: int, panel_id: str) -> Tuple[np.ndarray, bool]:
    """Validate one row; rows off the simplex by more than 1e-6 are renormalized and flagged."""
    if not np.all(np.isfinite(row)):
        raise DatasetFormatError("non-finite probit entry", line_number, panel_id)
    if np.any(row < 0.0):
        raise DatasetFormatError("negative probit entry", line_number, panel_id)
    total = float(row.sum())
    if total <= 0.0:
        raise DatasetFormatError("probit row sums to zero", line_number, panel_id)
    deviation = abs(total - 1.0)
    if deviation <= EXACT_TOLERANCE:
        return row, False
    return row / total, deviation > RENORMALIZE_TOLERANCE


class DatasetRepository(FileRepository[ProbitDataset]):
    """Panel files plus an optional sibling similarity file."""

    def save(self, dataset: ProbitDataset, path: PathLike) -> Path:
        target = self._prepare(path)
        seed = "none" if dataset.seed is None else str(dataset.seed)
        lines = [
            f"{FORMAT_NAME} version={FORMAT_VERSION} n={dataset.n} K={dataset.num_classes} "
            f"count={len(dataset)} seed={seed}"
        ]
        for index in range(len(dataset)):
            input_id = dataset.input_ids[index]
            if not input_id or any(ch.isspace() for ch in input_id):
                raise ValidationError(f"input id '{input_id}' must be non-empty without whitespace")
            lines.append(f"panel {input_id} {int(dataset.labels[index])}")
            lines.extend(_format_row(row) for row in dataset.probits[index])
        target.write_text("\n".join(lines) + "\n", encoding="utf-8")
        if dataset.similarity is not None:
            save_similarity(dataset.similarity, target.parent / SIMILARITY_FILE)
        logger.info(f"💾 Saved {len(dataset)} panels to {target}")
        return target

    def load(self, path: PathLike, similarity_path: Optional[PathLike] = None) -> ProbitDataset:
        source = Path(path)
        if not source.is_file():
            raise ValidationError(f"dataset file not found: {path}")
        lines = source.read_text(encoding="utf-8").splitlines()
        if not lines:
            raise DatasetFormatError("empty dataset file", 1)
        header = _parse_header(lines[0])
        n, num_classes, count = header["n"], header["K"], header["count"]

        probits = np.empty((count, n, num_classes))
        labels = np.empty(count, dtype=np.int64)
        input_ids: List[str] = []
        renormalized = 0
        cursor = 1
        for index in range(count):
            if cursor >= len(lines):
                raise DatasetFormatError(f"expected {count} panels, found {index}", cursor + 1)
            record = lines[cursor].split()
            if len(record) != 3 or record[0] != "panel":
                raise DatasetFormatError("expected 'panel <input_id> <label>'", cursor + 1)
            panel_id = record[1]
            try:
                label = int(record[2])
            except ValueError as e:
                raise DatasetFormatError(f"bad label '{record[2]}'", cursor + 1, panel_id) from e
            if not 0 <= label < num_classes:
                raise DatasetFormatError(f"label {label} outside [0, {num_classes})",
                                         cursor + 1, panel_id)
            for row_index in range(n):
                line_number = cursor + 2 + row_index
                if line_number > len(lines):
                    raise DatasetFormatError("truncated panel", line_number, panel_id)
                row = np.array(_parse_floats(lines[line_number - 1], num_classes,
                                             line_number, panel_id))
                row, flagged = normalize_row(row, line_number, panel_id)
                renormalized += int(flagged)
                probits[index, row_index] = row
            labels[index] = label
            input_ids.append(panel_id)
            cursor += 1 + n
        if any(line.strip() for line in lines[cursor:]):
            raise DatasetFormatError(f"trailing content after {count} panels", cursor + 1)

        similarity = None
        sibling = Path(similarity_path) if similarity_path else source.parent / SIMILARITY_FILE
        if sibling.is_file():
            similarity = load_similarity(sibling)
            if similarity.shape != (num_classes, num_classes):
                raise ValidationError(
                    f"similarity matrix {sibling} is {similarity.shape[0]}x{similarity.shape[0]}, "
                    f"dataset has K={num_classes}"
                )
        elif similarity_path:
            raise ValidationError(f"similarity file not found: {similarity_path}")

        if renormalized:
            logger.warning(f"⚠️ Renormalized {renormalized} probit rows off the simplex in {source}")
        logger.info(f"📂 Loaded {count} panels (n={n}, K={num_classes}) from {source}")
        return ProbitDataset(probits=probits, labels=labels, input_ids=tuple(input_ids),
                             similarity=similarity, seed=header["seed"],
                             renormalized_rows=renormalized)


def save_dataset(dataset: ProbitDataset, path: PathLike) -> Path:
    return DatasetRepository().save(dataset, path)


def ingest_panels(path: PathLike, similarity_path: Optional[PathLike] = None) -> ProbitDataset:
    """Read a panel file, validating and renormalizing rows."""
    return DatasetRepository().load(path, similarity_path)


def save_similarity(matrix: np.ndarray, path: PathLike) -> Path:
    matrix = np.asarray(matrix, dtype=float)
    target = FileRepository._prepare(path)
    lines = [f"K={matrix.shape[0]}"] + [_format_row(row) for row in matrix]
    target.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return target


def load_similarity(path: PathLike) -> np.ndarray:
    """Read and validate a K x K similarity matrix (symmetric, unit diagonal)."""
    source = Path(path)
    if not source.is_file():
        raise ValidationError(f"similarity file not found: {path}")
    lines = source.read_text(encoding="utf-8").splitlines()
    if not lines or not lines[0].strip().startswith("K="):
        raise DatasetFormatError("similarity file must start with 'K=<int>'", 1)
    try:
        size = int(lines[0].strip()[2:])
    except ValueError as e:
        raise DatasetFormatError(f"bad size header '{lines[0].strip()}'", 1) from e
    if size < 2:
        raise DatasetFormatError(f"similarity size must be at least 2, got {size}", 1)
    rows = [line for line in lines[1:] if line.strip()]
    if len(rows) != size:
        raise DatasetFormatError(f"expected {size} rows, found {len(rows)}", len(lines))
    matrix = np.array([_parse_floats(row, size, i + 2) for i, row in enumerate(rows)])
    if not np.all(np.isfinite(matrix)):
        raise DatasetFormatError("non-finite similarity entry", None)
    if not np.allclose(matrix, matrix.T, atol=1e-9) or not np.allclose(np.diag(matrix), 1.0, atol=1e-9):
        raise ValidationError("similarity matrix must be symmetric with a unit diagonal")
    return matrix
