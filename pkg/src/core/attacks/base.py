"""
Attack interface and the structural check that keeps corruptions inside the
admissible set: at most f replaced rows, untouched rows bit-equal, every row
on the simplex.
"""

from abc import ABC, abstractmethod
from typing import Optional, Sequence

import numpy as np

from ..exceptions import AttackError, ValidationError
from ..models import AttackKind, CorruptedPanel, ProbitPanel, check_simplex_rows


def adversary_mask(adversary_set: Sequence[int], n: int) -> np.ndarray:
    """Boolean mask of length n marking the adversary slots."""
    indices = np.asarray(sorted(set(int(i) for i in adversary_set)), dtype=np.int64)
    if indices.size and (indices.min() < 0 or indices.max() >= n):
        raise ValidationError(f"adversary indices must lie in [0, {n})")
    mask = np.zeros(n, dtype=bool)
    mask[indices] = True
    return mask


def one_hot(indices: np.ndarray, num_classes: int) -> np.ndarray:
    indices = np.asarray(indices, dtype=np.int64)
    return (indices[..., None] == np.arange(num_classes)).astype(float)


def replace_rows(probits: np.ndarray, mask: np.ndarray, rows: np.ndarray) -> np.ndarray:
    """Copy of ``probits`` with the masked client rows taken from ``rows``."""
    return np.where(mask[..., None], rows, probits)


def check_corruption(original: np.ndarray, corrupted: np.ndarray, mask: np.ndarray,
                     f: Optional[int] = None) -> None:
    """Raise AttackError unless ``corrupted`` is an admissible f-corruption of ``original``."""
    if corrupted.shape != original.shape:
        raise AttackError(f"corrupted shape {corrupted.shape} != original {original.shape}")
    honest = np.broadcast_to(~mask[..., None], original.shape)
    if not np.array_equal(corrupted[honest], original[honest]):
        raise AttackError("an honest client row was modified")
    if f is not None and np.any(mask.sum(axis=-1) > f):
        raise AttackError(f"more than f={f} client rows were replaced")
    try:
        check_simplex_rows(corrupted)
    except ValidationError as e:
        raise AttackError(f"corrupted rows left the simplex: {e}") from e


class BaseAttack(ABC):
    """Replaces the masked client rows of panels shaped (..., n, K)."""

    kind: AttackKind

    @abstractmethod
    def adversary_rows(self, probits: np.ndarray, labels: np.ndarray, mask: np.ndarray,
                       rng: Optional[np.random.Generator] = None) -> np.ndarray:
        """Candidate rows for every slot; only masked slots are used."""
        pass

    def corrupt(self, probits: np.ndarray, labels: np.ndarray, mask: np.ndarray,
                rng: Optional[np.random.Generator] = None) -> np.ndarray:
        probits = np.asarray(probits, dtype=float)
        labels = np.asarray(labels, dtype=np.int64)
        mask = np.asarray(mask, dtype=bool)
        if not mask.any():
            return probits.copy()
        rows = self.adversary_rows(probits, labels, mask, rng)
        corrupted = replace_rows(probits, mask, rows)
        check_corruption(probits, corrupted, mask)
        return corrupted

    def corrupt_panel(self, panel: ProbitPanel, adversary_set: Sequence[int],
                      rng: Optional[np.random.Generator] = None) -> CorruptedPanel:
        mask = adversary_mask(adversary_set, panel.n)
        corrupted = self.corrupt(panel.probits, np.int64(panel.label), mask, rng)
        return CorruptedPanel(
            probits=corrupted,
            adversary_set=tuple(int(i) for i in np.flatnonzero(mask)),
            label=panel.label,
            input_id=panel.input_id,
        )

    def __repr__(self) -> str:
        return f"{self.__class__.__name__}({self.kind.value})"

