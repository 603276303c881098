"""
Base repository interface for file-backed artifacts.
"""

from abc import ABC, abstractmethod
from pathlib import Path
from typing import Generic, TypeVar, Union

T = TypeVar('T')

PathLike = Union[str, Path]


class FileRepository(ABC, Generic[T]):
    """Reads and writes one artifact type."""

    @abstractmethod
    def save(self, entity: T, path: PathLike) -> Path:
        """Write ``entity`` to ``path``; returns the written path."""
        pass

    @abstractmethod
    def load(self, path: PathLike) -> T:
        """Read an entity back from ``path``."""
        pass

    @staticmethod
    def _prepare(path: PathLike) -> Path:
        target = Path(path)
        target.parent.mkdir(parents=True, exist_ok=True)
        return target
