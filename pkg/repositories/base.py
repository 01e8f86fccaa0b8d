#!/usr/bin/env python3
"""
Base Repository - Common file operations
"""
import os
from contextlib import contextmanager
from pathlib import Path
from typing import Optional, Union

from core.errors import StorageError

PathLike = Union[str, os.PathLike]


class BaseRepository:
    """Base class for all repositories; every OSError is re-raised with its path"""

    def __init__(self, root: Optional[PathLike] = None):
        self.root = Path(root) if root is not None else None

    def resolve(self, path: PathLike) -> Path:
        path = Path(path)
        if self.root is not None and not path.is_absolute():
            return self.root / path
        return path

    @contextmanager
    def open_file(self, path: PathLike, mode: str = "rb", **kwargs):
        """Context manager for a file handle"""
        target = self.resolve(path)
        try:
            if any(flag in mode for flag in "wax"):
                target.parent.mkdir(parents=True, exist_ok=True)
            with open(target, mode, **kwargs) as handle:
                yield handle
        except StorageError:
            raise
        except OSError as e:
            raise StorageError(str(target), e.strerror or str(e)) from e

    def read_bytes(self, path: PathLike) -> bytes:
        with self.open_file(path, "rb") as f:
            return f.read()

    def write_bytes(self, path: PathLike, payload: bytes):
        with self.open_file(path, "wb") as f:
            f.write(payload)

    def read_text(self, path: PathLike) -> str:
        with self.open_file(path, "r", encoding="utf-8") as f:
            return f.read()

    def write_text(self, path: PathLike, text: str):
        with self.open_file(path, "w", encoding="utf-8") as f:
            f.write(text)

    def ensure_dir(self, path: PathLike) -> Path:
        target = self.resolve(path)
        try:
            target.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise StorageError(str(target), e.strerror or str(e)) from e
        return target

    def exists(self, path: PathLike) -> bool:
        return self.resolve(path).exists()
