#!/usr/bin/env python3
"""
Checkpoint Repository - DVAE binary checkpoints

Layout (little endian):
    b"DVAE" | u32 version | u32 metadata length | metadata (UTF-8 JSON)
    | f64 arrays in the order listed under metadata["parameters"]
"""
import json
import logging
import struct
from typing import Dict, Tuple

import numpy as np

from core.errors import FormatError
from .base import BaseRepository, PathLike

logger = logging.getLogger(__name__)

MAGIC = b"DVAE"
VERSION = 1
_PREAMBLE = struct.Struct("<4sII")


class CheckpointRepository(BaseRepository):
    """Repository for model checkpoints"""

    def save(self, path: PathLike, metadata: Dict, params: Dict[str, np.ndarray]):
        """
        Write metadata plus named arrays

        Args:
            path: Checkpoint file path
            metadata: JSON-serialisable description (architecture, prior, seed ...)
            params: Arrays in declaration order
        """
        meta = dict(metadata)
        meta["parameters"] = [{"name": name, "shape": list(np.shape(a))} for name, a in params.items()]
        block = json.dumps(meta, sort_keys=True).encode("utf-8")
        chunks = [_PREAMBLE.pack(MAGIC, VERSION, len(block)), block]
        for array in params.values():
            chunks.append(np.ascontiguousarray(array, dtype="<f8").tobytes())
        self.write_bytes(path, b"".join(chunks))
        logger.info(f"[Checkpoint] saved {len(params)} arrays -> {self.resolve(path)}")

    def load(self, path: PathLike) -> Tuple[Dict, Dict[str, np.ndarray]]:
        """
        Read a checkpoint

        Returns:
            (metadata, params) with params in declaration order
        """
        raw = self.read_bytes(path)
        where = str(self.resolve(path))
        if len(raw) < _PREAMBLE.size:
            raise FormatError("magic", "file shorter than the checkpoint preamble", where)
        magic, version, meta_len = _PREAMBLE.unpack_from(raw)
        if magic != MAGIC:
            raise FormatError("magic", f"expected {MAGIC!r}, found {magic!r}", where)
        if version != VERSION:
            raise FormatError("version", f"unsupported checkpoint version {version}", where)
        start = _PREAMBLE.size
        if len(raw) < start + meta_len:
            raise FormatError("metadata", "truncated metadata block", where)
        try:
            metadata = json.loads(raw[start:start + meta_len].decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as e:
            raise FormatError("metadata", f"invalid metadata JSON: {e}", where) from e
        if not isinstance(metadata, dict) or not isinstance(metadata.get("parameters"), list):
            raise FormatError("metadata", "metadata must list the stored parameters", where)

        offset = start + meta_len
        params: Dict[str, np.ndarray] = {}
        for entry in metadata["parameters"]:
            shape = tuple(int(s) for s in entry["shape"])
            nbytes = 8 * (int(np.prod(shape)) if shape else 1)
            if offset + nbytes > len(raw):
                raise FormatError("payload", f"truncated array '{entry['name']}'", where)
            params[entry["name"]] = np.frombuffer(raw, dtype="<f8", count=nbytes // 8,
                                                  offset=offset).astype(np.float64).reshape(shape)
            offset += nbytes
        if offset != len(raw):
            raise FormatError("payload", f"{len(raw) - offset} trailing bytes after the last array", where)
        return metadata, params
