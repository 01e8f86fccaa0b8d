#!/usr/bin/env python3
"""
Dataset Repository - NPY v1.0 and IDX ingestion, NPY writing

NPY v1.0:
    "\\x93NUMPY" | major=1 | minor=0 | u16 LE header length | header literal
    {'descr': ..., 'fortran_order': False, 'shape': (...)} | row-major payload
IDX (big endian):
    0x00 0x00 | dtype (0x08 = u8) | ndims | ndims x u32 extents | payload
"""
import ast
import logging
import struct
from typing import Optional

import numpy as np

from core.errors import FormatError
from .base import BaseRepository, PathLike

logger = logging.getLogger(__name__)

NPY_MAGIC = b"\x93NUMPY"
NPY_DTYPES = {
    "|b1": np.dtype("?"),
    "|u1": np.dtype("u1"),
    "<f4": np.dtype("<f4"),
    "<f8": np.dtype("<f8"),
}
IDX_U8 = 0x08


class DatasetRepository(BaseRepository):
    """Repository for observation matrices on disk"""

    # ---------- NPY ----------

    def read_npy(self, path: PathLike, flatten: bool = False) -> np.ndarray:
        """
        Decode an NPY v1.0 file to float64

        Args:
            path: File path
            flatten: Collapse trailing dimensions into one (n, P) matrix

        Returns:
            Array with the stored shape (or (n, P) when flattened)
        """
        raw = self.read_bytes(path)
        where = str(self.resolve(path))
        if raw[:6] != NPY_MAGIC:
            raise FormatError("magic", "not an NPY file", where)
        if len(raw) < 10:
            raise FormatError("header", "truncated preamble", where)
        major, minor = raw[6], raw[7]
        if (major, minor) != (1, 0):
            raise FormatError("version", f"unsupported NPY version {major}.{minor}", where)
        (header_len,) = struct.unpack("<H", raw[8:10])
        if len(raw) < 10 + header_len:
            raise FormatError("header", "truncated header", where)
        try:
            header = ast.literal_eval(raw[10:10 + header_len].decode("latin1").strip())
        except (ValueError, SyntaxError, UnicodeDecodeError) as e:
            raise FormatError("header", f"unparseable header literal: {e}", where) from e
        if not isinstance(header, dict) or set(header) != {"descr", "fortran_order", "shape"}:
            raise FormatError("header", "header must have exactly descr, fortran_order, shape", where)

        descr = header["descr"]
        if descr not in NPY_DTYPES:
            raise FormatError("descr", f"unsupported dtype '{descr}', expected one of {sorted(NPY_DTYPES)}", where)
        if header["fortran_order"] is not False:
            raise FormatError("fortran_order", "only C-order arrays are supported", where)
        shape = header["shape"]
        if not isinstance(shape, tuple) or not all(isinstance(s, int) and s >= 0 for s in shape):
            raise FormatError("shape", f"invalid shape {shape!r}", where)

        dtype = NPY_DTYPES[descr]
        count = int(np.prod(shape)) if shape else 1
        payload = raw[10 + header_len:]
        if len(payload) != count * dtype.itemsize:
            raise FormatError("payload", f"expected {count * dtype.itemsize} bytes, found {len(payload)}", where)

        array = np.frombuffer(payload, dtype=dtype, count=count).astype(np.float64).reshape(shape)
        if flatten and array.ndim > 2:
            array = array.reshape(array.shape[0], -1)
        return array

    def write_npy(self, path: PathLike, array: np.ndarray, descr: Optional[str] = None):
        """Write an NPY v1.0 C-order file with one of the supported dtypes"""
        array = np.asarray(array)
        if descr is None:
            descr = {"b": "|b1", "u": "|u1"}.get(array.dtype.kind, "<f4" if array.dtype == np.float32 else "<f8")
        if descr not in NPY_DTYPES:
            raise FormatError("descr", f"unsupported dtype '{descr}'")
        data = np.ascontiguousarray(array.astype(NPY_DTYPES[descr]))
        literal = "{'descr': '%s', 'fortran_order': False, 'shape': %r, }" % (descr, tuple(data.shape))
        pad = 64 - (10 + len(literal) + 1) % 64
        header = (literal + " " * (pad % 64) + "\n").encode("latin1")
        self.write_bytes(path, NPY_MAGIC + bytes([1, 0]) + struct.pack("<H", len(header)) + header + data.tobytes())
        logger.info(f"[Dataset] wrote {data.shape} {descr} -> {self.resolve(path)}")

    # ---------- IDX ----------

    def _read_idx_raw(self, path: PathLike) -> np.ndarray:
        raw = self.read_bytes(path)
        where = str(self.resolve(path))
        if len(raw) < 4 or raw[0] != 0 or raw[1] != 0:
            raise FormatError("magic", "IDX files start with two zero bytes", where)
        dtype, ndims = raw[2], raw[3]
        if dtype != IDX_U8:
            raise FormatError("dtype", f"unsupported IDX dtype 0x{dtype:02x}, only 0x08 (u8)", where)
        if ndims < 1:
            raise FormatError("ndims", "IDX needs at least one dimension", where)
        if len(raw) < 4 + 4 * ndims:
            raise FormatError("dims", "truncated dimension table", where)
        dims = struct.unpack(">" + "I" * ndims, raw[4:4 + 4 * ndims])
        payload = raw[4 + 4 * ndims:]
        count = int(np.prod(dims))
        if len(payload) != count:
            raise FormatError("payload", f"size mismatch: dims {dims} need {count} bytes, found {len(payload)}", where)
        return np.frombuffer(payload, dtype=np.uint8).reshape(dims)

    def read_idx(self, path: PathLike) -> np.ndarray:
        """u8 IDX payload scaled to [0, 1], flattened to (count, P)"""
        raw = self._read_idx_raw(path)
        return raw.reshape(raw.shape[0], -1).astype(np.float64) / 255.0

    def read_idx_labels(self, path: PathLike) -> np.ndarray:
        """One-dimensional IDX file of integer labels"""
        raw = self._read_idx_raw(path)
        if raw.ndim != 1:
            raise FormatError("ndims", f"label files are one-dimensional, found {raw.ndim}", str(self.resolve(path)))
        return raw.astype(np.int64)


def resize_nearest(images: np.ndarray, source: int, target: int) -> np.ndarray:
    """Nearest-neighbour resize of flattened square images (n, source²) -> (n, target²)"""
    images = np.asarray(images, dtype=np.float64)
    if images.ndim != 2 or images.shape[1] != source * source:
        raise FormatError("shape", f"expected (n, {source * source}) images, got {images.shape}")
    index = (np.arange(target) * source) // target
    square = images.reshape(-1, source, source)[:, index][:, :, index]
    return square.reshape(images.shape[0], target * target)

