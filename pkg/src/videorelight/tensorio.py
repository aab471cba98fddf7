"""Raw binary tensor container used by dataset samples and checkpoints.

File layout: 8-byte magic ``VRLTENS1``, uint32 rank, one uint32 per
dimension, then the C-order little-endian float32 payload.
"""

from __future__ import annotations

import struct
import zlib
from pathlib import Path

import numpy as np

MAGIC = b"VRLTENS1"
MAX_RANK = 8
TENSOR_SUFFIX = ".vrt"


class TensorIOError(Exception):
    """Base class for container failures."""


class BadHeaderError(TensorIOError):
    """Magic or rank field is corrupt."""


class ShapeMismatchError(TensorIOError):
    """Header shape disagrees with the payload or with the expected shape."""


class TruncatedPayloadError(TensorIOError):
    """File ends before the header-declared payload does."""


def tensor_to_bytes(arr: np.ndarray) -> bytes:
    arr = np.ascontiguousarray(arr, dtype="<f4")
    if arr.ndim > MAX_RANK:
        raise ValueError(f"rank {arr.ndim} exceeds container limit {MAX_RANK}")
    header = MAGIC + struct.pack("<I", arr.ndim)
    header += struct.pack(f"<{arr.ndim}I", *arr.shape)
    return header + arr.tobytes(order="C")


def tensor_from_bytes(data: bytes, expect_shape: tuple[int, ...] | None = None) -> np.ndarray:
    if len(data) < len(MAGIC) + 4:
        raise TruncatedPayloadError("file shorter than the fixed header")
    if data[: len(MAGIC)] != MAGIC:
        raise BadHeaderError(f"bad magic {data[:len(MAGIC)]!r}")
    (rank,) = struct.unpack_from("<I", data, len(MAGIC))
    if rank > MAX_RANK:
        raise BadHeaderError(f"implausible rank {rank}")
    shape_off = len(MAGIC) + 4
    if len(data) < shape_off + 4 * rank:
        raise TruncatedPayloadError("file ends inside the shape header")
    shape = struct.unpack_from(f"<{rank}I", data, shape_off)
    if expect_shape is not None and tuple(shape) != tuple(expect_shape):
        raise ShapeMismatchError(f"header shape {shape} != expected {tuple(expect_shape)}")
    payload = data[shape_off + 4 * rank :]
    n = int(np.prod(shape, dtype=np.int64)) if rank else 1
    if len(payload) < 4 * n:
        raise TruncatedPayloadError(f"payload holds {len(payload)} bytes, header promises {4 * n}")
    if len(payload) > 4 * n:
        raise ShapeMismatchError(f"payload holds {len(payload)} bytes beyond header shape {shape}")
    arr = np.frombuffer(payload, dtype="<f4", count=n).reshape(shape)
    return arr.copy()


def write_tensor(path: str | Path, arr: np.ndarray) -> int:
    """Write ``arr`` to ``path``; returns the CRC32 of the file bytes."""
    data = tensor_to_bytes(arr)
    Path(path).write_bytes(data)
    return zlib.crc32(data)


def read_tensor(path: str | Path, expect_shape: tuple[int, ...] | None = None,
                expect_crc: int | None = None) -> np.ndarray:
    data = Path(path).read_bytes()
    # parse first so truncation/corruption surface as their dedicated errors
    arr = tensor_from_bytes(data, expect_shape=expect_shape)
    if expect_crc is not None and zlib.crc32(data) != expect_crc:
        raise TensorIOError(f"CRC mismatch for {path}")
    return arr
