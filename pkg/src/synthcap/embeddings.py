"""Binary container for embedding matrices (the ``SYNE`` format).

A SYNE file is a 17-byte header followed by a raw row-major float32
payload, everything little-endian:

    offset  size  field
    0       4     magic ``b"SYNE"``
    4       4     format version, uint32 (currently 1)
    8       4     row count, uint32
    12      4     dimension, uint32
    16      1     dtype code, uint8 (0 = float32 little-endian)

Matrices are plain ``numpy`` arrays of shape (rows, dim); this module
validates shape and finiteness at the file boundary so downstream code
can assume clean inputs.
"""

from __future__ import annotations

import io
import struct
from typing import BinaryIO, Union

import numpy as np

from .errors import FormatError, ValidationError

MAGIC = b"SYNE"
VERSION = 1
DTYPE_F32 = 0

_HEADER = struct.Struct("<4sIIIB")

PathOrStream = Union[str, BinaryIO]


def _as_matrix(matrix: np.ndarray) -> np.ndarray:
    arr = np.asarray(matrix)
    if arr.ndim != 2:
        raise ValidationError(f"embedding matrix must be 2-D, got shape {arr.shape}")
    if arr.size and not np.all(np.isfinite(arr)):
        raise ValidationError("embedding matrix contains non-finite values")
    return arr


def write_embeddings(matrix: np.ndarray, sink: PathOrStream) -> None:
    """Write ``matrix`` as a SYNE file; byte-identical output for equal input."""
    arr = _as_matrix(matrix).astype("<f4", copy=False)
    rows, dim = arr.shape
    header = _HEADER.pack(MAGIC, VERSION, rows, dim, DTYPE_F32)
    if isinstance(sink, str):
        with open(sink, "wb") as fh:
            fh.write(header)
            fh.write(arr.tobytes(order="C"))
    else:
        sink.write(header)
        sink.write(arr.tobytes(order="C"))


def read_embeddings(source: PathOrStream) -> np.ndarray:
    """Read a SYNE file back into a float32 matrix of the declared shape.

    Raises :class:`FormatError` for bad magic, unsupported version or
    dtype, truncated or oversized payloads, and :class:`ValidationError`
    for non-finite values.
    """
    if isinstance(source, str):
        with open(source, "rb") as fh:
            return read_embeddings(fh)
    raw = source.read(_HEADER.size)
    if len(raw) < _HEADER.size:
        raise FormatError(f"file too short for header: {len(raw)} bytes")
    magic, version, rows, dim, dtype = _HEADER.unpack(raw)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise FormatError(f"unsupported format version {version}")
    if dtype != DTYPE_F32:
        raise FormatError(f"unsupported dtype code {dtype}")
    payload = source.read(rows * dim * 4 + 1)
    if len(payload) < rows * dim * 4:
        raise FormatError(
            f"truncated payload: expected {rows * dim * 4} bytes, got {len(payload)}"
        )
    if len(payload) > rows * dim * 4:
        raise FormatError("trailing data after payload")
    matrix = np.frombuffer(payload, dtype="<f4").reshape(rows, dim)
    if matrix.size and not np.all(np.isfinite(matrix)):
        raise ValidationError("embedding file contains non-finite values")
    return matrix.copy()


def to_bytes(matrix: np.ndarray) -> bytes:
    """SYNE encoding of ``matrix`` as a byte string."""
    buf = io.BytesIO()
    write_embeddings(matrix, buf)
    return buf.getvalue()


def from_bytes(data: bytes) -> np.ndarray:
    """Decode a SYNE byte string."""
    return read_embeddings(io.BytesIO(data))
