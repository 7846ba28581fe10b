"""Flat binary tensor files with a fixed 32-byte header.

Layout per record: magic ``KFT1`` (4 bytes), dtype code (u32, 1 =
float64), number of dimensions (u32, at most 5), five u32 dimension
slots, then the row-major float64 payload.  Files may hold several
records back to back (fitted weights store the weight tensor followed by
the per-channel bias vector).
"""

from __future__ import annotations

import struct

import numpy as np

MAGIC = b"KFT1"
DTYPE_FLOAT64 = 1
MAX_DIMS = 5
_HEADER = struct.Struct("<4sII5I")

assert _HEADER.size == 32


def _pack_header(shape: tuple[int, ...]) -> bytes:
    dims = list(shape) + [0] * (MAX_DIMS - len(shape))
    return _HEADER.pack(MAGIC, DTYPE_FLOAT64, len(shape), *dims)


def write_tensors(path, arrays) -> None:
    """Write one record per array, in order."""
    with open(path, "wb") as fh:
        for arr in arrays:
            arr = np.ascontiguousarray(arr, dtype=np.float64)
            if arr.ndim > MAX_DIMS:
                raise ValueError(f"tensor rank {arr.ndim} exceeds {MAX_DIMS}")
            fh.write(_pack_header(arr.shape))
            fh.write(arr.tobytes())


def write_tensor(path, array) -> None:
    write_tensors(path, [array])


def read_tensors(path) -> list[np.ndarray]:
    """Read every record in the file."""
    out = []
    with open(path, "rb") as fh:
        while True:
            head = fh.read(_HEADER.size)
            if not head:
                break
            if len(head) < _HEADER.size:
                raise ValueError("truncated tensor header")
            magic, dtype, ndim, *dims = _HEADER.unpack(head)
            if magic != MAGIC:
                raise ValueError(f"bad magic {magic!r}; not a KFT1 tensor file")
            if dtype != DTYPE_FLOAT64:
                raise ValueError(f"unsupported dtype code {dtype}")
            if ndim > MAX_DIMS:
                raise ValueError(f"bad rank {ndim}")
            shape = tuple(dims[:ndim])
            count = int(np.prod(shape)) if shape else 1
            payload = fh.read(count * 8)
            if len(payload) != count * 8:
                raise ValueError("truncated tensor payload")
            out.append(np.frombuffer(payload, dtype=np.float64).reshape(shape).copy())
    if not out:
        raise ValueError("empty tensor file")
    return out


def read_tensor(path) -> np.ndarray:
    arrays = read_tensors(path)
    if len(arrays) != 1:
        raise ValueError(f"expected a single tensor record, found {len(arrays)}")
    return arrays[0]
