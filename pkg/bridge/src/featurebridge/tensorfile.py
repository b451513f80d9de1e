"""Reader/writer for the core tensor file format.

Deliberately self-contained: the bridge talks to the alignment core only
through files and its CLI, so this mirrors the on-disk contract (magic
"OATF", version, dtype code, ndim, uint32 dims, little-endian row-major
payload) without importing the core package.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

MAGIC = b"OATF"
VERSION = 1
_DTYPES = {1: np.dtype("<f4"), 2: np.dtype("<i4")}
_CODES = {"f": 1, "i": 2}


class TensorFormatError(Exception):
    pass


def read_tensor(path) -> np.ndarray:
    blob = Path(path).read_bytes()
    if len(blob) < 8 or blob[:4] != MAGIC or blob[4] != VERSION:
        raise TensorFormatError(f"{path}: not a version-{VERSION} tensor file")
    code, ndim = blob[5], blob[6]
    if code not in _DTYPES:
        raise TensorFormatError(f"{path}: unknown dtype code {code}")
    dims = struct.unpack("<" + "I" * ndim, blob[8 : 8 + 4 * ndim])
    dtype = _DTYPES[code]
    payload = blob[8 + 4 * ndim :]
    if len(payload) != int(np.prod(dims)) * dtype.itemsize:
        raise TensorFormatError(f"{path}: payload length mismatch")
    return np.frombuffer(payload, dtype=dtype).reshape(dims)


def write_tensor(values: np.ndarray, path) -> None:
    values = np.asarray(values)
    code = _CODES[values.dtype.kind]
    disk = np.ascontiguousarray(values.astype(_DTYPES[code], copy=False))
    header = MAGIC + bytes([VERSION, code, disk.ndim, 0])
    header += struct.pack("<" + "I" * disk.ndim, *disk.shape)
    Path(path).write_bytes(header + disk.tobytes())
