"""Self-describing binary tensor files.

Layout (all little-endian):

    bytes 0-3   magic b"OATF"
    byte  4     format version (1)
    byte  5     dtype code: 1 = float32, 2 = int32
    byte  6     number of dimensions
    byte  7     reserved (0)
    next 4*ndim uint32 dimension sizes
    rest        raw values, row-major

Feature tensors are stored as float32 [C, H, W]; label maps as int32
[H, W]; projection matrices as float32 [C, C]. Floats are promoted to
float64 in memory on read and rounded to float32 (round-to-nearest-even)
on write.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import BadHeader, IoFailure, ShapeMismatch, TruncatedPayload, UnsupportedDtype
from .features import FeatureMap, LabelMap

__all__ = [
    "TensorFile",
    "read_raw",
    "write_raw",
    "read_tensor",
    "write_tensor",
    "read_feature_map",
    "write_feature_map",
    "read_label_map",
    "write_label_map",
    "read_matrix",
    "write_matrix",
]

MAGIC = b"OATF"
VERSION = 1
_DTYPE_CODES = {1: np.dtype("<f4"), 2: np.dtype("<i4")}
_CODE_FOR_KIND = {"f": 1, "i": 2}


@dataclass(frozen=True)
class TensorFile:
    """Parsed header plus payload of an on-disk tensor."""

    dtype: np.dtype
    shape: tuple
    values: np.ndarray


def read_raw(path) -> TensorFile:
    path = Path(path)
    try:
        blob = path.read_bytes()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    if len(blob) < 8:
        raise BadHeader(f"{path}: file shorter than fixed header")
    if blob[:4] != MAGIC:
        raise BadHeader(f"{path}: bad magic {blob[:4]!r}")
    version, dtype_code, ndim, reserved = blob[4], blob[5], blob[6], blob[7]
    if version != VERSION:
        raise BadHeader(f"{path}: unsupported version {version}")
    if dtype_code not in _DTYPE_CODES:
        raise UnsupportedDtype(f"{path}: unknown dtype code {dtype_code}")
    if reserved != 0:
        raise BadHeader(f"{path}: nonzero reserved byte")
    header_len = 8 + 4 * ndim
    if len(blob) < header_len:
        raise BadHeader(f"{path}: truncated dimension list")
    dims = struct.unpack("<" + "I" * ndim, blob[8:header_len])
    if ndim == 0 or any(d == 0 for d in dims):
        raise BadHeader(f"{path}: empty shape {dims}")
    dtype = _DTYPE_CODES[dtype_code]
    count = int(np.prod(dims))
    expected = header_len + count * dtype.itemsize
    if len(blob) != expected:
        raise TruncatedPayload(
            f"{path}: payload length {len(blob) - header_len} != "
            f"{count * dtype.itemsize}"
        )
    values = np.frombuffer(blob[header_len:], dtype=dtype).reshape(dims)
    return TensorFile(dtype, tuple(int(d) for d in dims), values)


def write_raw(values: np.ndarray, path) -> None:
    values = np.asarray(values)
    if values.ndim == 0 or values.size == 0:
        raise ShapeMismatch(f"refusing to write empty tensor of shape {values.shape}")
    if not np.all(np.isfinite(values)):
        raise ShapeMismatch("refusing to write non-finite values")
    code = _CODE_FOR_KIND.get(values.dtype.kind)
    if code is None:
        raise UnsupportedDtype(f"cannot serialize dtype {values.dtype}")
    disk = values.astype(_DTYPE_CODES[code], copy=False)
    header = MAGIC + bytes([VERSION, code, disk.ndim, 0])
    header += struct.pack("<" + "I" * disk.ndim, *disk.shape)
    try:
        Path(path).write_bytes(header + np.ascontiguousarray(disk).tobytes())
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def read_feature_map(path) -> FeatureMap:
    tf = read_raw(path)
    if tf.dtype.kind != "f" or len(tf.shape) != 3:
        raise BadHeader(
            f"{path}: expected float32 [C, H, W] feature tensor, "
            f"got {tf.dtype} {tf.shape}"
        )
    c, h, w = tf.shape
    data = tf.values.astype(np.float64).reshape(c, h * w)
    return FeatureMap(c, w, h, data)


def write_feature_map(feature_map: FeatureMap, path) -> None:
    c = feature_map.channels
    h, w = feature_map.height, feature_map.width
    disk = feature_map.data.reshape(c, h, w).astype(np.float32)
    write_raw(disk, path)


def read_label_map(path) -> LabelMap:
    tf = read_raw(path)
    if tf.dtype.kind != "i" or len(tf.shape) != 2:
        raise BadHeader(
            f"{path}: expected int32 [H, W] label map, got {tf.dtype} {tf.shape}"
        )
    h, w = tf.shape
    return LabelMap(w, h, tf.values.reshape(h * w))


def write_label_map(label_map: LabelMap, path) -> None:
    disk = label_map.labels.reshape(label_map.height, label_map.width)
    write_raw(disk.astype(np.int32), path)


def read_matrix(path) -> np.ndarray:
    tf = read_raw(path)
    if tf.dtype.kind != "f" or len(tf.shape) != 2:
        raise BadHeader(
            f"{path}: expected float32 matrix, got {tf.dtype} {tf.shape}"
        )
    return tf.values.astype(np.float64)


def write_matrix(matrix: np.ndarray, path) -> None:
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim != 2:
        raise ShapeMismatch(f"expected a matrix, got shape {matrix.shape}")
    write_raw(matrix.astype(np.float32), path)


def read_tensor(path):
    """Read any tensor file and wrap it per its declared kind.

    float32 3D becomes a FeatureMap, int32 2D a LabelMap; anything else is
    returned as a plain float64/int64 array.
    """
    tf = read_raw(path)
    if tf.dtype.kind == "f" and len(tf.shape) == 3:
        return read_feature_map(path)
    if tf.dtype.kind == "i" and len(tf.shape) == 2:
        return read_label_map(path)
    if tf.dtype.kind == "f":
        return tf.values.astype(np.float64)
    return tf.values.astype(np.int64)


def write_tensor(obj, path) -> None:
    """Inverse of read_tensor for the supported object kinds."""
    if isinstance(obj, FeatureMap):
        write_feature_map(obj, path)
    elif isinstance(obj, LabelMap):
        write_label_map(obj, path)
    else:
        write_raw(np.asarray(obj), path)
