"""Reader for the IDX tensor format used by MNIST.

Layout: a big-endian uint32 magic whose low byte is the rank (0x08 type
byte = unsigned byte data), one big-endian uint32 per dimension, then the
raw row-major bytes. Gzipped files are accepted.
"""

import gzip
import struct
from pathlib import Path

import numpy as np

from undervolt.harness.errors import DataError

IMAGES_MAGIC = 0x00000803
LABELS_MAGIC = 0x00000801


class BadMagicError(DataError):
    pass


class TruncatedError(DataError):
    pass


def _read_bytes(path) -> bytes:
    path = Path(path)
    if not path.exists():
        raise DataError(f"{path}: no such file")
    raw = path.read_bytes()
    if raw[:2] == b"\x1f\x8b":
        raw = gzip.decompress(raw)
    return raw


def parse_idx(raw: bytes, expected_magic: int | None = None, source: str = "<bytes>") -> np.ndarray:
    if len(raw) < 4:
        raise TruncatedError(f"{source}: truncated at byte offset {len(raw)} while reading magic")
    (magic,) = struct.unpack(">I", raw[:4])
    if expected_magic is not None and magic != expected_magic:
        raise BadMagicError(f"{source}: bad magic 0x{magic:08x}, expected 0x{expected_magic:08x}")
    if magic >> 8 != 0x08:
        raise BadMagicError(f"{source}: bad magic 0x{magic:08x}, not an unsigned-byte IDX file")
    ndim = magic & 0xFF
    header = 4 + 4 * ndim
    if len(raw) < header:
        raise TruncatedError(f"{source}: truncated at byte offset {len(raw)} inside the dimension header")
    dims = struct.unpack(f">{ndim}I", raw[4:header])
    size = int(np.prod(dims)) if dims else 1
    if len(raw) < header + size:
        raise TruncatedError(
            f"{source}: truncated at byte offset {len(raw)}; payload needs {header + size} bytes"
        )
    return np.frombuffer(raw, dtype=np.uint8, count=size, offset=header).reshape(dims)


def load_idx(path, expected_magic: int | None = None) -> np.ndarray:
    return parse_idx(_read_bytes(path), expected_magic, str(path))


def load_images(path) -> np.ndarray:
    """(count, rows, cols) unsigned bytes."""
    return load_idx(path, IMAGES_MAGIC)


def load_labels(path) -> np.ndarray:
    return load_idx(path, LABELS_MAGIC).astype(np.int64)


def write_idx(path, array: np.ndarray):
    array = np.asarray(array, dtype=np.uint8)
    with open(path, "wb") as fh:
        fh.write(struct.pack(">I", 0x0800 | array.ndim))
        fh.write(struct.pack(f">{array.ndim}I", *array.shape))
        fh.write(array.tobytes())
