"""Versioned binary container for named float32 arrays.

Layout (little-endian):
  magic "SWSE" | version uint32 | digest 32 bytes (sha256 of the
  architecture config text) | meta_len uint32 | meta utf8 (key=value
  lines) | n_arrays uint32 | per array: name_len uint32, name utf8,
  rank uint32, dims uint32[rank], raw float32 data.

Used both for model checkpoints and for the preprocessed-tensor cache.
"""

import hashlib
import struct

import numpy as np

from .errors import BadMagicError, TruncatedError, VersionError

MAGIC = b"SWSE"
VERSION = 1


def config_digest(text):
    return hashlib.sha256(text.encode("utf-8")).digest()


def save_arrays(path, arrays, meta, digest):
    """Write named float32 arrays with metadata. Bit-exact round trip."""
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", VERSION))
        assert len(digest) == 32
        f.write(digest)
        meta_text = "\n".join(f"{k}={v}" for k, v in sorted(meta.items()))
        blob = meta_text.encode("utf-8")
        f.write(struct.pack("<I", len(blob)))
        f.write(blob)
        f.write(struct.pack("<I", len(arrays)))
        for name, arr in arrays.items():
            arr = np.ascontiguousarray(arr, dtype=np.float32)
            nb = name.encode("utf-8")
            f.write(struct.pack("<I", len(nb)))
            f.write(nb)
            f.write(struct.pack("<I", arr.ndim))
            f.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
            f.write(arr.tobytes(order="C"))


def _read(f, n, what):
    b = f.read(n)
    if len(b) != n:
        raise TruncatedError(f"checkpoint truncated while reading {what}")
    return b


def load_arrays(path):
    """Read a container; returns (arrays, meta, digest)."""
    with open(path, "rb") as f:
        magic = f.read(4)
        if magic != MAGIC:
            raise BadMagicError(f"{path}: not a checkpoint (bad magic {magic!r})")
        (version,) = struct.unpack("<I", _read(f, 4, "version"))
        if version != VERSION:
            raise VersionError(f"{path}: unsupported version {version}")
        digest = _read(f, 32, "digest")
        (meta_len,) = struct.unpack("<I", _read(f, 4, "meta length"))
        meta_text = _read(f, meta_len, "metadata").decode("utf-8")
        meta = {}
        for line in meta_text.splitlines():
            if line:
                k, _, v = line.partition("=")
                meta[k] = v
        (n_arrays,) = struct.unpack("<I", _read(f, 4, "array count"))
        arrays = {}
        for _ in range(n_arrays):
            (name_len,) = struct.unpack("<I", _read(f, 4, "array name length"))
            name = _read(f, name_len, "array name").decode("utf-8")
            (rank,) = struct.unpack("<I", _read(f, 4, "array rank"))
            dims = struct.unpack(f"<{rank}I", _read(f, 4 * rank, "array dims"))
            count = 1
            for d in dims:
                count *= d
            raw = _read(f, 4 * count, f"array {name!r} data")
            arrays[name] = np.frombuffer(raw, dtype="<f4").reshape(dims).copy()
    return arrays, meta, digest
