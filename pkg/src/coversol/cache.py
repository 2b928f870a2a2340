"""On-disk cache of eigendecompositions.

Container layout (all integers and floats little-endian)::

    8 bytes   magic  b"CSOLEIG\\0"
    u32       format version
    u64 u64   rows, cols of the eigenvector matrix
    f64[cols]        eigenvalues
    f64[rows*cols]   eigenvectors, row-major
    32 bytes  sha256 of everything above

A file with the wrong magic, version, size or checksum is rejected as a
whole and never partially read.  Writes go to a temporary file in the same
directory that is then renamed into place.
"""

from __future__ import annotations

import hashlib
import json
import os
import struct
import tempfile
from pathlib import Path

import numpy as np

from .tower import WeightedGraph

MAGIC = b"CSOLEIG\0"
VERSION = 1
_HEADER = struct.Struct("<8sIQQ")


class CacheError(ValueError):
    """A cache file failed validation."""


def cache_key(graph: WeightedGraph, mu: np.ndarray, solver: dict) -> str:
    """Content hash of a level graph, its measure and the solver settings."""
    h = hashlib.sha256()
    h.update(f"coversol-eig-v{VERSION}".encode())
    h.update(np.int64(graph.vertex_count).tobytes())
    h.update(np.ascontiguousarray(graph.edges, dtype="<i8").tobytes())
    h.update(np.ascontiguousarray(graph.weights, dtype="<f8").tobytes())
    h.update(np.ascontiguousarray(mu, dtype="<f8").tobytes())
    h.update(json.dumps(solver, sort_keys=True).encode())
    return h.hexdigest()


def encode(values: np.ndarray, vectors: np.ndarray) -> bytes:
    values = np.ascontiguousarray(values, dtype="<f8")
    vectors = np.ascontiguousarray(vectors, dtype="<f8")
    rows, cols = vectors.shape
    if values.shape != (cols,):
        raise ValueError("one eigenvalue per eigenvector column is required")
    body = _HEADER.pack(MAGIC, VERSION, rows, cols) + values.tobytes() + vectors.tobytes()
    return body + hashlib.sha256(body).digest()


def decode(blob: bytes) -> tuple[np.ndarray, np.ndarray]:
    if len(blob) < _HEADER.size + 32:
        raise CacheError("truncated cache file")
    magic, version, rows, cols = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise CacheError("bad magic header")
    if version != VERSION:
        raise CacheError(f"unsupported cache version {version}")
    expected = _HEADER.size + 8 * (cols + rows * cols) + 32
    if len(blob) != expected:
        raise CacheError(f"cache file has {len(blob)} bytes, expected {expected}")
    body, digest = blob[:-32], blob[-32:]
    if hashlib.sha256(body).digest() != digest:
        raise CacheError("checksum mismatch")
    data = np.frombuffer(body, dtype="<f8", offset=_HEADER.size)
    values = data[:cols].astype(float)
    vectors = data[cols:].reshape(rows, cols).astype(float)
    return values, vectors


def atomic_write(path: Path, data: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class EigenCache:
    """Directory of eigendecomposition containers addressed by content hash."""

    def __init__(self, root: str | os.PathLike):
        self.root = Path(root)

    def path(self, key: str) -> Path:
        return self.root / f"{key}.eig"

    def load(self, key: str) -> tuple[np.ndarray, np.ndarray] | None:
        """Cached pair, or None when missing.  Raises CacheError when invalid."""
        p = self.path(key)
        if not p.exists():
            return None
        return decode(p.read_bytes())

    def store(self, key: str, values: np.ndarray, vectors: np.ndarray) -> Path:
        p = self.path(key)
        atomic_write(p, encode(values, vectors))
        return p
