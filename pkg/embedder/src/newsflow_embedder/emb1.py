"""Writer (and verification reader) for the EMB1 embedding exchange format.

Layout, all little-endian, no padding: magic bytes "EMB1"; u32 version = 1;
u32 dim; u64 count; count u64 unit ids; count x dim f32 row-major vectors.
This file format is the only contract between the embedder and the pipeline
that consumes its output.
"""

from __future__ import annotations

import struct

import numpy as np

from .errors import FormatError, IOFailure

MAGIC = b"EMB1"
VERSION = 1
NORM_TOL = 1e-5

_HEADER = struct.Struct("<4sIIQ")


def write(path, ids: np.ndarray, data: np.ndarray) -> None:
    ids = np.asarray(ids, dtype=np.uint64)
    data = np.asarray(data, dtype=np.float32)
    if data.ndim != 2:
        raise FormatError("embedding data must be 2-D")
    if len(ids) != data.shape[0]:
        raise FormatError(f"id count {len(ids)} != row count {data.shape[0]}")
    if len(np.unique(ids)) != len(ids):
        raise FormatError("unit ids must be unique")
    if data.shape[0]:
        norms = np.linalg.norm(data.astype(np.float64), axis=1)
        worst = float(np.max(np.abs(norms - 1.0)))
        if worst > NORM_TOL:
            raise FormatError(f"rows must be unit-norm (worst deviation {worst:.3g})")
    try:
        with open(path, "wb") as fh:
            fh.write(_HEADER.pack(MAGIC, VERSION, data.shape[1], data.shape[0]))
            fh.write(np.ascontiguousarray(ids, dtype="<u8").tobytes())
            fh.write(np.ascontiguousarray(data, dtype="<f4").tobytes())
    except OSError as exc:
        raise IOFailure(f"cannot write {path}: {exc}") from None


def read(path) -> tuple[np.ndarray, np.ndarray]:
    """Round-trip reader used by the embedder's own tests."""
    try:
        raw = open(path, "rb").read()
    except OSError as exc:
        raise IOFailure(f"cannot read {path}: {exc}") from None
    if len(raw) < _HEADER.size:
        raise FormatError(f"{path}: truncated header")
    magic, version, dim, count = _HEADER.unpack_from(raw)
    if magic != MAGIC or version != VERSION:
        raise FormatError(f"{path}: bad magic/version")
    expected = _HEADER.size + count * 8 + count * dim * 4
    if len(raw) != expected:
        raise FormatError(f"{path}: size {len(raw)} != expected {expected}")
    ids = np.frombuffer(raw, dtype="<u8", count=count, offset=_HEADER.size).copy()
    data = np.frombuffer(
        raw, dtype="<f4", count=count * dim, offset=_HEADER.size + count * 8
    ).reshape(count, dim).copy()
    return ids, data
