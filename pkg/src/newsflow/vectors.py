"""Unit-norm embedding storage and exact cosine-similarity search.

Vectors live in float32 blocks aligned with corpus unit ids.  Search is
exact blocked dense dot-product (no approximate index): the downstream
correspondence percentages are set memberships and must be reproducible
bit-for-bit.
"""

from __future__ import annotations

import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import FormatError, IOFailure, NumericError

MAGIC = b"EMB1"
VERSION = 1
NORM_WRITE_TOL = 1e-5
NORM_READ_TOL = 1e-4

# Query-tile rows per task; tiles are independent so results do not depend
# on the thread count.
_TILE = 2048


def normalize(v: np.ndarray) -> np.ndarray:
    """Scale a vector to unit Euclidean norm. Zero vectors are an error."""
    v = np.asarray(v, dtype=np.float64)
    norm = float(np.linalg.norm(v))
    if norm == 0.0:
        raise NumericError("cannot normalize a zero vector")
    return (v / norm).astype(np.float32)


def normalize_rows(data: np.ndarray) -> np.ndarray:
    """Row-wise unit normalization of a 2-D float array."""
    data = np.asarray(data, dtype=np.float64)
    norms = np.linalg.norm(data, axis=1)
    if np.any(norms == 0.0):
        raise NumericError("cannot normalize zero rows")
    return (data / norms[:, None]).astype(np.float32)


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """Dot product of two unit vectors, clamped to [-1, 1]."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise NumericError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return float(np.clip(np.dot(a.astype(np.float64), b.astype(np.float64)), -1.0, 1.0))


@dataclass
class EmbeddingBlock:
    """count x dim float32 unit vectors plus their 64-bit unit ids."""

    ids: np.ndarray  # uint64, shape (count,)
    data: np.ndarray  # float32, shape (count, dim)

    def __post_init__(self):
        self.ids = np.asarray(self.ids, dtype=np.uint64)
        self.data = np.asarray(self.data, dtype=np.float32)
        if self.data.ndim != 2:
            raise FormatError("embedding data must be 2-D")
        if self.ids.shape[0] != self.data.shape[0]:
            raise FormatError(
                f"id count {self.ids.shape[0]} != row count {self.data.shape[0]}"
            )
        if len(np.unique(self.ids)) != len(self.ids):
            raise FormatError("unit ids in an embedding block must be unique")

    @property
    def count(self) -> int:
        return self.data.shape[0]

    @property
    def dim(self) -> int:
        return self.data.shape[1]

    def check_norms(self, tol: float = NORM_WRITE_TOL) -> None:
        if self.count == 0:
            return
        norms = np.linalg.norm(self.data.astype(np.float64), axis=1)
        worst = float(np.max(np.abs(norms - 1.0)))
        if worst > tol:
            raise NumericError(
                f"embedding rows must be unit-norm: worst deviation {worst:.3g}"
            )

    def select(self, mask_or_idx) -> "EmbeddingBlock":
        return EmbeddingBlock(self.ids[mask_or_idx], self.data[mask_or_idx])


def concat_blocks(blocks: list[EmbeddingBlock]) -> EmbeddingBlock:
    if not blocks:
        raise FormatError("cannot concatenate zero blocks")
    return EmbeddingBlock(
        np.concatenate([b.ids for b in blocks]),
        np.vstack([b.data for b in blocks]),
    )


@dataclass
class MatchSet:
    """Per-query thresholded matches, sorted descending by similarity."""

    threshold: float
    indices: list[np.ndarray]  # target row indices per query
    similarities: list[np.ndarray]  # aligned with indices


def _tile_matches(q64, t64, tau, exclude_self, row_offset):
    sims = q64 @ t64.T
    np.clip(sims, -1.0, 1.0, out=sims)
    out = []
    for i in range(sims.shape[0]):
        row = sims[i]
        hit = np.flatnonzero(row >= tau)
        if exclude_self:
            hit = hit[hit != row_offset + i]
        vals = row[hit]
        order = np.lexsort((hit, -vals))
        out.append((hit[order], vals[order]))
    return out


def threshold_search(
    queries: EmbeddingBlock,
    targets: EmbeddingBlock,
    tau: float,
    exclude_self: bool = False,
    threads: int = 1,
) -> MatchSet:
    """All target rows with cosine >= tau, per query row, exactly.

    Dot products accumulate in float64 within each row; output order is
    descending similarity with target-index tiebreak, so results are
    deterministic for any thread count.
    """
    if queries.dim != targets.dim:
        raise NumericError(f"dimension mismatch: {queries.dim} vs {targets.dim}")
    if not (-1.0 < tau <= 1.0):
        raise NumericError(f"threshold must be in (-1, 1], got {tau}")
    if targets.count == 0 or queries.count == 0:
        empty_i = np.empty(0, dtype=np.int64)
        empty_s = np.empty(0, dtype=np.float64)
        return MatchSet(tau, [empty_i] * queries.count, [empty_s] * queries.count)

    q64 = queries.data.astype(np.float64)
    t64 = targets.data.astype(np.float64)
    tiles = [(start, min(start + _TILE, queries.count)) for start in range(0, queries.count, _TILE)]

    def work(bounds):
        start, stop = bounds
        return _tile_matches(q64[start:stop], t64, tau, exclude_self, start)

    if threads > 1 and len(tiles) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, tiles))
    else:
        results = [work(t) for t in tiles]

    indices: list[np.ndarray] = []
    sims: list[np.ndarray] = []
    for chunk in results:
        for hit, vals in chunk:
            indices.append(hit)
            sims.append(vals)
    return MatchSet(tau, indices, sims)


def matched_masks(
    a: EmbeddingBlock,
    b: EmbeddingBlock,
    tau: float,
    threads: int = 1,
) -> tuple[np.ndarray, np.ndarray]:
    """Boolean masks of rows in A (resp. B) with a >= tau match on the other side.

    Both directions come out of one blocked pass over the similarity tiles.
    """
    if a.dim != b.dim:
        raise NumericError(f"dimension mismatch: {a.dim} vs {b.dim}")
    mask_a = np.zeros(a.count, dtype=bool)
    mask_b = np.zeros(b.count, dtype=bool)
    if a.count == 0 or b.count == 0:
        return mask_a, mask_b
    a64 = a.data.astype(np.float64)
    b64 = b.data.astype(np.float64)
    tiles = [(s, min(s + _TILE, a.count)) for s in range(0, a.count, _TILE)]

    def work(bounds):
        start, stop = bounds
        sims = a64[start:stop] @ b64.T
        return start, np.any(sims >= tau, axis=1), np.any(sims >= tau, axis=0)

    if threads > 1 and len(tiles) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, tiles))
    else:
        results = [work(t) for t in tiles]
    for start, hit_a, hit_b in results:
        mask_a[start:start + len(hit_a)] = hit_a
        mask_b |= hit_b
    return mask_a, mask_b


_HEADER = struct.Struct("<4sIIQ")  # magic, version, dim, count


def write_block(path, block: EmbeddingBlock) -> None:
    """Write a block in the EMB1 little-endian format (bit-exact round trip)."""
    block.check_norms(NORM_WRITE_TOL)
    try:
        with open(path, "wb") as fh:
            fh.write(_HEADER.pack(MAGIC, VERSION, block.dim, block.count))
            fh.write(np.ascontiguousarray(block.ids, dtype="<u8").tobytes())
            fh.write(np.ascontiguousarray(block.data, dtype="<f4").tobytes())
    except OSError as exc:
        raise IOFailure(f"cannot write embedding file {path}: {exc}") from None


def read_block(path, renormalize: bool = False) -> EmbeddingBlock:
    """Read an EMB1 file, validating magic, version, length, and norms."""
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise IOFailure(f"cannot read embedding file {path}: {exc}") from None
    if len(raw) < _HEADER.size:
        raise FormatError(f"{path}: truncated header ({len(raw)} bytes)")
    magic, version, dim, count = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    if dim == 0:
        raise FormatError(f"{path}: dimension must be positive")
    expected = _HEADER.size + count * 8 + count * dim * 4
    if len(raw) != expected:
        raise FormatError(
            f"{path}: truncated or oversized file: {len(raw)} bytes, "
            f"header promises {expected}"
        )
    ids = np.frombuffer(raw, dtype="<u8", count=count, offset=_HEADER.size)
    data = np.frombuffer(
        raw, dtype="<f4", count=count * dim, offset=_HEADER.size + count * 8
    ).reshape(count, dim)
    block = EmbeddingBlock(ids.copy(), data.copy())
    if renormalize and count > 0:
        block = EmbeddingBlock(block.ids, normalize_rows(block.data))
    else:
        try:
            block.check_norms(NORM_READ_TOL)
        except NumericError as exc:
            raise FormatError(f"{path}: {exc} (use renormalize to repair)") from None
    return block
