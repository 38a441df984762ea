"""Batch-embed corpus units and write the EMB1 file the pipeline consumes."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import emb1
from .encoders import DEFAULT_MODEL, Encoder, load_encoder
from .errors import ConfigError, FormatError, IOFailure, ModelError


@dataclass
class EmbedJob:
    units_path: str | Path
    out_path: str | Path
    model: str = DEFAULT_MODEL
    batch_size: int = 64
    expect_dim: int | None = None
    device: str | None = None

    def __post_init__(self):
        if self.batch_size < 1:
            raise ConfigError(f"batch size must be >= 1, got {self.batch_size}")
        if self.expect_dim is not None and self.expect_dim < 1:
            raise ConfigError(f"expect-dim must be >= 1, got {self.expect_dim}")


def load_units(path) -> tuple[list[int], list[str]]:
    """Read the unit list (one JSON object per line, unit_id + text).

    Row order in the output file equals line order here, so the embedding
    file aligns with whatever produced the unit list.
    """
    ids: list[int] = []
    texts: list[str] = []
    seen: set[int] = set()
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise IOFailure(f"cannot read {path}: {exc}") from None
    with fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise FormatError(f"{path}:{lineno}: invalid JSON: {exc}") from None
            for key in ("unit_id", "text"):
                if key not in obj:
                    raise FormatError(f"{path}:{lineno}: missing field {key!r}")
            uid = obj["unit_id"]
            if not isinstance(uid, int) or uid < 0:
                raise FormatError(f"{path}:{lineno}: unit_id must be a nonnegative integer")
            if uid in seen:
                raise FormatError(f"{path}:{lineno}: duplicate unit_id {uid}")
            seen.add(uid)
            ids.append(uid)
            texts.append(str(obj["text"]))
    return ids, texts


def _normalize_rows(data: np.ndarray) -> np.ndarray:
    data = np.asarray(data, dtype=np.float64)
    norms = np.linalg.norm(data, axis=1)
    if np.any(norms == 0.0):
        raise ModelError("encoder produced a zero vector")
    return (data / norms[:, None]).astype(np.float32)


def embed_corpus(job: EmbedJob, encoder: Encoder | None = None) -> int:
    """Embed every unit and write the EMB1 file; returns the row count.

    Vectors are unit-normalized here, at the format boundary, regardless of
    what the encoder returns.
    """
    ids, texts = load_units(job.units_path)
    if encoder is None:
        encoder = load_encoder(job.model, device=job.device)
    if job.expect_dim is not None and encoder.dim != job.expect_dim:
        raise ConfigError(
            f"model dimension {encoder.dim} != --expect-dim {job.expect_dim}"
        )

    if not ids:
        emb1.write(
            job.out_path,
            np.empty(0, dtype=np.uint64),
            np.empty((0, encoder.dim), dtype=np.float32),
        )
        return 0

    chunks = []
    for start in range(0, len(texts), job.batch_size):
        batch = texts[start:start + job.batch_size]
        vecs = np.asarray(encoder.encode(batch))
        if vecs.ndim != 2 or vecs.shape[0] != len(batch):
            raise ModelError(
                f"encoder returned shape {vecs.shape} for a batch of {len(batch)}"
            )
        if vecs.shape[1] != encoder.dim:
            raise ModelError(
                f"encoder returned dim {vecs.shape[1]}, declared {encoder.dim}"
            )
        chunks.append(vecs.astype(np.float64))
    data = _normalize_rows(np.vstack(chunks))
    emb1.write(job.out_path, np.array(ids, dtype=np.uint64), data)
    return len(ids)
