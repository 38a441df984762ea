"""Encoder backends behind a minimal protocol.

An encoder maps a list of strings to a (n, dim) float array.  The adapter
treats the model identifier as an opaque pass-through: anything not claimed
by a built-in scheme is handed to sentence-transformers unchanged, so
swapping encoders never requires touching the consuming pipeline.
"""

from __future__ import annotations

import hashlib
import re
from typing import Protocol

import numpy as np

from .errors import ModelError

DEFAULT_MODEL = "sentence-transformers/paraphrase-multilingual-mpnet-base-v2"


class Encoder(Protocol):
    dim: int

    def encode(self, texts: list[str]) -> np.ndarray: ...


class HashingEncoder:
    """Deterministic offline encoder: hashed bag-of-words with token counts.

    No model download, no randomness, identical output for identical text;
    texts sharing vocabulary land near each other.  Useful for smoke tests
    and air-gapped runs, not for production-quality semantics.
    """

    _TOKEN_RE = re.compile(r"\w+", re.UNICODE)

    def __init__(self, dim: int = 256):
        if dim < 8:
            raise ModelError(f"hashing encoder dim must be >= 8, got {dim}")
        self.dim = dim

    def encode(self, texts: list[str]) -> np.ndarray:
        out = np.zeros((len(texts), self.dim), dtype=np.float64)
        for i, text in enumerate(texts):
            for token in self._TOKEN_RE.findall(text.lower()):
                digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest()
                value = int.from_bytes(digest, "little")
                bucket = value % self.dim
                sign = 1.0 if (value >> 63) & 1 else -1.0
                out[i, bucket] += sign
            if not out[i].any():
                out[i, 0] = 1.0  # empty text still needs a direction
        return out


class SentenceTransformerEncoder:
    """Thin wrapper over a sentence-transformers model."""

    def __init__(self, model_id: str, device: str | None = None):
        try:
            from sentence_transformers import SentenceTransformer
        except ImportError as exc:
            raise ModelError(f"sentence-transformers is not installed: {exc}") from None
        try:
            self._model = SentenceTransformer(model_id, device=device)
        except Exception as exc:
            raise ModelError(f"cannot load model {model_id!r}: {exc}") from None
        dim = self._model.get_sentence_embedding_dimension()
        if not dim:
            raise ModelError(f"model {model_id!r} does not declare a dimension")
        self.dim = int(dim)

    def encode(self, texts: list[str]) -> np.ndarray:
        return np.asarray(
            self._model.encode(texts, convert_to_numpy=True, show_progress_bar=False)
        )


def load_encoder(model_id: str, device: str | None = None) -> Encoder:
    """Resolve a model identifier to an encoder backend.

    ``hashing/<dim>`` selects the offline hashing encoder; anything else is
    passed verbatim to sentence-transformers.
    """
    if model_id.startswith("hashing/"):
        try:
            dim = int(model_id.split("/", 1)[1])
        except ValueError:
            raise ModelError(f"bad hashing encoder id {model_id!r}") from None
        return HashingEncoder(dim)
    return SentenceTransformerEncoder(model_id, device=device)
