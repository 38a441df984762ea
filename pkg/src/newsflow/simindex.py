"""Cross-platform correspondence and geometric-mean platform similarity.

A unit of corpus A "corresponds" to corpus B when at least one unit of B has
cosine similarity >= tau with it (tau defaults to 0.8).  Platform similarity
is the geometric mean of the two directional correspondence fractions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .vectors import EmbeddingBlock, concat_blocks, matched_masks

DEFAULT_TAU = 0.8


@dataclass
class CorrespondenceResult:
    fraction_a_in_b: float
    fraction_b_in_a: float
    matched_ids_a: np.ndarray  # unit ids of A with a match in B
    matched_ids_b: np.ndarray
    threshold: float


def correspondence(
    a: EmbeddingBlock,
    b: EmbeddingBlock,
    tau: float = DEFAULT_TAU,
    threads: int = 1,
) -> CorrespondenceResult:
    """Directional matched fractions between two corpora, both in one pass."""
    if a.count == 0 or b.count == 0:
        raise ConfigError("correspondence is undefined for an empty corpus")
    mask_a, mask_b = matched_masks(a, b, tau, threads=threads)
    return CorrespondenceResult(
        fraction_a_in_b=float(np.count_nonzero(mask_a)) / a.count,
        fraction_b_in_a=float(np.count_nonzero(mask_b)) / b.count,
        matched_ids_a=a.ids[mask_a],
        matched_ids_b=b.ids[mask_b],
        threshold=tau,
    )


def platform_similarity(r: CorrespondenceResult) -> float:
    """Geometric mean of the two directional fractions."""
    return math.sqrt(r.fraction_a_in_b * r.fraction_b_in_a)


@dataclass
class PlatformSimilarityMatrix:
    names: list[str]
    values: np.ndarray  # symmetric, diagonal fixed at 1.0
    fractions: dict[tuple[str, str], tuple[float, float]]  # (a, b) -> (a_in_b, b_in_a)

    def sim(self, a: str, b: str) -> float:
        return float(self.values[self.names.index(a), self.names.index(b)])


def similarity_matrix(
    platform_blocks: dict[str, EmbeddingBlock],
    tau: float = DEFAULT_TAU,
    aggregate_map: dict[str, str] | None = None,
    threads: int = 1,
) -> PlatformSimilarityMatrix:
    """All pairwise Sim values between (possibly aggregated) platforms.

    ``aggregate_map`` maps an input platform name to a pseudo-platform name;
    corpora mapping to the same pseudo-platform are concatenated before the
    pairwise pass (e.g. every Telegram channel folded into one "telegram").
    Each unordered pair is computed once, so the matrix is symmetric exactly;
    the diagonal is 1.0 by convention.
    """
    merged: dict[str, list[EmbeddingBlock]] = {}
    for name, block in platform_blocks.items():
        target = aggregate_map.get(name, name) if aggregate_map else name
        merged.setdefault(target, []).append(block)
    names = sorted(merged)
    if len(names) < 2:
        raise ConfigError("similarity_matrix requires at least two platforms")
    blocks = {name: concat_blocks(merged[name]) for name in names}
    for name, block in blocks.items():
        if block.count == 0:
            raise ConfigError(f"platform {name!r} has zero units")

    k = len(names)
    values = np.eye(k)
    fractions: dict[tuple[str, str], tuple[float, float]] = {}
    for i in range(k):
        for j in range(i + 1, k):
            r = correspondence(blocks[names[i]], blocks[names[j]], tau, threads=threads)
            sim = platform_similarity(r)
            values[i, j] = values[j, i] = sim
            fractions[(names[i], names[j])] = (r.fraction_a_in_b, r.fraction_b_in_a)
    return PlatformSimilarityMatrix(names, values, fractions)


def most_similar_channels(
    website: EmbeddingBlock,
    channel_blocks: dict[str, EmbeddingBlock],
    tau: float = DEFAULT_TAU,
    k: int = 3,
    threads: int = 1,
) -> list[tuple[str, float]]:
    """Top-k channels by Sim against one website, ties broken by label."""
    if k <= 0:
        raise ConfigError(f"k must be positive, got {k}")
    scored = []
    for label in sorted(channel_blocks):
        block = channel_blocks[label]
        if block.count == 0:
            raise ConfigError(f"channel {label!r} has zero units")
        scored.append((label, platform_similarity(correspondence(website, block, tau, threads=threads))))
    scored.sort(key=lambda kv: (-kv[1], kv[0]))
    return scored[:k]


def threshold_precision_sweep(
    labeled_pairs: list[tuple[np.ndarray, np.ndarray, bool]],
    thresholds: list[float],
    half_width: float = 0.01,
    sample_n: int = 250,
    seed: int = 0,
) -> list[dict]:
    """Seeded precision estimate per threshold bucket of labeled pairs.

    For each threshold t, up to ``sample_n`` pairs whose cosine lies in
    [t - half_width, t + half_width] are sampled without replacement;
    precision is the fraction labeled same-topic.  Empty buckets yield a row
    with n = 0 and precision None.
    """
    if half_width <= 0:
        raise ConfigError("half_width must be positive")
    sims = np.array(
        [
            float(np.clip(np.dot(np.asarray(u, dtype=np.float64), np.asarray(v, dtype=np.float64)), -1, 1))
            for u, v, _ in labeled_pairs
        ]
    )
    labels = np.array([bool(s) for _, _, s in labeled_pairs])
    rng = np.random.default_rng(seed)
    rows = []
    for t in thresholds:
        in_bucket = np.flatnonzero(np.abs(sims - t) <= half_width)
        if len(in_bucket) == 0:
            rows.append({"threshold": t, "n": 0, "precision": None})
            continue
        if len(in_bucket) > sample_n:
            in_bucket = rng.choice(in_bucket, size=sample_n, replace=False)
        n = len(in_bucket)
        rows.append(
            {
                "threshold": t,
                "n": n,
                "precision": float(np.count_nonzero(labels[in_bucket])) / n,
            }
        )
    return rows
