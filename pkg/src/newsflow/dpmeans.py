"""Non-parametric spherical clustering of unit-norm embeddings.

A batched DP-Means variant driven by cosine similarity: a point whose best
center similarity falls below the gate ``lam`` seeds a new cluster.  There is
no randomized initialization or reinitialization anywhere, so a fixed input
order yields one and only one clustering, for any thread count.

Within a batch, sub-gate points are resolved in ascending row order at the
batch boundary; centers created there are visible to later batches in the
same pass.  The cost being minimized is

    sum(1 - cos(x, center(x))) + (1 - lam) * k

with the per-cluster penalty fixed at (1 - lam) so that "create when the best
similarity is below lam" is exactly the cost-minimizing move.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, NumericError
from .vectors import EmbeddingBlock


@dataclass
class TopicCluster:
    cluster_id: int
    center: np.ndarray  # float32 unit vector
    member_rows: np.ndarray  # row indices into the fitted block
    member_ids: np.ndarray  # unit ids, aligned with member_rows
    platform_counts: dict = field(default_factory=dict)
    platform_earliest: dict = field(default_factory=dict)

    @property
    def size(self) -> int:
        return len(self.member_rows)


@dataclass
class Clustering:
    clusters: list[TopicCluster]
    assignment: dict[int, int]  # unit_id -> cluster_id
    lam: float
    iterations: int
    objective: float
    objective_trace: list[float]

    @property
    def k(self) -> int:
        return len(self.clusters)


def _batch_sims(x64: np.ndarray, centers: np.ndarray, threads: int) -> np.ndarray:
    if threads <= 1 or x64.shape[0] < 512:
        return x64 @ centers.T
    out = np.empty((x64.shape[0], centers.shape[0]))
    step = (x64.shape[0] + threads - 1) // threads
    spans = [(s, min(s + step, x64.shape[0])) for s in range(0, x64.shape[0], step)]

    def work(span):
        s, e = span
        out[s:e] = x64[s:e] @ centers.T

    with ThreadPoolExecutor(max_workers=threads) as pool:
        list(pool.map(work, spans))
    return out


def fit(
    block: EmbeddingBlock,
    lam: float = 0.8,
    max_iters: int = 50,
    batch_size: int = 2048,
    threads: int = 1,
) -> Clustering:
    """Cluster a block of unit vectors; deterministic for fixed input order.

    Stops when an assignment pass creates no cluster and moves no point, or
    after ``max_iters`` full iterations.
    """
    if block.count == 0:
        raise ConfigError("cannot cluster an empty block")
    if not (0.0 < lam < 1.0):
        raise ConfigError(f"lam must be in (0, 1), got {lam}")
    if batch_size <= 0:
        raise ConfigError("batch_size must be positive")

    n = block.count
    x64 = block.data.astype(np.float64)
    assign = np.full(n, -1, dtype=np.int64)
    centers: list[np.ndarray] = []  # float64 unit vectors, creation order
    trace: list[float] = []
    penalty = 1.0 - lam

    iterations = 0
    for _ in range(max_iters):
        iterations += 1
        changed = False
        created = 0
        for start in range(0, n, batch_size):
            stop = min(start + batch_size, n)
            if centers:
                cmat = np.array(centers)
                sims = _batch_sims(x64[start:stop], cmat, threads)
                np.clip(sims, -1.0, 1.0, out=sims)
                best = np.argmax(sims, axis=1)
                best_val = sims[np.arange(stop - start), best]
                below = np.flatnonzero(best_val < lam)
                above = np.flatnonzero(best_val >= lam)
                for local in above:
                    row = start + local
                    if assign[row] != best[local]:
                        assign[row] = best[local]
                        changed = True
            else:
                below = np.arange(stop - start)

            # Sub-gate points, ascending row order: join a center created in
            # this batch if one is close enough, otherwise seed a new one.
            new_centers = np.empty((len(below), x64.shape[1]))
            new_ids: list[int] = []
            m = 0
            for local in below:
                row = start + local
                target = -1
                if m:
                    sims_new = new_centers[:m] @ x64[row]
                    j = int(np.argmax(sims_new))
                    if sims_new[j] >= lam:
                        target = new_ids[j]
                if target < 0:
                    target = len(centers)
                    centers.append(x64[row].copy())
                    new_centers[m] = x64[row]
                    new_ids.append(target)
                    m += 1
                    created += 1
                if assign[row] != target:
                    assign[row] = target
                    changed = True

        # Update pass: each center becomes the normalized mean of its members;
        # empty clusters are dropped and ids remapped (stable order).
        counts = np.bincount(assign, minlength=len(centers))
        sums = np.zeros((len(centers), x64.shape[1]))
        np.add.at(sums, assign, x64)
        keep = np.flatnonzero(counts > 0)
        remap = np.full(len(centers), -1, dtype=np.int64)
        remap[keep] = np.arange(len(keep))
        new_center_list: list[np.ndarray] = []
        for old in keep:
            mean = sums[old]
            norm = np.linalg.norm(mean)
            if norm > 0:
                new_center_list.append(mean / norm)
            else:
                # Degenerate exact cancellation: keep the previous center.
                new_center_list.append(centers[old])
        centers = new_center_list
        assign = remap[assign]
        if np.any(assign < 0):
            raise NumericError("internal error: unassigned point after update pass")

        cmat = np.array(centers)
        point_sims = np.clip(np.einsum("ij,ij->i", x64, cmat[assign]), -1.0, 1.0)
        trace.append(float(np.sum(1.0 - point_sims)) + penalty * len(centers))

        if not changed and created == 0:
            break

    cmat = np.array(centers)
    clusters = []
    assignment: dict[int, int] = {}
    for cid in range(len(centers)):
        rows = np.flatnonzero(assign == cid)
        clusters.append(
            TopicCluster(
                cluster_id=cid,
                center=cmat[cid].astype(np.float32),
                member_rows=rows,
                member_ids=block.ids[rows],
            )
        )
        for uid in block.ids[rows]:
            assignment[int(uid)] = cid
    return Clustering(
        clusters=clusters,
        assignment=assignment,
        lam=lam,
        iterations=iterations,
        objective=trace[-1],
        objective_trace=trace,
    )


def cohesion_stats(c: Clustering, block: EmbeddingBlock) -> tuple[float, float | None]:
    """(mean member-to-own-center cosine, mean pairwise center cosine).

    The pairwise statistic is None for a single-cluster result.
    """
    if not c.clusters:
        raise ConfigError("clustering has no clusters")
    x64 = block.data.astype(np.float64)
    total = 0.0
    n = 0
    for cl in c.clusters:
        sims = x64[cl.member_rows] @ cl.center.astype(np.float64)
        total += float(np.sum(np.clip(sims, -1.0, 1.0)))
        n += cl.size
    member_mean = total / n

    if c.k < 2:
        return member_mean, None
    cmat = np.array([cl.center for cl in c.clusters], dtype=np.float64)
    gram = np.clip(cmat @ cmat.T, -1.0, 1.0)
    upper = gram[np.triu_indices(c.k, k=1)]
    return member_mean, float(np.mean(upper))


def representative(cluster: TopicCluster, block: EmbeddingBlock) -> int:
    """Member unit id with maximal cosine to the center; ties to lowest id."""
    sims = block.data[cluster.member_rows].astype(np.float64) @ cluster.center.astype(np.float64)
    top = np.flatnonzero(sims == sims.max())
    return int(np.min(cluster.member_ids[top]))
