import numpy as np
import pytest

from newsflow import dpmeans, vectors
from newsflow.errors import ConfigError

from conftest import random_unit_vectors


def planted_block(n_clusters, per_cluster, dim, seed, noise=0.04):
    """Well-separated planted clusters; returns (block, true_labels)."""
    rng = np.random.default_rng(seed)
    while True:
        centers = rng.standard_normal((n_clusters, dim))
        centers /= np.linalg.norm(centers, axis=1, keepdims=True)
        gram = centers @ centers.T
        np.fill_diagonal(gram, -1.0)
        if gram.max() < 0.4:
            break
    rows, labels = [], []
    for c in range(n_clusters):
        for _ in range(per_cluster):
            v = centers[c] + noise * rng.standard_normal(dim)
            rows.append(v / np.linalg.norm(v))
            labels.append(c)
    order = rng.permutation(len(rows))
    data = np.array(rows, dtype=np.float64)[order]
    labels = np.array(labels)[order]
    block = vectors.EmbeddingBlock(
        np.arange(len(rows), dtype=np.uint64), vectors.normalize_rows(data)
    )
    return block, labels


def purity(clustering, labels):
    total = 0
    for cl in clustering.clusters:
        if cl.size:
            counts = np.bincount(labels[cl.member_rows])
            total += counts.max()
    return total / len(labels)


class TestFit:
    def test_recovers_planted_clusters(self):
        block, labels = planted_block(7, 40, 32, seed=60)
        c = dpmeans.fit(block, lam=0.8)
        assert c.k == 7
        assert purity(c, labels) == 1.0

    def test_objective_non_increasing(self):
        block, _ = planted_block(5, 60, 16, seed=61)
        c = dpmeans.fit(block, lam=0.75)
        diffs = np.diff(c.objective_trace)
        assert np.all(diffs <= 1e-9)

    def test_converged_points_within_gate(self):
        block, _ = planted_block(6, 50, 24, seed=62)
        c = dpmeans.fit(block, lam=0.8)
        for cl in c.clusters:
            sims = block.data[cl.member_rows].astype(np.float64) @ cl.center.astype(
                np.float64
            )
            assert np.all(sims >= c.lam - 1e-9)

    def test_thread_counts_bit_identical(self):
        block, _ = planted_block(6, 80, 16, seed=63)
        base = dpmeans.fit(block, lam=0.8, threads=1, batch_size=128)
        for threads in (4, 16):
            other = dpmeans.fit(block, lam=0.8, threads=threads, batch_size=128)
            assert other.assignment == base.assignment
            for a, b in zip(base.clusters, other.clusters):
                assert a.center.tobytes() == b.center.tobytes()
            assert other.objective_trace == base.objective_trace

    def test_every_point_assigned_exactly_once(self):
        block, _ = planted_block(4, 30, 8, seed=64)
        c = dpmeans.fit(block, lam=0.7)
        seen = np.concatenate([cl.member_rows for cl in c.clusters])
        assert sorted(seen) == list(range(block.count))
        assert set(c.assignment) == set(int(i) for i in block.ids)

    def test_single_direction_single_cluster(self):
        v = vectors.normalize(np.ones(8))
        block = vectors.EmbeddingBlock(
            np.arange(20, dtype=np.uint64), np.tile(v, (20, 1))
        )
        c = dpmeans.fit(block, lam=0.8)
        assert c.k == 1
        assert c.clusters[0].size == 20

    def test_lam_controls_granularity(self):
        block = vectors.EmbeddingBlock(
            np.arange(200, dtype=np.uint64), random_unit_vectors(200, 8, seed=65)
        )
        loose = dpmeans.fit(block, lam=0.2)
        tight = dpmeans.fit(block, lam=0.95)
        assert tight.k > loose.k

    def test_centers_unit_norm(self):
        block, _ = planted_block(5, 30, 16, seed=66)
        c = dpmeans.fit(block, lam=0.8)
        for cl in c.clusters:
            assert np.linalg.norm(cl.center.astype(np.float64)) == pytest.approx(
                1.0, abs=1e-6
            )

    def test_batch_size_one_still_converges(self):
        block, labels = planted_block(3, 20, 8, seed=67)
        c = dpmeans.fit(block, lam=0.8, batch_size=1)
        assert purity(c, labels) == 1.0

    def test_empty_block_rejected(self):
        empty = vectors.EmbeddingBlock(
            np.empty(0, dtype=np.uint64), np.empty((0, 4), dtype=np.float32)
        )
        with pytest.raises(ConfigError):
            dpmeans.fit(empty)

    def test_bad_lam_rejected(self):
        block, _ = planted_block(2, 5, 8, seed=68)
        for lam in (0.0, 1.0, -0.2):
            with pytest.raises(ConfigError):
                dpmeans.fit(block, lam=lam)

    def test_objective_matches_hand_formula(self):
        block, _ = planted_block(4, 25, 16, seed=69)
        c = dpmeans.fit(block, lam=0.8)
        total = 0.0
        for cl in c.clusters:
            sims = block.data[cl.member_rows].astype(np.float64) @ cl.center.astype(
                np.float64
            )
            total += float(np.sum(1.0 - np.clip(sims, -1.0, 1.0)))
        # Stored centers are float32; the internal trace uses float64, so
        # allow rounding at the float32 scale.
        assert c.objective == pytest.approx(total + (1.0 - 0.8) * c.k, abs=1e-4)


class TestCohesionStats:
    def test_tight_clusters_high_cohesion(self):
        block, _ = planted_block(5, 30, 16, seed=70, noise=0.02)
        c = dpmeans.fit(block, lam=0.8)
        member_mean, center_mean = dpmeans.cohesion_stats(c, block)
        assert member_mean > 0.99
        assert center_mean < 0.5

    def test_single_cluster_has_no_pairwise_stat(self):
        v = vectors.normalize(np.ones(4))
        block = vectors.EmbeddingBlock(np.arange(5, dtype=np.uint64), np.tile(v, (5, 1)))
        c = dpmeans.fit(block, lam=0.5)
        member_mean, center_mean = dpmeans.cohesion_stats(c, block)
        assert member_mean == pytest.approx(1.0, abs=1e-6)
        assert center_mean is None

    def test_member_mean_matches_brute_force(self):
        block, _ = planted_block(4, 20, 8, seed=71)
        c = dpmeans.fit(block, lam=0.8)
        sims = []
        for uid, cid in c.assignment.items():
            row = int(np.flatnonzero(block.ids == uid)[0])
            sims.append(
                vectors.cosine(block.data[row], c.clusters[cid].center)
            )
        member_mean, _ = dpmeans.cohesion_stats(c, block)
        assert member_mean == pytest.approx(np.mean(sims), abs=1e-12)


class TestRepresentative:
    def test_closest_member_wins(self):
        center = vectors.normalize(np.array([1.0, 0.0, 0.0, 0.0]))
        near = vectors.normalize(np.array([1.0, 0.05, 0.0, 0.0]))
        far = vectors.normalize(np.array([1.0, 0.4, 0.0, 0.0]))
        block = vectors.EmbeddingBlock(
            np.array([11, 22], dtype=np.uint64), np.vstack([far, near])
        )
        cluster = dpmeans.TopicCluster(
            cluster_id=0,
            center=center,
            member_rows=np.array([0, 1]),
            member_ids=block.ids,
        )
        assert dpmeans.representative(cluster, block) == 22

    def test_tie_breaks_to_lowest_id(self):
        v = vectors.normalize(np.ones(4))
        block = vectors.EmbeddingBlock(
            np.array([9, 3, 5], dtype=np.uint64), np.tile(v, (3, 1))
        )
        cluster = dpmeans.TopicCluster(
            cluster_id=0, center=v, member_rows=np.arange(3), member_ids=block.ids
        )
        assert dpmeans.representative(cluster, block) == 3
