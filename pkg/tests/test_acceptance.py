"""Acceptance gate: one criterion per test, one printed pass/fail line each.

Each criterion states a property the pipeline must satisfy on synthetic
fixtures whose ground truth is known by construction.  The printed lines
bypass pytest's capture so a full run always shows the scoreboard.
"""

import contextlib
import math
import os
import sys
import time

import numpy as np
import pytest

from newsflow import dpmeans, hawkes, simindex, topicflow, vectors

import e2e_util
from conftest import random_unit_vectors
from test_topicflow import (
    hand_fixture,
    oracle_percent_first_on,
    shift,
    timeline,
)


@contextlib.contextmanager
def criterion(name):
    try:
        yield
    except BaseException:
        _record(f"[FAIL] {name}")
        raise
    _record(f"[PASS] {name}")


def _record(line):
    import conftest

    conftest.ACCEPTANCE_RESULTS.append(line)
    print(line, file=sys.__stdout__, flush=True)


def test_similarity_oracle_equivalence():
    with criterion("similarity oracle equivalence (1000 x 64-d, exact match sets)"):
        started = time.perf_counter()
        tau = 0.8
        n, dim = 1000, 64
        queries = vectors.EmbeddingBlock(
            np.arange(n, dtype=np.uint64), random_unit_vectors(n, dim, seed=100)
        )
        targets = vectors.EmbeddingBlock(
            np.arange(n, dtype=np.uint64), random_unit_vectors(n, dim, seed=101)
        )

        # Scalar oracle: one dot product per pair, no tiling.
        q64 = queries.data.astype(np.float64)
        t64 = targets.data.astype(np.float64)
        oracle_sets = []
        oracle_sims = np.empty((n, n))
        for i in range(n):
            row = np.array([float(np.dot(q64[i], t64[j])) for j in range(n)])
            oracle_sims[i] = row
            oracle_sets.append(set(np.flatnonzero(row >= tau)))

        # Guard band: the fixture must keep every pair >= 1e-5 away from tau.
        assert np.min(np.abs(oracle_sims - tau)) >= 1e-5

        got = vectors.threshold_search(queries, targets, tau, threads=4)
        for i in range(n):
            assert set(got.indices[i]) == oracle_sets[i]
            for idx, sim in zip(got.indices[i], got.similarities[i]):
                assert abs(sim - oracle_sims[i, idx]) <= 1e-5

        r = simindex.correspondence(queries, targets, tau)
        frac_a = sum(1 for s in oracle_sets if s) / n
        matched_cols = set().union(*oracle_sets)
        assert r.fraction_a_in_b == frac_a
        assert r.fraction_b_in_a == len(matched_cols) / n

        elapsed = time.perf_counter() - started
        assert elapsed < 10.0, f"ran {elapsed:.1f}s, budget 10s"


def test_gmean_law():
    with criterion("geometric-mean similarity law (10,000 fraction pairs)"):
        rng = np.random.default_rng(102)
        for _ in range(10_000):
            p, q = rng.random(2)
            ab = simindex.platform_similarity(
                simindex.CorrespondenceResult(p, q, None, None, 0.8)
            )
            ba = simindex.platform_similarity(
                simindex.CorrespondenceResult(q, p, None, None, 0.8)
            )
            assert abs(ab - math.sqrt(p * q)) <= 1e-12
            assert abs(ab - ba) <= 1e-12
            assert min(p, q) - 1e-12 <= ab <= max(p, q) + 1e-12


def test_dpmeans_recovery():
    with criterion("DP-Means recovery (7 planted clusters, thread-invariant)"):
        started = time.perf_counter()
        rng = np.random.default_rng(103)
        dim, k_true = 32, 7
        while True:
            centers = rng.standard_normal((k_true, dim))
            centers /= np.linalg.norm(centers, axis=1, keepdims=True)
            gram = centers @ centers.T
            np.fill_diagonal(gram, -1.0)
            if gram.max() < 0.3:
                break
        rows, labels = [], []
        for c in range(k_true):
            for _ in range(300 // k_true + 1):
                v = centers[c] + 0.04 * rng.standard_normal(dim)
                rows.append(v / np.linalg.norm(v))
                labels.append(c)
        rows, labels = rows[:300], np.array(labels[:300])
        order = rng.permutation(300)
        data = np.array(rows)[order]
        labels = labels[order]
        block = vectors.EmbeddingBlock(
            np.arange(300, dtype=np.uint64), vectors.normalize_rows(data)
        )

        # Fixture sanity: tight within groups, separated across groups.
        sims = block.data.astype(np.float64) @ block.data.astype(np.float64).T
        same = labels[:, None] == labels[None, :]
        assert sims[same].min() > 0.9
        assert sims[~same].max() < 0.5

        fit = dpmeans.fit(block, lam=0.8, threads=1)
        assert fit.k == k_true
        purity = sum(
            np.bincount(labels[cl.member_rows]).max() for cl in fit.clusters
        ) / 300
        assert purity == 1.0
        assert np.all(np.diff(fit.objective_trace) <= 1e-9)
        for cl in fit.clusters:
            member_sims = block.data[cl.member_rows].astype(
                np.float64
            ) @ cl.center.astype(np.float64)
            assert np.all(member_sims >= fit.lam - 1e-9)

        for threads in (4, 16):
            other = dpmeans.fit(block, lam=0.8, threads=threads)
            assert other.assignment == fit.assignment
            for a, b in zip(fit.clusters, other.clusters):
                assert a.center.tobytes() == b.center.tobytes()

        elapsed = time.perf_counter() - started
        assert elapsed < 5.0, f"ran {elapsed:.1f}s, budget 5s"


def test_flow_logic():
    with criterion("flow logic (hand fixture, enumeration oracle, +37-day shift)"):
        tls = hand_fixture()
        sources = {"ch_a", "ch_b", "ch_x"}

        for exclusions in (frozenset(), {"ch_x"}):
            got = topicflow.percent_first_on("site", sources, tls, exclusions)
            want = oracle_percent_first_on("site", sources, tls, exclusions)
            assert got == want

        # Exhaustive oracle for tied first-posted credit.
        def oracle_first_channels(target, channels, timelines):
            credit = {ch: 0.0 for ch in channels}
            units = 0
            for tl in timelines:
                if target not in tl.earliest:
                    continue
                units += tl.counts[target]
                ahead = {
                    ch: tl.earliest[ch]
                    for ch in channels
                    if ch in tl.earliest
                    and (tl.earliest[target] - tl.earliest[ch]).days >= 1
                }
                if not ahead:
                    continue
                best = min(ahead.values())
                tied = [ch for ch, d in ahead.items() if d == best]
                for ch in tied:
                    credit[ch] += tl.counts[target] / len(tied)
            return sorted(
                ((ch, 100.0 * c / units) for ch, c in credit.items()),
                key=lambda kv: (-kv[1], kv[0]),
            )

        got_rank = topicflow.top_first_posting_channels(
            "site", sources, tls, k=len(sources)
        )
        assert got_rank == oracle_first_channels("site", sources, tls)

        # Exhaustive oracle for the spread curve.
        def oracle_spread(origin, timelines, horizon, universe):
            curves = []
            for tl in timelines:
                if origin not in tl.earliest:
                    continue
                start = tl.earliest[origin]
                if any(
                    d <= start for k, d in tl.earliest.items() if k != origin
                ):
                    continue
                curve = []
                for offset in range(horizon + 1):
                    cutoff = start + __import__("datetime").timedelta(days=offset)
                    reached = {
                        k
                        for k, d in tl.earliest.items()
                        if k != origin and k in universe and d <= cutoff
                    }
                    curve.append(len(reached))
                curves.append(curve)
            if not curves:
                return []
            return [
                sum(c[i] for c in curves) / len(curves) for i in range(horizon + 1)
            ]

        universe = sources | {"site"}
        for origin in sorted(universe):
            got_curve = topicflow.spread_curve(origin, tls, 10, universe)
            assert got_curve == oracle_spread(origin, tls, 10, universe)

        # Shifting every date by +37 days changes nothing.
        shifted = shift(tls, 37)
        assert topicflow.percent_first_on(
            "site", sources, shifted
        ) == topicflow.percent_first_on("site", sources, tls)
        assert topicflow.top_first_posting_channels(
            "site", sources, shifted
        ) == got_rank
        for origin in sorted(universe):
            assert topicflow.spread_curve(
                origin, shifted, 10, universe
            ) == topicflow.spread_curve(origin, tls, 10, universe)


def _hawkes_truth_model():
    K, L = 3, 14
    weights = np.zeros((K, K))
    weights[0, 1] = 0.8
    impulses = np.zeros((K, K, L))
    decay = np.exp(-0.6 * np.arange(L))
    impulses[:, :] = decay / decay.sum()
    return hawkes.HawkesModel(
        background=np.array([2.0, 1.0, 1.5]), weights=weights, impulses=impulses
    )


def test_hawkes_recovery():
    with criterion("Hawkes recovery (strong edge 0.8, T = 2000, iters = 500)"):
        started = time.perf_counter()
        model = _hawkes_truth_model()
        em, truth = hawkes.simulate(model, 2000, seed=104, return_parents=True)
        # Sparser weight prior than the pipeline default: background and weak
        # self-excitation trade off in this model, and the default prior mean
        # of 0.2 lets self-excitation absorb ~10% of a constant-rate stream.
        fit, parents = hawkes.gibbs_fit(
            em, priors=hawkes.Priors(nu=30.0), L=14, iters=500, burn_in=250,
            seed=105,
        )

        assert abs(fit.weights[0, 1] - 0.8) / 0.8 <= 0.30
        zero_mask = np.ones((3, 3), dtype=bool)
        zero_mask[0, 1] = False
        assert np.all(fit.weights[zero_mask] < 0.1)

        recon = parents.background + parents.pairs.sum(axis=0)
        assert np.max(np.abs(recon - parents.totals)) <= 1e-6

        rep = hawkes.influence_percent(parents)
        col_sum = rep.background_pct + rep.self_pct + rep.cross.sum(axis=0)
        assert np.max(np.abs(col_sum - 100.0)) <= 1e-6

        true_rep = hawkes.influence_percent(truth)
        assert np.max(np.abs(rep.cross - true_rep.cross)) <= 10.0
        assert np.max(np.abs(rep.background_pct - true_rep.background_pct)) <= 10.0
        assert np.max(np.abs(rep.self_pct - true_rep.self_pct)) <= 10.0

        elapsed = time.perf_counter() - started
        assert elapsed < 60.0, f"ran {elapsed:.1f}s, budget 60s"


def test_hawkes_null():
    with criterion("Hawkes null (independent streams stay uncoupled)"):
        model = hawkes.HawkesModel(
            background=np.array([2.0, 1.0, 1.5]),
            weights=np.zeros((3, 3)),
            impulses=np.full((3, 3, 14), 1.0 / 14),
        )
        em, truth = hawkes.simulate(model, 2000, seed=106, return_parents=True)
        fit, parents = hawkes.gibbs_fit(em, L=14, iters=300, burn_in=150, seed=107)
        off_diag = ~np.eye(3, dtype=bool)
        assert np.all(fit.weights[off_diag] < 0.3)
        rep = hawkes.influence_percent(parents)
        assert np.all(rep.cross < 10.0)


def test_end_to_end_determinism(tmp_path):
    with criterion("end-to-end determinism (golden manifest digest)"):
        out_a = e2e_util.run_pipeline(tmp_path / "run_a")
        out_b = e2e_util.run_pipeline(tmp_path / "run_b")

        files_a = sorted(
            p.relative_to(out_a) for p in out_a.rglob("*") if p.is_file()
        )
        files_b = sorted(
            p.relative_to(out_b) for p in out_b.rglob("*") if p.is_file()
        )
        assert files_a == files_b
        for rel in files_a:
            assert (out_a / rel).read_bytes() == (out_b / rel).read_bytes(), rel

        golden = e2e_util.GOLDEN_MANIFEST.read_text().strip()
        assert e2e_util.manifest_digest(out_a) == golden


def test_throughput_soft():
    """Scaled stand-in for the 8-core 100k x 100k five-minute budget.

    The full criterion is 1.5e13 flops in 300 s on 8 cores (2,400 core-
    seconds).  This proxy runs 1/100 of that work and gets 1/100 of the
    core-second budget spread over however many cores this host has.  Set
    NEWSFLOW_FULL_THROUGHPUT=1 to run the full-size problem instead.
    """
    full = os.environ.get("NEWSFLOW_FULL_THROUGHPUT") == "1"
    n = 100_000 if full else 10_000
    label = "full" if full else "1/100-scale proxy"
    cores = os.cpu_count() or 1
    scale = (n * n) / (100_000 * 100_000)
    budget = 300.0 * 8 * scale / cores
    with criterion(f"throughput soft ({label}: {n:,} x {n:,} at dim 768, "
                   f"budget {budget:.0f}s on {cores} cores)"):
        queries = vectors.EmbeddingBlock(
            np.arange(n, dtype=np.uint64), random_unit_vectors(n, 768, seed=108)
        )
        started = time.perf_counter()
        got = vectors.threshold_search(queries, queries, 0.99, threads=cores)
        elapsed = time.perf_counter() - started
        # Every vector at least matches itself, so the pass did real work.
        assert all(len(ix) >= 1 for ix in got.indices)
        assert elapsed < budget, f"ran {elapsed:.1f}s, budget {budget:.0f}s"
