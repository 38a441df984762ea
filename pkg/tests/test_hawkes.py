import datetime as dt

import numpy as np
import pytest

from newsflow import hawkes
from newsflow.errors import ConfigError, NumericError
from newsflow.topicflow import TopicTimeline

D = dt.date


def small_model(K=2, L=3, w01=0.5):
    weights = np.zeros((K, K))
    weights[0, 1] = w01
    impulses = np.zeros((K, K, L))
    impulses[:, :, 0] = 0.6
    impulses[:, :, 1] = 0.3
    impulses[:, :, 2] = 0.1
    return hawkes.HawkesModel(
        background=np.full(K, 1.5), weights=weights, impulses=impulses
    )


class TestPriors:
    def test_defaults_valid(self):
        hawkes.Priors()

    def test_nonpositive_rejected(self):
        with pytest.raises(ConfigError):
            hawkes.Priors(nu=0.0)


class TestEventMatrix:
    def test_negative_counts_rejected(self):
        with pytest.raises(ConfigError):
            hawkes.EventMatrix(np.array([[1, -1]]))

    def test_wrong_shape_rejected(self):
        with pytest.raises(ConfigError):
            hawkes.EventMatrix(np.zeros(3))


class TestRate:
    def test_background_only_at_t0(self):
        model = small_model()
        counts = np.array([[5, 0, 0], [0, 0, 0]])
        assert hawkes.rate(model, counts, 1, 0) == pytest.approx(1.5)

    def test_hand_computed_excitation(self):
        model = small_model(w01=0.5)
        counts = np.array([[2, 3, 0, 0], [0, 0, 0, 0]])
        # At t=2 platform 1 sees lag-1 of s0=3 and lag-2 of s0=2:
        # 1.5 + 0.5*(0.6*3 + 0.3*2) = 2.7
        assert hawkes.rate(model, counts, 1, 2) == pytest.approx(2.7)

    def test_index_out_of_range(self):
        model = small_model()
        with pytest.raises(ConfigError):
            hawkes.rate(model, np.zeros((2, 3), dtype=int), 2, 0)


class TestSimulate:
    def test_deterministic_per_seed(self):
        model = small_model()
        a = hawkes.simulate(model, 200, seed=5)
        b = hawkes.simulate(model, 200, seed=5)
        c = hawkes.simulate(model, 200, seed=6)
        assert np.array_equal(a.counts, b.counts)
        assert not np.array_equal(a.counts, c.counts)

    def test_parent_decomposition_partitions_events(self):
        model = small_model()
        em, truth = hawkes.simulate(model, 500, seed=7, return_parents=True)
        totals = em.counts.sum(axis=1)
        recon = truth.background + truth.pairs.sum(axis=0)
        assert np.array_equal(recon, totals.astype(np.float64))

    def test_nonstationary_rejected(self):
        model = small_model()
        model.weights[0, 1] = 1.0
        model.weights[1, 0] = 1.2
        with pytest.raises(NumericError):
            hawkes.simulate(model, 10, seed=0)

    def test_mean_rate_tracks_theory(self):
        # With no excitation, mean daily count is the background rate.
        model = small_model(w01=0.0)
        em = hawkes.simulate(model, 5000, seed=8)
        assert em.counts.mean(axis=1) == pytest.approx([1.5, 1.5], rel=0.05)


class TestLaggedHistory:
    def test_matches_index_oracle(self):
        rng = np.random.default_rng(9)
        counts = rng.integers(0, 4, size=(3, 12))
        L = 4
        shifted = hawkes._lagged_history(counts, L)
        for t in range(12):
            for j in range(3):
                for lag in range(1, L + 1):
                    want = counts[j, t - lag] if t - lag >= 0 else 0
                    assert shifted[t, j, lag - 1] == want


class TestGibbsFit:
    def test_parent_counts_partition_exactly(self):
        model = small_model()
        em = hawkes.simulate(model, 300, seed=10)
        _, parents = hawkes.gibbs_fit(em, L=3, iters=40, burn_in=20, seed=1)
        recon = parents.background + parents.pairs.sum(axis=0)
        assert recon == pytest.approx(parents.totals, abs=1e-9)

    def test_seed_determinism(self):
        em = hawkes.simulate(small_model(), 150, seed=11)
        m1, p1 = hawkes.gibbs_fit(em, L=3, iters=30, burn_in=10, seed=2)
        m2, p2 = hawkes.gibbs_fit(em, L=3, iters=30, burn_in=10, seed=2)
        assert np.array_equal(m1.weights, m2.weights)
        assert np.array_equal(p1.pairs, p2.pairs)

    def test_all_zero_counts_degenerate(self):
        em = hawkes.EventMatrix(np.zeros((2, 30), dtype=np.int64))
        model, parents = hawkes.gibbs_fit(em, L=3, iters=10, burn_in=5)
        assert parents.degenerate
        priors = hawkes.Priors()
        assert model.background == pytest.approx(
            np.full(2, priors.alpha0 / (priors.beta0 + 30))
        )
        assert model.weights == pytest.approx(np.full((2, 2), priors.kappa / priors.nu))

    def test_iters_must_exceed_burn_in(self):
        em = hawkes.EventMatrix(np.ones((1, 5), dtype=np.int64))
        with pytest.raises(ConfigError):
            hawkes.gibbs_fit(em, iters=10, burn_in=10)

    def test_recovers_strong_edge_small(self):
        model = small_model(w01=0.7)
        em = hawkes.simulate(model, 800, seed=12)
        fit, _ = hawkes.gibbs_fit(em, L=3, iters=150, burn_in=75, seed=3)
        assert fit.weights[0, 1] == pytest.approx(0.7, abs=0.2)
        assert fit.weights[1, 0] < 0.15
        assert fit.background == pytest.approx(model.background, rel=0.25)

    def test_impulses_normalized(self):
        em = hawkes.simulate(small_model(), 200, seed=13)
        model, _ = hawkes.gibbs_fit(em, L=3, iters=30, burn_in=10, seed=4)
        assert model.impulses.sum(axis=2) == pytest.approx(np.ones((2, 2)))


class TestInfluencePercent:
    def _counts(self):
        return hawkes.ParentCounts(
            background=np.array([60.0, 20.0]),
            pairs=np.array([[30.0, 50.0], [10.0, 30.0]]),
            totals=np.array([100.0, 100.0]),
        )

    def test_columns_sum_to_100(self):
        rep = hawkes.influence_percent(self._counts())
        col_sum = rep.background_pct + rep.self_pct + rep.cross.sum(axis=0)
        assert col_sum == pytest.approx([100.0, 100.0], abs=1e-9)

    def test_hand_values(self):
        rep = hawkes.influence_percent(self._counts())
        assert rep.cross[0, 1] == pytest.approx(50.0)
        assert rep.cross[1, 0] == pytest.approx(10.0)
        assert rep.self_pct == pytest.approx([30.0, 30.0])
        assert rep.background_pct == pytest.approx([60.0, 20.0])
        assert rep.cross[0, 0] == rep.cross[1, 1] == 0.0

    def test_zero_event_platform_unreported(self):
        agg = hawkes.ParentCounts(
            background=np.array([5.0, 0.0]),
            pairs=np.zeros((2, 2)),
            totals=np.array([5.0, 0.0]),
        )
        rep = hawkes.influence_percent(agg)
        assert rep.reported.tolist() == [True, False]
        assert np.isnan(rep.background_pct[1])


class TestEfficiency:
    def test_hand_values(self):
        agg = hawkes.ParentCounts(
            background=np.zeros(2),
            pairs=np.array([[0.0, 40.0], [5.0, 0.0]]),
            totals=np.array([200.0, 50.0]),
        )
        eff = hawkes.efficiency(agg)
        assert eff[0, 1] == pytest.approx(20.0)  # 40 caused per 200 posted
        assert eff[1, 0] == pytest.approx(10.0)


class TestTimelineEventMatrix:
    def test_hand_fixture(self):
        tl = TopicTimeline(
            0,
            {"a": D(2022, 1, 2), "b": D(2022, 1, 4)},
            {"a": 3, "b": 1},
            [(D(2022, 1, 2), "a", 2), (D(2022, 1, 4), "a", 1), (D(2022, 1, 4), "b", 1)],
        )
        em = hawkes.timeline_event_matrix(tl, ["a", "b"])
        assert em.anchor == D(2022, 1, 2)
        assert np.array_equal(em.counts, [[2, 0, 1], [0, 0, 1]])

    def test_unknown_platforms_filtered(self):
        tl = TopicTimeline(0, {"z": D(2022, 1, 1)}, {"z": 1},
                           [(D(2022, 1, 1), "z", 1)])
        assert hawkes.timeline_event_matrix(tl, ["a", "b"]) is None


def synthetic_timelines(n, seed=14):
    rng = np.random.default_rng(seed)
    tls = []
    for cid in range(n):
        start = D(2022, 1, 1) + dt.timedelta(days=int(rng.integers(0, 40)))
        events = []
        for day in range(int(rng.integers(10, 30))):
            for key in ("a", "b"):
                c = int(rng.poisson(1.2))
                if c:
                    events.append((start + dt.timedelta(days=day), key, c))
        earliest, counts = {}, {}
        for d, k, c in events:
            counts[k] = counts.get(k, 0) + c
            if k not in earliest or d < earliest[k]:
                earliest[k] = d
        tls.append(TopicTimeline(cid, earliest, counts, sorted(events)))
    return tls


class TestFitEcosystem:
    def test_aggregate_partition_and_determinism(self):
        tls = synthetic_timelines(6)
        r1 = hawkes.fit_ecosystem(tls, ["a", "b"], min_events=5, L=3,
                                  iters=30, burn_in=10, seed=5)
        r2 = hawkes.fit_ecosystem(tls, ["a", "b"], min_events=5, L=3,
                                  iters=30, burn_in=10, seed=5)
        assert np.array_equal(r1.aggregate.pairs, r2.aggregate.pairs)
        recon = r1.aggregate.background + r1.aggregate.pairs.sum(axis=0)
        assert recon == pytest.approx(r1.aggregate.totals, abs=1e-6)

    def test_thread_count_invariant(self):
        tls = synthetic_timelines(6)
        base = hawkes.fit_ecosystem(tls, ["a", "b"], min_events=5, L=3,
                                    iters=25, burn_in=10, seed=6, threads=1)
        other = hawkes.fit_ecosystem(tls, ["a", "b"], min_events=5, L=3,
                                     iters=25, burn_in=10, seed=6, threads=4)
        assert np.array_equal(base.aggregate.pairs, other.aggregate.pairs)
        assert set(base.per_cluster) == set(other.per_cluster)

    def test_min_events_skips(self):
        tls = synthetic_timelines(4)
        tiny = TopicTimeline(99, {"a": D(2022, 1, 1)}, {"a": 1},
                             [(D(2022, 1, 1), "a", 1)])
        r = hawkes.fit_ecosystem(tls + [tiny], ["a", "b"], min_events=5, L=3,
                                 iters=20, burn_in=5, seed=7)
        assert r.skipped == 1
        assert 99 not in r.per_cluster

    def test_pooled_mode(self):
        tls = synthetic_timelines(4)
        r = hawkes.fit_ecosystem(tls, ["a", "b"], min_events=5, L=3,
                                 iters=25, burn_in=10, seed=8, pooled=True)
        assert list(r.per_cluster) == [-1]
        recon = r.aggregate.background + r.aggregate.pairs.sum(axis=0)
        assert recon == pytest.approx(r.aggregate.totals, abs=1e-6)

    def test_nothing_passes_min_events(self):
        tiny = TopicTimeline(0, {"a": D(2022, 1, 1)}, {"a": 1},
                             [(D(2022, 1, 1), "a", 1)])
        with pytest.raises(ConfigError):
            hawkes.fit_ecosystem([tiny], ["a", "b"], min_events=5,
                                 iters=10, burn_in=5)
