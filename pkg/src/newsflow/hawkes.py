"""Discrete-time multivariate Hawkes model over daily topic-mention counts.

The day-granularity corpus calls for the discrete analogue of the usual
continuous-time process: on day t platform k emits

    s_k[t] ~ Poisson( lam0_k + sum_j sum_l W[j,k] * phi[j,k,l] * s_j[t-l] )

with background rates lam0, nonnegative influence weights W (expected events
induced on k per event on j), and per-pair impulse distributions phi over
lags 1..L.  Inference is Gibbs sampling with latent parent attribution:
every event picks a parent among {background} u {(source platform, lag)},
and the conjugate Gamma/Gamma/Dirichlet updates follow from the counts.

Posterior parent counts partition each platform's events exactly, which is
what turns the fit into "percent of k's content caused by j" reports.
"""

from __future__ import annotations

import datetime as dt
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, NumericError
from .topicflow import TopicTimeline


@dataclass
class Priors:
    alpha0: float = 1.0  # background Gamma shape
    beta0: float = 1.0  # background Gamma rate
    kappa: float = 1.0  # weight Gamma shape
    nu: float = 5.0  # weight Gamma rate (prior mean kappa/nu = 0.2)
    gamma: float = 1.0  # impulse Dirichlet concentration

    def __post_init__(self):
        if min(self.alpha0, self.beta0, self.kappa, self.nu, self.gamma) <= 0:
            raise ConfigError("all prior hyperparameters must be positive")


@dataclass
class EventMatrix:
    counts: np.ndarray  # int64, shape (K, T)
    anchor: dt.date | None = None
    platforms: list[str] | None = None

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if self.counts.ndim != 2 or self.counts.shape[1] < 1:
            raise ConfigError("event matrix must be K x T with T >= 1")
        if np.any(self.counts < 0):
            raise ConfigError("event counts must be nonnegative")


@dataclass
class HawkesModel:
    background: np.ndarray  # (K,) events/day
    weights: np.ndarray  # (K, K), weights[j, k] = influence of j on k
    impulses: np.ndarray  # (K, K, L), rows sum to 1 over lags

    @property
    def K(self) -> int:
        return len(self.background)

    @property
    def L(self) -> int:
        return self.impulses.shape[2]


@dataclass
class ParentCounts:
    background: np.ndarray  # (K,) expected background events per platform
    pairs: np.ndarray  # (K, K), pairs[j, k] = expected events on k parented by j
    totals: np.ndarray  # (K,) observed event counts
    degenerate: bool = False


def rate(model: HawkesModel, counts: np.ndarray, k: int, t: int) -> float:
    """Expected events/day on platform k at day t given the history."""
    counts = np.asarray(counts)
    K, T = counts.shape
    if not (0 <= k < K and 0 <= t < T):
        raise ConfigError(f"index ({k}, {t}) out of range for {K} x {T} counts")
    lam = float(model.background[k])
    L = model.L
    for lag in range(1, min(L, t) + 1):
        lam += float(
            np.dot(model.weights[:, k] * model.impulses[:, k, lag - 1], counts[:, t - lag])
        )
    return lam


def _check_stationary(weights: np.ndarray) -> None:
    radius = float(np.max(np.abs(np.linalg.eigvals(weights))))
    if radius >= 1.0:
        raise NumericError(
            f"weight matrix spectral radius {radius:.3f} >= 1: process is non-stationary"
        )


def simulate(
    model: HawkesModel,
    T: int,
    seed: int,
    return_parents: bool = False,
):
    """Draw an event matrix forward in time; deterministic per seed.

    With ``return_parents`` the independent-thinning decomposition of each
    day's Poisson draw is kept, giving the true parent counts used as ground
    truth by the fitting tests.
    """
    if T < 1:
        raise ConfigError("T must be >= 1")
    _check_stationary(model.weights)
    K, L = model.K, model.L
    rng = np.random.default_rng(seed)
    counts = np.zeros((K, T), dtype=np.int64)
    true_bg = np.zeros(K, dtype=np.int64)
    true_pairs = np.zeros((K, K), dtype=np.int64)
    for t in range(T):
        bg = rng.poisson(model.background)
        lam_pairs = np.zeros((K, K))
        for lag in range(1, min(L, t) + 1):
            lam_pairs += model.weights * model.impulses[:, :, lag - 1] * counts[:, t - lag][:, None]
        cross = rng.poisson(lam_pairs)
        counts[:, t] = bg + cross.sum(axis=0)
        true_bg += bg
        true_pairs += cross
    em = EventMatrix(counts)
    if return_parents:
        truth = ParentCounts(
            background=true_bg.astype(np.float64),
            pairs=true_pairs.astype(np.float64),
            totals=counts.sum(axis=1).astype(np.float64),
        )
        return em, truth
    return em


def _lagged_history(counts: np.ndarray, L: int) -> np.ndarray:
    """shifted[t, j, l] = counts[j, t - (l+1)], zero outside the window."""
    K, T = counts.shape
    shifted = np.zeros((T, K, L))
    for lag in range(1, L + 1):
        if lag < T:
            shifted[lag:, :, lag - 1] = counts[:, :-lag].T
        elif lag == T:
            pass  # nothing fits
    return shifted


def gibbs_fit(
    events: EventMatrix,
    priors: Priors = Priors(),
    L: int = 14,
    iters: int = 500,
    burn_in: int = 250,
    seed=0,
) -> tuple[HawkesModel, ParentCounts]:
    """Fit by Gibbs sampling with latent parent attribution.

    Per sweep, every event on (k, t) samples a parent among the background
    and all (j, t - l) bins with events, with probability proportional to
    {lam0_k} u {W[j,k] * phi[j,k,l] * s_j[t-l]}; the conjugate updates then
    resample lam0 ~ Gamma, W ~ Gamma, phi ~ Dirichlet from those counts.
    Returns post-burn-in means of the parameters and of the parent counts.
    """
    if iters <= burn_in:
        raise ConfigError(f"iters ({iters}) must exceed burn_in ({burn_in})")
    if L < 1:
        raise ConfigError("L must be >= 1")
    counts = events.counts
    K, T = counts.shape
    N = counts.sum(axis=1).astype(np.float64)
    rng = np.random.default_rng(seed)

    prior_bg = priors.alpha0 / (priors.beta0 + T)
    if counts.sum() == 0:
        model = HawkesModel(
            background=np.full(K, prior_bg),
            weights=np.full((K, K), priors.kappa / priors.nu),
            impulses=np.full((K, K, L), 1.0 / L),
        )
        parents = ParentCounts(
            background=np.zeros(K), pairs=np.zeros((K, K)), totals=N, degenerate=True
        )
        return model, parents

    shifted = _lagged_history(counts, L)  # (T, K, L)
    flat_hist = shifted.reshape(T, K * L)

    lam0 = np.full(K, priors.alpha0 / priors.beta0)
    W = np.full((K, K), priors.kappa / priors.nu)
    phi = np.full((K, K, L), 1.0 / L)

    keep = iters - burn_in
    sum_lam0 = np.zeros(K)
    sum_W = np.zeros((K, K))
    sum_phi = np.zeros((K, K, L))
    sum_bg_counts = np.zeros(K)
    sum_pair_counts = np.zeros((K, K))

    for sweep in range(iters):
        bg_counts = np.zeros(K)
        pair_counts = np.zeros((K, K))
        lag_hist = np.zeros((K, K, L))
        for k in range(K):
            excitation = (W[:, k][:, None] * phi[:, k, :]).reshape(K * L)
            pv = np.empty((T, 1 + K * L))
            pv[:, 0] = lam0[k]
            pv[:, 1:] = flat_hist * excitation
            pv /= pv.sum(axis=1, keepdims=True)
            draws = rng.multinomial(counts[k], pv)
            bg_counts[k] = draws[:, 0].sum()
            by_pair_lag = draws[:, 1:].sum(axis=0).reshape(K, L)
            pair_counts[:, k] = by_pair_lag.sum(axis=1)
            lag_hist[:, k, :] = by_pair_lag

        lam0 = rng.gamma(priors.alpha0 + bg_counts, 1.0 / (priors.beta0 + T))
        W = rng.gamma(priors.kappa + pair_counts, 1.0 / (priors.nu + N[:, None]))
        g = rng.gamma(priors.gamma + lag_hist)
        phi = g / g.sum(axis=2, keepdims=True)

        if sweep >= burn_in:
            sum_lam0 += lam0
            sum_W += W
            sum_phi += phi
            sum_bg_counts += bg_counts
            sum_pair_counts += pair_counts

    model = HawkesModel(
        background=sum_lam0 / keep,
        weights=sum_W / keep,
        impulses=sum_phi / keep,
    )
    parents = ParentCounts(
        background=sum_bg_counts / keep,
        pairs=sum_pair_counts / keep,
        totals=N,
    )
    return model, parents


@dataclass
class InfluenceReport:
    """Percent decomposition of each platform's events by cause."""

    cross: np.ndarray  # (K, K), diagonal zero; cross[j, k] = % of k caused by j
    self_pct: np.ndarray  # (K,)
    background_pct: np.ndarray  # (K,)
    reported: np.ndarray  # bool (K,): platforms with any events


def influence_percent(agg: ParentCounts) -> InfluenceReport:
    """Share of each platform's events caused by each other platform.

    Self-excitation is split out into its own column rather than folded into
    cross-platform influence; columns with zero events are flagged
    unreported (NaN).
    """
    K = len(agg.totals)
    reported = agg.totals > 0
    denom = np.where(reported, agg.totals, np.nan)
    cross = 100.0 * agg.pairs / denom[None, :]
    self_pct = np.diag(cross).copy()
    np.fill_diagonal(cross, 0.0)
    background_pct = 100.0 * agg.background / denom
    return InfluenceReport(cross, self_pct, background_pct, reported)


def efficiency(agg: ParentCounts) -> np.ndarray:
    """eff[j, k]: events caused on k per 100 events j itself posted."""
    denom = np.where(agg.totals > 0, agg.totals, np.nan)
    return 100.0 * agg.pairs / denom[:, None]


def timeline_event_matrix(
    tl: TopicTimeline, platforms: list[str]
) -> EventMatrix | None:
    """Daily mention counts of one topic cluster over a fixed platform list."""
    events = [(d, key, c) for d, key, c in tl.events if key in set(platforms)]
    if not events:
        return None
    start = min(d for d, _, _ in events)
    end = max(d for d, _, _ in events)
    T = (end - start).days + 1
    counts = np.zeros((len(platforms), T), dtype=np.int64)
    index = {p: i for i, p in enumerate(platforms)}
    for d, key, c in events:
        counts[index[key], (d - start).days] += c
    return EventMatrix(counts, anchor=start, platforms=list(platforms))


@dataclass
class EcosystemResult:
    platforms: list[str]
    per_cluster: dict[int, tuple[HawkesModel, ParentCounts]]
    aggregate: ParentCounts
    influence: InfluenceReport
    efficiency_matrix: np.ndarray
    skipped: int = 0


def fit_ecosystem(
    timelines: list[TopicTimeline],
    platforms: list[str],
    min_events: int = 5,
    priors: Priors = Priors(),
    L: int = 14,
    iters: int = 500,
    burn_in: int = 250,
    seed: int = 0,
    pooled: bool = False,
    threads: int = 1,
) -> EcosystemResult:
    """Fit one model per topic cluster and aggregate the parent counts.

    Per-cluster RNG streams derive from (seed, cluster_id), so the result is
    independent of fit ordering and thread count.  ``pooled`` instead
    concatenates all cluster matrices (separated by L zero days so excitation
    cannot leak across clusters) into a single fit.
    """
    K = len(platforms)
    tasks: list[tuple[int, EventMatrix]] = []
    skipped = 0
    for tl in timelines:
        em = timeline_event_matrix(tl, platforms)
        if em is None or em.counts.sum() < min_events:
            skipped += 1
            continue
        tasks.append((tl.cluster_id, em))
    if not tasks:
        raise ConfigError(f"no cluster reaches min_events = {min_events}")

    if pooled:
        gap = np.zeros((K, L), dtype=np.int64)
        pieces = []
        for i, (_, em) in enumerate(tasks):
            if i:
                pieces.append(gap)
            pieces.append(em.counts)
        merged = EventMatrix(np.hstack(pieces), platforms=list(platforms))
        model, parents = gibbs_fit(
            merged, priors, L=L, iters=iters, burn_in=burn_in,
            seed=np.random.SeedSequence((seed,)),
        )
        per_cluster = {-1: (model, parents)}
        agg = parents
    else:
        def fit_one(task):
            cluster_id, em = task
            return cluster_id, gibbs_fit(
                em, priors, L=L, iters=iters, burn_in=burn_in,
                seed=np.random.SeedSequence((seed, cluster_id)),
            )

        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                fitted = list(pool.map(fit_one, tasks))
        else:
            fitted = [fit_one(t) for t in tasks]
        fitted.sort(key=lambda item: item[0])
        per_cluster = {cid: mp for cid, mp in fitted}
        background = np.zeros(K)
        pairs = np.zeros((K, K))
        totals = np.zeros(K)
        for cid, (model, parents) in sorted(per_cluster.items()):
            background += parents.background
            pairs += parents.pairs
            totals += parents.totals
        agg = ParentCounts(background=background, pairs=pairs, totals=totals)

    return EcosystemResult(
        platforms=list(platforms),
        per_cluster=per_cluster,
        aggregate=agg,
        influence=influence_percent(agg),
        efficiency_matrix=efficiency(agg),
        skipped=skipped,
    )
