"""Origin attribution and spread analytics over clustered, dated units.

All timing works at calendar-day granularity: a source precedes a target
only when it posted at least one full day earlier.  Same-day pairs carry no
precedence, so tied-origin clusters attribute to nobody.

Sources and targets are identified by "platform key": the channel handle for
Telegram units, the platform name otherwise.
"""

from __future__ import annotations

import datetime as dt
from collections import defaultdict
from dataclasses import dataclass

from .corpus import CorpusStore
from .dpmeans import Clustering
from .errors import ConfigError


def precedes(date_a: dt.date, date_b: dt.date) -> bool:
    """True iff date_a is at least one calendar day before date_b."""
    return date_a <= date_b - dt.timedelta(days=1)


@dataclass
class TopicTimeline:
    cluster_id: int
    earliest: dict[str, dt.date]  # platform key -> earliest date
    counts: dict[str, int]  # platform key -> units in the cluster
    events: list[tuple[dt.date, str, int]]  # (date, platform key, unit count)


def build_timelines(clustering: Clustering, store: CorpusStore) -> list[TopicTimeline]:
    """One timeline per cluster, with per-platform earliest dates and counts.

    Also back-fills each cluster's platform_counts / platform_earliest.
    """
    timelines = []
    for cl in clustering.clusters:
        day_counts: dict[tuple[dt.date, str], int] = defaultdict(int)
        earliest: dict[str, dt.date] = {}
        counts: dict[str, int] = defaultdict(int)
        for uid in cl.member_ids:
            if not store.has_unit(int(uid)):
                raise ConfigError(f"clustered unit {int(uid)} missing from corpus")
            unit = store.unit(int(uid))
            key = store.source_label(unit)
            day_counts[(unit.date, key)] += 1
            counts[key] += 1
            if key not in earliest or unit.date < earliest[key]:
                earliest[key] = unit.date
        events = sorted(
            (date, key, c) for (date, key), c in day_counts.items()
        )
        cl.platform_counts = dict(counts)
        cl.platform_earliest = dict(earliest)
        timelines.append(
            TopicTimeline(cl.cluster_id, dict(earliest), dict(counts), events)
        )
    return timelines


def remap_timelines(
    timelines: list[TopicTimeline], mapping: dict[str, str]
) -> list[TopicTimeline]:
    """Merge platform keys (e.g. every channel into one "telegram" process).

    Keys absent from the mapping pass through unchanged.
    """
    out = []
    for tl in timelines:
        earliest: dict[str, dt.date] = {}
        counts: dict[str, int] = defaultdict(int)
        day_counts: dict[tuple[dt.date, str], int] = defaultdict(int)
        for date, key, c in tl.events:
            key = mapping.get(key, key)
            day_counts[(date, key)] += c
            counts[key] += c
            if key not in earliest or date < earliest[key]:
                earliest[key] = date
        events = sorted((d, k, c) for (d, k), c in day_counts.items())
        out.append(TopicTimeline(tl.cluster_id, earliest, dict(counts), events))
    return out


def percent_first_on(
    target: str,
    sources: set[str],
    timelines: list[TopicTimeline],
    exclusions: set[str] = frozenset(),
) -> tuple[float, float]:
    """(topic %, text %) of the target's content first posted by the sources.

    A topic counts when the earliest non-excluded source date strictly
    precedes the target's earliest date in that cluster.  The topic
    percentage is over topics the target participates in; the text
    percentage weights each counting topic by the target's unit count.
    """
    live_sources = sources - exclusions - {target}
    topics = 0
    counting = 0
    target_units = 0
    counting_units = 0
    for tl in timelines:
        if target not in tl.earliest:
            continue
        topics += 1
        target_units += tl.counts[target]
        dates = [tl.earliest[s] for s in live_sources if s in tl.earliest]
        if dates and precedes(min(dates), tl.earliest[target]):
            counting += 1
            counting_units += tl.counts[target]
    if topics == 0:
        raise ConfigError(f"target {target!r} participates in no topics")
    return 100.0 * counting / topics, 100.0 * counting_units / target_units


def spread_curve(
    origin: str,
    timelines: list[TopicTimeline],
    horizon_days: int,
    reach_universe: set[str],
) -> list[float]:
    """Mean cumulative distinct platforms reached, per day offset 0..horizon.

    Only clusters whose strict earliest date belongs to the origin alone are
    attributed to it; clusters with a multi-platform tied origin are skipped.
    Returns an empty list when the origin originates nothing.
    """
    if horizon_days < 0:
        raise ConfigError("horizon_days must be nonnegative")
    curves = []
    for tl in timelines:
        if origin not in tl.earliest:
            continue
        start = tl.earliest[origin]
        others = {k: d for k, d in tl.earliest.items() if k != origin}
        if any(d <= start for d in others.values()):
            continue  # not the strict originator (tie or later start)
        steps = [0] * (horizon_days + 1)
        for key, d in others.items():
            if key not in reach_universe:
                continue
            offset = (d - start).days
            if offset <= horizon_days:
                steps[offset] += 1
        cum = 0
        curve = []
        for s in steps:
            cum += s
            curve.append(cum)
        curves.append(curve)
    if not curves:
        return []
    n = len(curves)
    return [sum(c[i] for c in curves) / n for i in range(horizon_days + 1)]


def top_first_posting_channels(
    target: str,
    channels: set[str],
    timelines: list[TopicTimeline],
    k: int = 3,
    exclusions: set[str] = frozenset(),
) -> list[tuple[str, float]]:
    """Channels ranked by the share of the target's text they posted first.

    A channel earns credit for a cluster when its earliest date strictly
    precedes the target's and is the earliest among all candidate channels;
    channels tied for earliest split the cluster's credit equally.
    """
    live = channels - exclusions - {target}
    credit: dict[str, float] = defaultdict(float)
    target_units = 0
    for tl in timelines:
        if target not in tl.earliest:
            continue
        target_units += tl.counts[target]
        preceding = {
            ch: tl.earliest[ch]
            for ch in live
            if ch in tl.earliest and precedes(tl.earliest[ch], tl.earliest[target])
        }
        if not preceding:
            continue
        first_day = min(preceding.values())
        tied = [ch for ch, d in preceding.items() if d == first_day]
        for ch in tied:
            credit[ch] += tl.counts[target] / len(tied)
    if target_units == 0:
        return []
    ranked = [(ch, 100.0 * credit.get(ch, 0.0) / target_units) for ch in live]
    ranked.sort(key=lambda kv: (-kv[1], kv[0]))
    return ranked[:k]
