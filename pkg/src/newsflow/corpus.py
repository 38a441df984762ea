"""Corpus ingestion and hyperlink analytics.

Raw records (one JSON object per line) are cleaned, admitted, and turned
into :class:`TextUnit` rows: one per Telegram message, one per article
paragraph.  Hyperlinks are captured from the raw record before cleaning so
the link-share analytics keep working after URLs are stripped from the text.
"""

from __future__ import annotations

import datetime as dt
import json
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Optional
from urllib.parse import urlsplit

import regex

from .errors import ConfigError, FormatError, IOFailure

NEWS_SITE = "news_site"
TELEGRAM_CHANNEL = "telegram_channel"

# Paragraph ids are parent_id * 1000 + ordinal; the parent id must leave room
# for the ordinal inside an unsigned 64-bit value.
_MAX_PARENT_ID = (2**64 - 1 - 999) // 1000
_MAX_PARAGRAPHS = 1000

_TAG_RE = regex.compile(r"<[^<>]*>")
_URL_RE = regex.compile(r"(?:\b[a-zA-Z][a-zA-Z0-9+.\-]*://[^\s<>]*|\bwww\.[^\s<>]*)")
# Extended_Pictographic is the standard closure for "emoji"; variation
# selectors, ZWJ, skin-tone modifiers, and the keycap combiner ride along so
# no orphaned joiners survive.
_EMOJI_RE = regex.compile(
    r"[\p{Extended_Pictographic}\p{Emoji_Modifier}︎️‍⃣]"
)


def clean_text(raw: str) -> str:
    """Strip URLs, emoji, and HTML tag spans; collapse whitespace.

    Removal runs to a fixpoint so that deleting one span can never expose a
    new URL or tag that survives the call (the operation is idempotent).
    """
    text = raw
    while True:
        prev = text
        text = _TAG_RE.sub("", text)
        text = _EMOJI_RE.sub("", text)
        text = _URL_RE.sub("", text)
        if text == prev:
            break
    return " ".join(text.split())


def segment_article(body: str) -> list[str]:
    """Split an article body into paragraphs at newline/tab characters.

    The body must already be free of HTML tags. Empty segments are dropped,
    order is preserved.
    """
    segments = regex.split(r"[\n\t]", body)
    return [s.strip() for s in segments if s.strip()]


def admit_message(text: str) -> bool:
    """A cleaned message is admitted iff it has at least four words."""
    return len(text.split()) >= 4


def strip_tags(raw: str) -> str:
    """Remove HTML tag spans only (used before paragraph segmentation)."""
    text = raw
    while True:
        prev = text
        text = _TAG_RE.sub("", text)
        if text == prev:
            break
    return text


def extract_urls(raw: str) -> list[str]:
    """Scheme-prefixed and www. URLs appearing in raw text, in order."""
    return _URL_RE.findall(raw)


def link_domain(url: str) -> Optional[str]:
    """Lowercased registrable host of a URL, with any www. prefix dropped."""
    target = url if "://" in url else "//" + url
    try:
        host = urlsplit(target).hostname
    except ValueError:
        return None
    if not host:
        return None
    host = host.lower()
    if host.startswith("www."):
        host = host[4:]
    return host or None


@dataclass(frozen=True)
class Platform:
    id: int
    name: str
    kind: str  # NEWS_SITE or TELEGRAM_CHANNEL

    def __post_init__(self):
        if not self.name:
            raise ConfigError("platform name must be non-empty")
        if self.kind not in (NEWS_SITE, TELEGRAM_CHANNEL):
            raise ConfigError(f"unknown platform kind: {self.kind!r}")


@dataclass(frozen=True)
class TextUnit:
    unit_id: int
    platform_id: int
    channel_label: Optional[str]
    date: dt.date
    lang: str
    text: str
    hyperlinks: tuple[str, ...] = ()


class PlatformRegistry:
    """Dense-id registry of platforms, auto-extended during ingest."""

    def __init__(self, platforms: Iterable[Platform] = ()):
        self._by_name: dict[str, Platform] = {}
        self._by_id: list[Platform] = []
        for p in platforms:
            self.add(p.name, p.kind)

    def add(self, name: str, kind: str) -> Platform:
        existing = self._by_name.get(name)
        if existing is not None:
            if existing.kind != kind:
                raise FormatError(
                    f"platform {name!r} seen with conflicting kinds "
                    f"{existing.kind!r} and {kind!r}"
                )
            return existing
        platform = Platform(id=len(self._by_id), name=name, kind=kind)
        self._by_id.append(platform)
        self._by_name[name] = platform
        return platform

    def get(self, name: str) -> Optional[Platform]:
        return self._by_name.get(name)

    def by_id(self, platform_id: int) -> Platform:
        return self._by_id[platform_id]

    def __iter__(self):
        return iter(self._by_id)

    def __len__(self):
        return len(self._by_id)


@dataclass
class IngestReport:
    """Per-platform admitted/dropped counts produced by :func:`load_corpus`."""

    admitted: Counter = field(default_factory=Counter)
    dropped_short: Counter = field(default_factory=Counter)
    dropped_out_of_window: Counter = field(default_factory=Counter)
    dropped_empty: Counter = field(default_factory=Counter)

    def to_dict(self) -> dict:
        platforms = sorted(
            set(self.admitted)
            | set(self.dropped_short)
            | set(self.dropped_out_of_window)
            | set(self.dropped_empty)
        )
        return {
            "platforms": {
                name: {
                    "admitted": self.admitted[name],
                    "dropped_short": self.dropped_short[name],
                    "dropped_out_of_window": self.dropped_out_of_window[name],
                    "dropped_empty": self.dropped_empty[name],
                }
                for name in platforms
            },
            "total_admitted": sum(self.admitted.values()),
            "total_dropped": (
                sum(self.dropped_short.values())
                + sum(self.dropped_out_of_window.values())
                + sum(self.dropped_empty.values())
            ),
        }


class CorpusStore:
    """Immutable-after-construction store of platforms and text units."""

    def __init__(self, registry: PlatformRegistry):
        self.registry = registry
        self.units: list[TextUnit] = []
        self.index: dict[int, list[int]] = defaultdict(list)  # platform_id -> unit positions
        self.exclusion_sets: dict[str, set[str]] = {}
        self._unit_ids: set[int] = set()
        self._by_unit_id: dict[int, int] = {}

    def add_unit(self, unit: TextUnit) -> None:
        if unit.unit_id in self._unit_ids:
            raise FormatError(f"duplicate unit_id {unit.unit_id}")
        self._unit_ids.add(unit.unit_id)
        self._by_unit_id[unit.unit_id] = len(self.units)
        self.index[unit.platform_id].append(len(self.units))
        self.units.append(unit)

    def unit(self, unit_id: int) -> TextUnit:
        return self.units[self._by_unit_id[unit_id]]

    def has_unit(self, unit_id: int) -> bool:
        return unit_id in self._unit_ids

    def units_for(self, platform_id: int) -> list[TextUnit]:
        return [self.units[i] for i in self.index.get(platform_id, [])]

    def source_label(self, unit: TextUnit) -> str:
        """Per-source key for analytics: channel handle when present."""
        if unit.channel_label:
            return unit.channel_label
        return self.registry.by_id(unit.platform_id).name

    def __len__(self):
        return len(self.units)


_REQUIRED_FIELDS = ("id", "platform", "date", "lang", "kind", "text")


def _parse_record(obj: dict, lineno: int) -> dict:
    for key in _REQUIRED_FIELDS:
        if key not in obj:
            raise FormatError(f"line {lineno}: missing field {key!r}")
    if not isinstance(obj["id"], int) or obj["id"] < 0:
        raise FormatError(f"line {lineno}: id must be a nonnegative integer")
    if obj["kind"] not in ("article", "message"):
        raise FormatError(f"line {lineno}: kind must be 'article' or 'message'")
    try:
        obj["date"] = dt.date.fromisoformat(obj["date"])
    except (TypeError, ValueError) as exc:
        raise FormatError(f"line {lineno}: bad date: {exc}") from None
    links = obj.get("links") or []
    if not isinstance(links, list):
        raise FormatError(f"line {lineno}: links must be a list")
    obj["links"] = [str(u) for u in links]
    return obj


def load_corpus(
    path,
    registry: Optional[PlatformRegistry] = None,
    window: Optional[tuple[dt.date, dt.date]] = None,
    *,
    out_of_window: str = "drop",
) -> tuple[CorpusStore, IngestReport]:
    """Load a line-delimited JSON corpus file into a CorpusStore.

    Articles are segmented into one unit per paragraph (unit_id =
    parent_id * 1000 + ordinal); Telegram messages shorter than four words
    after cleaning are dropped and counted.  ``out_of_window`` is ``"drop"``
    (count and skip) or ``"error"``.
    """
    if out_of_window not in ("drop", "error"):
        raise ConfigError(f"out_of_window must be 'drop' or 'error', got {out_of_window!r}")
    registry = registry if registry is not None else PlatformRegistry()
    store = CorpusStore(registry)
    report = IngestReport()

    try:
        fh = open(path, "r", encoding="utf-8")
    except OSError as exc:
        raise IOFailure(f"cannot open corpus file {path}: {exc}") from None

    with fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise FormatError(f"line {lineno}: invalid JSON: {exc}") from None
            if not isinstance(obj, dict):
                raise FormatError(f"line {lineno}: record must be a JSON object")
            rec = _parse_record(obj, lineno)

            kind = NEWS_SITE if rec["kind"] == "article" else TELEGRAM_CHANNEL
            platform = registry.add(rec["platform"], kind)
            name = platform.name

            if window is not None and not (window[0] <= rec["date"] <= window[1]):
                if out_of_window == "error":
                    raise FormatError(
                        f"line {lineno}: date {rec['date']} outside study window"
                    )
                report.dropped_out_of_window[name] += 1
                continue

            channel = rec.get("channel") or None
            raw_text = rec["text"]

            if rec["kind"] == "message":
                links = _record_links(rec["links"], raw_text)
                text = clean_text(raw_text)
                if not text:
                    report.dropped_empty[name] += 1
                    continue
                if not admit_message(text):
                    report.dropped_short[name] += 1
                    continue
                store.add_unit(
                    TextUnit(rec["id"], platform.id, channel, rec["date"], rec["lang"], text, links)
                )
                report.admitted[name] += 1
            else:
                if rec["id"] > _MAX_PARENT_ID:
                    raise FormatError(
                        f"line {lineno}: article id {rec['id']} too large for "
                        f"paragraph id encoding"
                    )
                paragraphs = segment_article(strip_tags(raw_text))
                if len(paragraphs) >= _MAX_PARAGRAPHS:
                    raise FormatError(
                        f"line {lineno}: article has {len(paragraphs)} paragraphs, "
                        f"limit is {_MAX_PARAGRAPHS - 1}"
                    )
                emitted = 0
                for ordinal, para in enumerate(paragraphs):
                    text = clean_text(para)
                    if not text:
                        report.dropped_empty[name] += 1
                        continue
                    links = _record_links(rec["links"] if emitted == 0 else [], para)
                    store.add_unit(
                        TextUnit(
                            rec["id"] * 1000 + ordinal,
                            platform.id,
                            channel,
                            rec["date"],
                            rec["lang"],
                            text,
                            links,
                        )
                    )
                    report.admitted[name] += 1
                    emitted += 1
    return store, report


def _record_links(declared: list[str], raw_text: str) -> tuple[str, ...]:
    seen: dict[str, None] = {}
    for url in list(declared) + extract_urls(raw_text):
        seen.setdefault(url)
    return tuple(seen)


def domain_share_timeseries(
    store: CorpusStore,
    platform_ids: Iterable[int],
    top_n: int,
) -> list[tuple[dt.date, str, float]]:
    """Daily external-link share of the overall top-N linked domains.

    For each calendar day with at least one external hyperlink from the given
    platforms, the fraction of that day's links pointing at each of the
    window-wide top-N domains.  Fractions on a day sum to at most 1 (exactly
    1 when every domain linked that day is inside the top N).
    """
    platform_ids = list(platform_ids)
    if not platform_ids:
        raise ConfigError("domain_share_timeseries requires at least one platform")
    own_domains = set()
    for pid in platform_ids:
        name = store.registry.by_id(pid).name
        if "." in name:
            own_domains.add(name.lower())

    day_counts: dict[dt.date, Counter] = defaultdict(Counter)
    totals: Counter = Counter()
    for pid in platform_ids:
        for unit in store.units_for(pid):
            for url in unit.hyperlinks:
                domain = link_domain(url)
                if domain is None or domain in own_domains:
                    continue
                day_counts[unit.date][domain] += 1
                totals[domain] += 1

    top = {d for d, _ in sorted(totals.items(), key=lambda kv: (-kv[1], kv[0]))[:top_n]}
    rows: list[tuple[dt.date, str, float]] = []
    for day in sorted(day_counts):
        counts = day_counts[day]
        day_total = sum(counts.values())
        for domain in sorted(counts):
            if domain in top:
                rows.append((day, domain, counts[domain] / day_total))
    return rows


def top_linked_entities(
    store: CorpusStore,
    source_platform_ids: Iterable[int],
    host: str,
    path_prefix: str = "/",
) -> list[tuple[str, int]]:
    """Entities under host/path_prefix ranked by distinct linking sources.

    The entity is the first path component after ``path_prefix``; the count
    is how many distinct channels/platforms linked it at least once (repeat
    links from one source count once).  Ties rank lexicographically.
    """
    host = host.lower()
    if host.startswith("www."):
        host = host[4:]
    if not path_prefix.startswith("/"):
        path_prefix = "/" + path_prefix
    entity_sources: dict[str, set[str]] = defaultdict(set)
    for pid in source_platform_ids:
        for unit in store.units_for(pid):
            source = store.source_label(unit)
            for url in unit.hyperlinks:
                if link_domain(url) != host:
                    continue
                target = url if "://" in url else "//" + url
                try:
                    path = urlsplit(target).path
                except ValueError:
                    continue
                if not path.startswith(path_prefix):
                    continue
                entity = path[len(path_prefix):].split("/")[0]
                if entity:
                    entity_sources[entity].add(source)
    ranked = [(entity, len(sources)) for entity, sources in entity_sources.items()]
    ranked.sort(key=lambda kv: (-kv[1], kv[0]))
    return ranked
