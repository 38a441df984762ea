"""Regenerate the bundled synthetic corpus and embedding fixtures.

Writes tests/fixtures/corpus.jsonl and tests/fixtures/corpus.emb1: six
pseudo-platforms (three news sites, three channels), roughly 5,000 text
units drawn around 40 planted 64-d topic directions, with dates, links, and
per-topic activity windows.  Fully deterministic; run from the repo root:

    python scripts/make_fixtures.py
"""

from __future__ import annotations

import datetime as dt
import json
from pathlib import Path

import numpy as np

from newsflow import corpus as corpus_mod
from newsflow import vectors

ROOT = Path(__file__).resolve().parent.parent
FIXDIR = ROOT / "tests" / "fixtures"

SITES = ["alpha.news", "beta.news", "gamma.news"]
CHANNELS = ["chan_one", "chan_two", "chan_three"]
N_TOPICS = 40
DIM = 64
START = dt.date(2022, 1, 1)

WORDS = (
    "report update region military statement economy sanctions energy "
    "minister response border talks market gas grain convoy city strike "
    "defense official agency channel village power supply winter front"
).split()

LINK_POOL = [
    "https://t.me/chan_one/55",
    "https://t.me/chan_two/19",
    "https://t.me/chan_three/7",
    "https://www.youtube.com/channel/NewsOne",
    "https://www.youtube.com/channel/DailyBrief",
    "https://twitter.com/somedesk/status/1",
    "https://example.org/wire/2",
]


# Overlapping topic ranges per platform so correspondence fractions land
# strictly between 0 and 1.
TOPIC_RANGE = {
    "alpha.news": (0, 20),
    "beta.news": (5, 25),
    "gamma.news": (10, 30),
    "chan_one": (12, 32),
    "chan_two": (18, 38),
    "chan_three": (22, 40),
}


def sentence(rng, n_words=8):
    return " ".join(rng.choice(WORDS, size=n_words))


def main():
    rng = np.random.default_rng(20220101)
    FIXDIR.mkdir(parents=True, exist_ok=True)

    centers = rng.standard_normal((N_TOPICS, DIM))
    centers /= np.linalg.norm(centers, axis=1, keepdims=True)
    topic_start = rng.integers(0, 60, size=N_TOPICS)  # day offset of first activity

    records = []
    unit_vecs = {}  # unit_id -> vector
    next_id = 1

    def topic_vector(topic):
        v = centers[topic] + 0.05 * rng.standard_normal(DIM)
        return v / np.linalg.norm(v)

    def topic_date(topic):
        return START + dt.timedelta(days=int(topic_start[topic] + rng.integers(0, 20)))

    # Articles: 3 sites x 280 articles x ~3 paragraphs.
    for site in SITES:
        for _ in range(280):
            topic = int(rng.integers(*TOPIC_RANGE[site]))
            n_par = int(rng.integers(2, 5))
            paragraphs = [sentence(rng, int(rng.integers(6, 12))) for _ in range(n_par)]
            rec_id = next_id
            next_id += 1
            links = list(rng.choice(LINK_POOL, size=int(rng.integers(0, 3)), replace=False))
            records.append({
                "id": rec_id,
                "platform": site,
                "channel": None,
                "date": topic_date(topic).isoformat(),
                "lang": "en",
                "kind": "article",
                "text": "\n".join(paragraphs),
                "links": links,
            })
            for ordinal in range(n_par):
                unit_vecs[rec_id * 1000 + ordinal] = topic_vector(topic)

    # Messages: 3 channels x 850 messages (a few too short on purpose).
    # Message ids start high so they cannot collide with paragraph ids
    # (article_id * 1000 + ordinal).
    next_id = 10_000_000
    for chan in CHANNELS:
        for _ in range(850):
            topic = int(rng.integers(*TOPIC_RANGE[chan]))
            rec_id = next_id
            next_id += 1
            short = rng.random() < 0.02
            text = sentence(rng, 3 if short else int(rng.integers(5, 14)))
            records.append({
                "id": rec_id,
                "platform": "telegram",
                "channel": chan,
                "date": topic_date(topic).isoformat(),
                "lang": "ru",
                "kind": "message",
                "text": text,
                "links": list(rng.choice(LINK_POOL, size=int(rng.integers(0, 2)), replace=False)),
            })
            if not short:
                unit_vecs[rec_id] = topic_vector(topic)

    order = rng.permutation(len(records))
    corpus_path = FIXDIR / "corpus.jsonl"
    with open(corpus_path, "w", encoding="utf-8") as fh:
        for i in order:
            fh.write(json.dumps(records[i], sort_keys=True) + "\n")

    store, report = corpus_mod.load_corpus(corpus_path)
    ids = np.array([u.unit_id for u in store.units], dtype=np.uint64)
    data = np.array([unit_vecs[u.unit_id] for u in store.units], dtype=np.float64)
    block = vectors.EmbeddingBlock(ids, vectors.normalize_rows(data))
    vectors.write_block(FIXDIR / "corpus.emb1", block)

    with open(FIXDIR / "exclusions.txt", "w", encoding="utf-8") as fh:
        fh.write("# official channels excluded from first-posted attribution\n")
        fh.write("chan_three\n")

    print(f"wrote {len(store.units)} units "
          f"({report.to_dict()['total_dropped']} dropped) to {corpus_path}")
    print(f"wrote embeddings: count={block.count} dim={block.dim}")


if __name__ == "__main__":
    main()
