"""Render report figures from the pipeline's delimited outputs.

Every function takes CSV rows already on disk and writes a PNG next to the
other report artifacts.  Figures are a convenience view; the CSVs stay the
canonical output.
"""

from __future__ import annotations

import csv
from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np


def _read_csv(path: Path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def similarity_heatmap(similarity_csv: Path, out_png: Path) -> None:
    rows = _read_csv(similarity_csv)
    names = sorted({r["platform_a"] for r in rows} | {r["platform_b"] for r in rows})
    idx = {n: i for i, n in enumerate(names)}
    mat = np.eye(len(names))
    for r in rows:
        i, j = idx[r["platform_a"]], idx[r["platform_b"]]
        mat[i, j] = mat[j, i] = float(r["sim"])
    fig, ax = plt.subplots(figsize=(1.2 + 0.5 * len(names), 1.0 + 0.5 * len(names)))
    im = ax.imshow(mat, vmin=0, vmax=1, cmap="viridis")
    ax.set_xticks(range(len(names)), names, rotation=90, fontsize=7)
    ax.set_yticks(range(len(names)), names, fontsize=7)
    fig.colorbar(im, ax=ax, label="Sim")
    ax.set_title("Platform similarity (geometric-mean correspondence)")
    fig.tight_layout()
    fig.savefig(out_png, dpi=120)
    plt.close(fig)


def spread_curves_plot(curves_csv: Path, out_png: Path, max_origins: int = 16) -> None:
    rows = _read_csv(curves_csv)
    series: dict[str, list[tuple[int, float]]] = defaultdict(list)
    for r in rows:
        series[r["origin"]].append((int(r["offset_days"]), float(r["mean_reach"])))
    # Rank origins by final reach so the busiest spreaders get drawn.
    ranked = sorted(series, key=lambda o: -max(v for _, v in series[o]))[:max_origins]
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for origin in ranked:
        pts = sorted(series[origin])
        ax.plot([p[0] for p in pts], [p[1] for p in pts], label=origin, linewidth=1.2)
    ax.set_xlabel("days since first post")
    ax.set_ylabel("mean distinct platforms reached")
    ax.set_title("Topic spread from originating platform")
    ax.legend(fontsize=6, ncols=2)
    fig.tight_layout()
    fig.savefig(out_png, dpi=120)
    plt.close(fig)


def flow_bars(flow_csv: Path, out_png: Path) -> None:
    rows = _read_csv(flow_csv)
    targets = [r["target"] for r in rows]
    topic = [float(r["topic_pct"]) for r in rows]
    text = [float(r["text_pct"]) for r in rows]
    x = np.arange(len(targets))
    fig, ax = plt.subplots(figsize=(1.5 + 0.6 * len(targets), 4))
    ax.bar(x - 0.2, topic, width=0.4, label="% of topics")
    ax.bar(x + 0.2, text, width=0.4, label="% of text")
    ax.set_xticks(x, targets, rotation=90, fontsize=7)
    ax.set_ylabel("% first posted elsewhere")
    ax.set_title("Content first posted on source platforms")
    ax.legend()
    fig.tight_layout()
    fig.savefig(out_png, dpi=120)
    plt.close(fig)


def influence_heatmap(influence_csv: Path, out_png: Path) -> None:
    rows = _read_csv(influence_csv)
    sources = sorted({r["source"] for r in rows})
    targets = sorted({r["target"] for r in rows})
    # Background and self ride on top of the heatmap as reserved rows.
    reserved = [s for s in ("background", "self") if s in sources]
    regular = [s for s in sources if s not in ("background", "self")]
    order = regular + reserved
    idx_s = {s: i for i, s in enumerate(order)}
    idx_t = {t: i for i, t in enumerate(targets)}
    mat = np.full((len(order), len(targets)), np.nan)
    for r in rows:
        mat[idx_s[r["source"]], idx_t[r["target"]]] = float(r["percent"])
    fig, ax = plt.subplots(figsize=(1.5 + 0.5 * len(targets), 1.2 + 0.45 * len(order)))
    im = ax.imshow(mat, cmap="magma", vmin=0)
    ax.set_xticks(range(len(targets)), targets, rotation=90, fontsize=7)
    ax.set_yticks(range(len(order)), order, fontsize=7)
    fig.colorbar(im, ax=ax, label="% of target's events")
    ax.set_title("Estimated influence (posterior parent shares)")
    fig.tight_layout()
    fig.savefig(out_png, dpi=120)
    plt.close(fig)


def domain_share_plot(domain_csv: Path, out_png: Path) -> None:
    rows = _read_csv(domain_csv)
    domains = sorted({r["domain"] for r in rows})
    dates = sorted({r["date"] for r in rows})
    idx_date = {d: i for i, d in enumerate(dates)}
    fig, ax = plt.subplots(figsize=(7, 4))
    for domain in domains:
        ys = np.zeros(len(dates))
        for r in rows:
            if r["domain"] == domain:
                ys[idx_date[r["date"]]] = float(r["fraction"])
        ax.plot(range(len(dates)), ys, label=domain, linewidth=1.0)
    step = max(1, len(dates) // 8)
    ax.set_xticks(range(0, len(dates), step), dates[::step], rotation=45, fontsize=7)
    ax.set_ylabel("share of external links")
    ax.set_title("Daily link share of top external domains")
    ax.legend(fontsize=6, ncols=2)
    fig.tight_layout()
    fig.savefig(out_png, dpi=120)
    plt.close(fig)
