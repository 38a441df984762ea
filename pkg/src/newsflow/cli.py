"""Pipeline orchestration: ingest -> cluster -> similarity / flow / influence.

Every subcommand reads its inputs from disk, writes its artifacts under a
stage subdirectory of --out, and records the resolved settings it ran with.
``report`` bundles the delimited outputs, renders figures, and emits a
manifest of config hash and file digests; re-running a stage with identical
inputs and settings reproduces its outputs byte for byte.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import datetime as dt
import hashlib
import json
import shutil
import sys
from pathlib import Path

import numpy as np

from . import corpus as corpus_mod
from . import dpmeans, figures, hawkes, simindex, topicflow, vectors
from .errors import ConfigError, FormatError, IOFailure, NewsflowError


def _json_dump(path: Path, obj) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _write_csv(path: Path, header: list[str], rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _fmt(x: float) -> str:
    return repr(float(x))


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _load_config(path: str | None) -> configparser.ConfigParser:
    cp = configparser.ConfigParser()
    if path:
        if not Path(path).exists():
            raise ConfigError(f"config file {path} does not exist")
        cp.read(path)
    return cp


def _opt(args, config, section: str, name: str, default, cast=str):
    """Resolve a setting: command-line flag wins, then config file, then default."""
    value = getattr(args, name.replace("-", "_"), None)
    if value is not None:
        return value
    for sec in (section, "DEFAULT"):
        if config.has_option(sec, name):
            raw = config.get(sec, name)
            try:
                return cast(raw) if cast is not bool else raw.lower() in ("1", "true", "yes")
            except ValueError as exc:
                raise ConfigError(f"config option {name} = {raw!r}: {exc}") from None
    return default


def _load_lines(path: str | None) -> set[str]:
    if not path:
        return set()
    try:
        with open(path, encoding="utf-8") as fh:
            return {ln.strip() for ln in fh if ln.strip() and not ln.startswith("#")}
    except OSError as exc:
        raise IOFailure(f"cannot read {path}: {exc}") from None


def _load_aggregate_map(path: str | None) -> dict[str, str]:
    if not path:
        return {}
    mapping = {}
    try:
        with open(path, encoding="utf-8") as fh:
            for lineno, ln in enumerate(fh, 1):
                ln = ln.strip()
                if not ln or ln.startswith("#"):
                    continue
                if "=" not in ln:
                    raise FormatError(f"{path}:{lineno}: expected 'source = pseudo'")
                src, dst = (part.strip() for part in ln.split("=", 1))
                mapping[src] = dst
    except OSError as exc:
        raise IOFailure(f"cannot read {path}: {exc}") from None
    return mapping


def _load_inputs(args, config, section):
    corpus_path = _opt(args, config, section, "corpus", None)
    if not corpus_path:
        raise ConfigError("--corpus is required")
    start = _opt(args, config, section, "window-start", None)
    end = _opt(args, config, section, "window-end", None)
    window = None
    if start or end:
        if not (start and end):
            raise ConfigError("window-start and window-end must be set together")
        window = (dt.date.fromisoformat(start), dt.date.fromisoformat(end))
    return corpus_mod.load_corpus(corpus_path, window=window)


def _platform_blocks(
    store: corpus_mod.CorpusStore, block: vectors.EmbeddingBlock
) -> dict[str, vectors.EmbeddingBlock]:
    """Split one embedding block into per-source blocks, by channel/site label."""
    row_of = {int(uid): i for i, uid in enumerate(block.ids)}
    groups: dict[str, list[int]] = {}
    for unit in store.units:
        row = row_of.get(unit.unit_id)
        if row is None:
            raise FormatError(f"unit {unit.unit_id} has no embedding row")
        groups.setdefault(store.source_label(unit), []).append(row)
    return {
        label: block.select(np.array(rows, dtype=np.int64))
        for label, rows in groups.items()
    }


def _source_kinds(store: corpus_mod.CorpusStore) -> tuple[set[str], set[str]]:
    """(website labels, channel labels) present in the corpus."""
    sites, channels = set(), set()
    for unit in store.units:
        label = store.source_label(unit)
        if store.registry.by_id(unit.platform_id).kind == corpus_mod.NEWS_SITE:
            sites.add(label)
        else:
            channels.add(label)
    return sites, channels


def _load_clustering(out_dir: Path) -> dpmeans.Clustering:
    """Rebuild a minimal clustering from the cluster stage's artifacts."""
    path = out_dir / "cluster" / "assignments.csv"
    if not path.exists():
        raise IOFailure(f"missing upstream artifact {path}: run the cluster stage first")
    members: dict[int, list[int]] = {}
    assignment: dict[int, int] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            uid, cid = int(row["unit_id"]), int(row["cluster_id"])
            members.setdefault(cid, []).append(uid)
            assignment[uid] = cid
    centers_path = out_dir / "cluster" / "centers.emb1"
    centers = vectors.read_block(centers_path) if centers_path.exists() else None
    clusters = []
    for cid in sorted(members):
        ids = np.array(members[cid], dtype=np.uint64)
        center = (
            centers.data[list(centers.ids).index(cid)]
            if centers is not None and cid in centers.ids
            else np.zeros(1, dtype=np.float32)
        )
        clusters.append(
            dpmeans.TopicCluster(cid, center, np.arange(len(ids)), ids)
        )
    return dpmeans.Clustering(clusters, assignment, lam=0.0, iterations=0,
                              objective=0.0, objective_trace=[])


# ---------------------------------------------------------------- subcommands


def cmd_ingest(args, config) -> None:
    store, report = _load_inputs(args, config, "ingest")
    out = Path(_require_out(args, config, "ingest"))
    stage = out / "ingest"
    stage.mkdir(parents=True, exist_ok=True)

    with open(stage / "units.jsonl", "w", encoding="utf-8") as fh:
        for unit in store.units:
            fh.write(json.dumps({
                "unit_id": unit.unit_id,
                "platform": store.registry.by_id(unit.platform_id).name,
                "channel": unit.channel_label,
                "date": unit.date.isoformat(),
                "lang": unit.lang,
                "text": unit.text,
            }, sort_keys=True, ensure_ascii=False) + "\n")

    report_obj = report.to_dict()
    _json_dump(stage / "ingest_report.json", report_obj)
    report_path = _opt(args, config, "ingest", "report", None)
    payload = json.dumps(report_obj, sort_keys=True, indent=2)
    if report_path:
        Path(report_path).write_text(payload + "\n", encoding="utf-8")
    else:
        print(payload)

    site_ids = [p.id for p in store.registry if p.kind == corpus_mod.NEWS_SITE]
    if site_ids:
        top_n = int(_opt(args, config, "ingest", "domains-top", 10, int))
        rows = corpus_mod.domain_share_timeseries(store, site_ids, top_n)
        _write_csv(
            stage / "domain_share.csv",
            ["date", "domain", "fraction"],
            [(d.isoformat(), dom, _fmt(f)) for d, dom, f in rows],
        )
    entity_host = _opt(args, config, "ingest", "entity-host", None)
    if entity_host:
        prefix = _opt(args, config, "ingest", "entity-prefix", "/")
        channel_ids = [p.id for p in store.registry if p.kind == corpus_mod.TELEGRAM_CHANNEL]
        ranked = corpus_mod.top_linked_entities(store, channel_ids, entity_host, prefix)
        _write_csv(stage / "top_entities.csv", ["entity", "distinct_sources"], ranked)

    _json_dump(stage / "config.json", _stage_config(args, config, "ingest"))


def cmd_validate_emb(args, config) -> None:
    path = _opt(args, config, "validate-emb", "emb", None)
    if not path:
        raise ConfigError("--emb is required")
    block = vectors.read_block(path, renormalize=bool(getattr(args, "renormalize", False)))
    print(json.dumps({"path": str(path), "count": block.count, "dim": block.dim,
                      "findings": []}, sort_keys=True))


def cmd_cluster(args, config) -> None:
    store, _ = _load_inputs(args, config, "cluster")
    emb_path = _opt(args, config, "cluster", "emb", None)
    if not emb_path:
        raise ConfigError("--emb is required")
    block = vectors.read_block(emb_path)
    lam = float(_opt(args, config, "cluster", "lambda", 0.8, float))
    threads = int(_opt(args, config, "cluster", "threads", 1, int))
    out = Path(_require_out(args, config, "cluster"))
    stage = out / "cluster"

    clustering = dpmeans.fit(block, lam=lam, threads=threads)
    # Populates per-cluster platform counts and earliest dates for the summary.
    topicflow.build_timelines(clustering, store)
    member_mean, center_mean = dpmeans.cohesion_stats(clustering, block)

    _write_csv(
        stage / "assignments.csv",
        ["unit_id", "cluster_id"],
        [(int(uid), cid) for uid, cid in sorted(clustering.assignment.items())],
    )
    center_block = vectors.EmbeddingBlock(
        np.array([c.cluster_id for c in clustering.clusters], dtype=np.uint64),
        np.array([c.center for c in clustering.clusters], dtype=np.float32),
    )
    vectors.write_block(stage / "centers.emb1", center_block)
    summary = {
        "k": clustering.k,
        "lambda": lam,
        "iterations": clustering.iterations,
        "objective": clustering.objective,
        "cohesion_member_center": member_mean,
        "cohesion_center_pairwise": center_mean,
        "clusters": [
            {
                "cluster_id": c.cluster_id,
                "size": c.size,
                "representative_unit": dpmeans.representative(c, block),
                "platform_counts": {k: v for k, v in sorted(c.platform_counts.items())},
                "platform_earliest": {
                    k: v.isoformat() for k, v in sorted(c.platform_earliest.items())
                },
            }
            for c in clustering.clusters
        ],
    }
    _json_dump(stage / "clusters.json", summary)
    _json_dump(stage / "config.json", _stage_config(args, config, "cluster"))
    print(f"clustered {block.count} units into {clustering.k} clusters "
          f"in {clustering.iterations} iterations")


def cmd_similarity(args, config) -> None:
    store, _ = _load_inputs(args, config, "similarity")
    emb_path = _opt(args, config, "similarity", "emb", None)
    if not emb_path:
        raise ConfigError("--emb is required")
    block = vectors.read_block(emb_path)
    tau = float(_opt(args, config, "similarity", "tau", 0.8, float))
    threads = int(_opt(args, config, "similarity", "threads", 1, int))
    out = Path(_require_out(args, config, "similarity"))
    stage = out / "similarity"

    blocks = _platform_blocks(store, block)
    sites, channels = _source_kinds(store)
    agg = _load_aggregate_map(_opt(args, config, "similarity", "aggregate-map", None))
    if not agg:
        # Default reading of the ecosystem: all channels as one pseudo-platform.
        agg = {label: "telegram" for label in channels}
    matrix = simindex.similarity_matrix(blocks, tau=tau, aggregate_map=agg, threads=threads)

    rows = []
    for (a, b), (fab, fba) in sorted(matrix.fractions.items()):
        rows.append((a, b, _fmt(fab), _fmt(fba), _fmt(matrix.sim(a, b))))
    _write_csv(stage / "similarity.csv",
               ["platform_a", "platform_b", "frac_a_in_b", "frac_b_in_a", "sim"], rows)
    _json_dump(stage / "similarity.json", {
        "threshold": tau,
        "platforms": matrix.names,
        "pairs": [
            {"platform_a": a, "platform_b": b, "frac_a_in_b": fab,
             "frac_b_in_a": fba, "sim": matrix.sim(a, b)}
            for (a, b), (fab, fba) in sorted(matrix.fractions.items())
        ],
    })

    channel_blocks = {c: blocks[c] for c in channels}
    if channel_blocks:
        rank_rows = []
        for site in sorted(sites):
            top = simindex.most_similar_channels(
                blocks[site], channel_blocks, tau=tau, k=3, threads=threads
            )
            for rank, (label, sim) in enumerate(top, 1):
                rank_rows.append((site, rank, label, _fmt(sim)))
        _write_csv(stage / "most_similar_channels.csv",
                   ["website", "rank", "channel", "sim"], rank_rows)
    _json_dump(stage / "config.json", _stage_config(args, config, "similarity"))


def cmd_flow(args, config) -> None:
    store, _ = _load_inputs(args, config, "flow")
    out = Path(_require_out(args, config, "flow"))
    stage = out / "flow"
    clustering = _load_clustering(out)
    exclusions = _load_lines(_opt(args, config, "flow", "exclude", None))
    horizon = int(_opt(args, config, "flow", "horizon", 30, int))

    timelines = topicflow.build_timelines(clustering, store)
    sites, channels = _source_kinds(store)

    flow_rows = []
    for target in sorted(sites):
        topic_pct, text_pct = topicflow.percent_first_on(
            target, channels, timelines, exclusions
        )
        flow_rows.append((target, _fmt(topic_pct), _fmt(text_pct)))
    for target in sorted(channels):
        try:
            topic_pct, text_pct = topicflow.percent_first_on(
                target, sites, timelines, exclusions
            )
        except ConfigError:
            continue  # channel participates in no topics
        flow_rows.append((target, _fmt(topic_pct), _fmt(text_pct)))
    _write_csv(stage / "flow_report.csv", ["target", "topic_pct", "text_pct"], flow_rows)

    universe = sites | channels
    curve_rows = []
    for origin in sorted(universe):
        curve = topicflow.spread_curve(origin, timelines, horizon, universe)
        for offset, reach in enumerate(curve):
            curve_rows.append((origin, offset, _fmt(reach)))
    _write_csv(stage / "spread_curves.csv",
               ["origin", "offset_days", "mean_reach"], curve_rows)

    first_rows = []
    for target in sorted(sites):
        top = topicflow.top_first_posting_channels(
            target, channels, timelines, k=3, exclusions=exclusions
        )
        for rank, (ch, pct) in enumerate(top, 1):
            first_rows.append((target, rank, ch, _fmt(pct)))
    _write_csv(stage / "top_first_channels.csv",
               ["target", "rank", "channel", "pct_first_posted"], first_rows)
    _json_dump(stage / "config.json", _stage_config(args, config, "flow"))


def cmd_influence(args, config) -> None:
    store, _ = _load_inputs(args, config, "influence")
    out = Path(_require_out(args, config, "influence"))
    stage = out / "influence"
    clustering = _load_clustering(out)
    sites, channels = _source_kinds(store)

    agg_map = _load_aggregate_map(_opt(args, config, "influence", "aggregate-map", None))
    if not agg_map:
        agg_map = {label: "telegram" for label in channels}
    timelines = topicflow.remap_timelines(
        topicflow.build_timelines(clustering, store), agg_map
    )
    platforms = sorted({agg_map.get(lbl, lbl) for lbl in (sites | channels)})

    priors = hawkes.Priors(
        alpha0=float(_opt(args, config, "influence", "alpha0", 1.0, float)),
        beta0=float(_opt(args, config, "influence", "beta0", 1.0, float)),
        kappa=float(_opt(args, config, "influence", "kappa", 1.0, float)),
        nu=float(_opt(args, config, "influence", "nu", 5.0, float)),
        gamma=float(_opt(args, config, "influence", "gamma", 1.0, float)),
    )
    result = hawkes.fit_ecosystem(
        timelines,
        platforms,
        min_events=int(_opt(args, config, "influence", "min-events", 5, int)),
        priors=priors,
        L=int(_opt(args, config, "influence", "max-lag", 14, int)),
        iters=int(_opt(args, config, "influence", "iters", 500, int)),
        burn_in=int(_opt(args, config, "influence", "burn-in", 250, int)),
        seed=int(_opt(args, config, "influence", "seed", 0, int)),
        pooled=bool(_opt(args, config, "influence", "pooled", False, bool)),
        threads=int(_opt(args, config, "influence", "threads", 1, int)),
    )

    inf = result.influence
    rows = []
    for ti, target in enumerate(platforms):
        if not inf.reported[ti]:
            continue
        rows.append(("background", target, _fmt(inf.background_pct[ti])))
        rows.append(("self", target, _fmt(inf.self_pct[ti])))
        for si, source in enumerate(platforms):
            if si != ti:
                rows.append((source, target, _fmt(inf.cross[si, ti])))
    _write_csv(stage / "influence.csv", ["source", "target", "percent"], rows)

    eff_rows = []
    for si, source in enumerate(platforms):
        if result.aggregate.totals[si] <= 0:
            continue
        for ti, target in enumerate(platforms):
            if si != ti:
                eff_rows.append((source, target, _fmt(result.efficiency_matrix[si, ti])))
    _write_csv(stage / "efficiency.csv", ["source", "target", "percent"], eff_rows)

    if getattr(args, "dump_models", False):
        dump = {
            str(cid): {
                "background": model.background.tolist(),
                "weights": model.weights.tolist(),
                "impulses": model.impulses.tolist(),
            }
            for cid, (model, _) in sorted(result.per_cluster.items())
        }
        _json_dump(stage / "models.json", dump)
    _json_dump(stage / "config.json", _stage_config(args, config, "influence"))
    print(f"fitted {len(result.per_cluster)} cluster models "
          f"({result.skipped} skipped below min-events)")


def cmd_sweep(args, config) -> None:
    pairs_path = _opt(args, config, "sweep", "pairs", None)
    if not pairs_path:
        raise ConfigError("--pairs is required")
    out = Path(_require_out(args, config, "sweep"))
    stage = out / "sweep"
    thresholds_raw = _opt(args, config, "sweep", "thresholds", "0.6,0.7,0.8,0.9")
    thresholds = [float(t) for t in str(thresholds_raw).split(",") if t.strip()]

    labeled = []
    try:
        with open(pairs_path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.strip()
                if not line:
                    continue
                obj = json.loads(line)
                try:
                    labeled.append((
                        np.array(obj["a"], dtype=np.float64),
                        np.array(obj["b"], dtype=np.float64),
                        bool(obj["same_topic"]),
                    ))
                except KeyError as exc:
                    raise FormatError(f"{pairs_path}:{lineno}: missing field {exc}") from None
    except OSError as exc:
        raise IOFailure(f"cannot read {pairs_path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise FormatError(f"{pairs_path}: invalid JSON: {exc}") from None

    rows = simindex.threshold_precision_sweep(
        labeled,
        thresholds,
        half_width=float(_opt(args, config, "sweep", "half-width", 0.01, float)),
        sample_n=int(_opt(args, config, "sweep", "sample-n", 250, int)),
        seed=int(_opt(args, config, "sweep", "seed", 0, int)),
    )
    _write_csv(
        stage / "sweep.csv",
        ["threshold", "n", "precision"],
        [
            (_fmt(r["threshold"]), r["n"],
             "" if r["precision"] is None else _fmt(r["precision"]))
            for r in rows
        ],
    )
    _json_dump(stage / "config.json", _stage_config(args, config, "sweep"))


_REPORT_STAGES = ("ingest", "cluster", "similarity", "flow", "influence", "sweep")


def cmd_report(args, config) -> None:
    out = Path(_require_out(args, config, "report"))
    present = [s for s in _REPORT_STAGES if (out / s).is_dir()]
    required = ("cluster", "similarity", "flow", "influence")
    missing = [s for s in required if s not in present]
    if missing:
        raise IOFailure(f"missing upstream stage(s): {', '.join(missing)}")

    report_dir = out / "report"
    if report_dir.exists():
        shutil.rmtree(report_dir)
    (report_dir / "figures").mkdir(parents=True)

    copied = []
    for stage_name in present:
        for src in sorted((out / stage_name).glob("*")):
            if src.suffix in (".csv", ".json"):
                dst = report_dir / f"{stage_name}__{src.name}"
                shutil.copyfile(src, dst)
                copied.append(dst)

    figdir = report_dir / "figures"
    if (out / "similarity" / "similarity.csv").exists():
        figures.similarity_heatmap(out / "similarity" / "similarity.csv",
                                   figdir / "similarity_matrix.png")
    if (out / "flow" / "spread_curves.csv").exists():
        figures.spread_curves_plot(out / "flow" / "spread_curves.csv",
                                   figdir / "spread_curves.png")
    if (out / "flow" / "flow_report.csv").exists():
        figures.flow_bars(out / "flow" / "flow_report.csv",
                          figdir / "first_posted.png")
    if (out / "influence" / "influence.csv").exists():
        figures.influence_heatmap(out / "influence" / "influence.csv",
                                  figdir / "influence.png")
    if (out / "ingest" / "domain_share.csv").exists():
        figures.domain_share_plot(out / "ingest" / "domain_share.csv",
                                  figdir / "domain_share.png")

    config_hash = hashlib.sha256()
    for stage_name in present:
        cfg = out / stage_name / "config.json"
        if cfg.exists():
            config_hash.update(cfg.read_bytes())
    digests = {}
    for path in sorted(report_dir.rglob("*")):
        if path.is_file():
            digests[str(path.relative_to(report_dir))] = _sha256(path)
    manifest = {
        "config_hash": config_hash.hexdigest(),
        "stages": present,
        "files": digests,
    }
    _json_dump(report_dir / "manifest.json", manifest)
    print(f"report written to {report_dir} ({len(digests)} files)")


def _require_out(args, config, section) -> str:
    out = _opt(args, config, section, "out", None)
    if not out:
        raise ConfigError("--out is required")
    return out


def _stage_config(args, config, section) -> dict:
    """Resolved settings for the stage; hashed into the report manifest."""
    keys = {
        "ingest": ["corpus", "window-start", "window-end", "domains-top",
                   "entity-host", "entity-prefix"],
        "cluster": ["corpus", "emb", "lambda", "threads"],
        "similarity": ["corpus", "emb", "tau", "aggregate-map", "threads"],
        "flow": ["corpus", "exclude", "horizon"],
        "influence": ["corpus", "aggregate-map", "max-lag", "iters", "burn-in",
                      "min-events", "seed", "pooled", "threads",
                      "alpha0", "beta0", "kappa", "nu", "gamma"],
        "sweep": ["pairs", "thresholds", "half-width", "sample-n", "seed"],
    }[section]
    casts = {
        "tau": float, "lambda": float, "half-width": float,
        "alpha0": float, "beta0": float, "kappa": float, "nu": float,
        "gamma": float,
        "domains-top": int, "threads": int, "iters": int, "burn-in": int,
        "min-events": int, "seed": int, "max-lag": int, "horizon": int,
        "sample-n": int,
        "pooled": bool,
    }
    resolved = {}
    for key in keys:
        value = _opt(args, config, section, key, None, casts.get(key, str))
        # Normalize so a flag-supplied and a config-supplied setting hash
        # identically.
        if value is not None and key in casts and casts[key] is not bool:
            value = casts[key](value)
        resolved[key] = value
    resolved["stage"] = section
    return resolved


def _add_common(p, *names):
    flags = {
        "corpus": dict(type=str, help="line-delimited JSON corpus file"),
        "emb": dict(type=str, help="EMB1 embedding file"),
        "out": dict(type=str, help="output directory"),
        "tau": dict(type=float, help="correspondence threshold (default 0.8)"),
        "lambda": dict(type=float, help="cluster-creation similarity gate (default 0.8)"),
        "exclude": dict(type=str, help="file of channel labels to exclude"),
        "max-lag": dict(type=int, help="impulse window in days (default 14)"),
        "iters": dict(type=int, help="Gibbs sweeps (default 500)"),
        "burn-in": dict(type=int, help="burn-in sweeps (default 250)"),
        "min-events": dict(type=int, help="minimum events per fitted cluster"),
        "seed": dict(type=int, help="global random seed"),
        "threads": dict(type=int, help="worker thread cap"),
        "aggregate-map": dict(type=str, help="file mapping labels to pseudo-platforms"),
        "report": dict(type=str, help="write the ingest report JSON here"),
        "window-start": dict(type=str, help="study window start (YYYY-MM-DD)"),
        "window-end": dict(type=str, help="study window end (YYYY-MM-DD)"),
    }
    for name in names:
        p.add_argument(f"--{name}", **flags[name])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="newsflow",
        description="Cross-platform news topic tracking pipeline",
    )
    parser.add_argument("--config", type=str, help="INI-style config file (flags win)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="load, clean, and segment a corpus")
    _add_common(p, "corpus", "out", "report", "window-start", "window-end")
    p.add_argument("--domains-top", type=int, help="top-N domains for the link share table")
    p.add_argument("--entity-host", type=str, help="host for entity extraction (e.g. youtube.com)")
    p.add_argument("--entity-prefix", type=str, help="path prefix for entity extraction")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("validate-emb", help="check an EMB1 file")
    _add_common(p, "emb")
    p.add_argument("--renormalize", action="store_true",
                   help="repair rows whose norm drifted")
    p.set_defaults(func=cmd_validate_emb)

    p = sub.add_parser("cluster", help="fit topic clusters")
    _add_common(p, "corpus", "emb", "out", "lambda", "threads",
                "window-start", "window-end")
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("similarity", help="platform similarity matrix and rankings")
    _add_common(p, "corpus", "emb", "out", "tau", "aggregate-map", "threads",
                "window-start", "window-end")
    p.set_defaults(func=cmd_similarity)

    p = sub.add_parser("flow", help="origin attribution and spread curves")
    _add_common(p, "corpus", "out", "exclude", "window-start", "window-end")
    p.add_argument("--horizon", type=int, help="spread-curve horizon in days (default 30)")
    p.set_defaults(func=cmd_flow)

    p = sub.add_parser("influence", help="Hawkes influence estimation")
    _add_common(p, "corpus", "out", "max-lag", "iters", "burn-in", "min-events",
                "seed", "threads", "aggregate-map", "window-start", "window-end")
    p.add_argument("--pooled", action="store_true", default=None,
                   help="fit one pooled model instead of per-cluster fits")
    p.add_argument("--dump-models", action="store_true",
                   help="write per-cluster model parameters to models.json")
    p.set_defaults(func=cmd_influence)

    p = sub.add_parser("sweep", help="threshold precision sweep over labeled pairs")
    _add_common(p, "out", "seed")
    p.add_argument("--pairs", type=str, help="JSONL of labeled vector pairs")
    p.add_argument("--thresholds", type=str, help="comma-separated thresholds")
    p.add_argument("--half-width", type=float, help="bucket half width (default 0.01)")
    p.add_argument("--sample-n", type=int, help="pairs sampled per bucket (default 250)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("report", help="bundle artifacts, render figures, write manifest")
    _add_common(p, "out")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = _load_config(args.config)
        args.func(args, config)
    except NewsflowError as exc:
        category = type(exc).__name__
        print(f"error ({category}): {exc}", file=sys.stderr)
        return exc.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
