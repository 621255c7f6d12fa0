"""Config-driven command line for reproducible temporal-graph pipelines.

Every command writes its outputs plus an effective-config echo and a
manifest with input/output checksums into ``--out``. Outputs are pure
functions of (config, seed, input bytes): no clocks, hostnames, or
environment details leak into any file, so identical runs are
byte-identical.

Exit codes: 0 success, 1 validation/config error, 2 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, dump_config, load_config
from .core import IngestError, SchemaError, TemporalGraph, validate
from .edgebank import EdgeBank
from .evaluation import (MetricError, SplitError, chronological_split,
                         evaluate_link_prediction, evaluate_node_classification)
from .features import FitError
from .index import build_index
from .io import (CACHE_MAGIC, CacheError, encode_flat_batch, export_stats,
                 read_cache, read_events_csv, sha256_file, write_cache,
                 write_stats_csvs)
from .negatives import NegativeSpec, historical_negatives, random_negatives
from .rng import RngStreams
from .sampling import MostRecent, Uniform, iterate_link_batches, sample_khop
from .snapshot import (FixedCount, FixedEvents, FixedWidth, SnapshotSpec,
                       make_snapshots)

COMMANDS = ("ingest", "stats", "snapshot", "split", "sample", "negatives",
            "eval-link", "eval-node")


class _Run:
    """Output directory bookkeeping: echo, outputs, manifest."""

    def __init__(self, cfg: dict, command: str):
        self.cfg = cfg
        self.command = command
        self.out = Path(cfg["out"])
        self.out.mkdir(parents=True, exist_ok=True)
        self.outputs: list[str] = []
        self.extra: dict = {}

    def path(self, name: str) -> Path:
        self.outputs.append(name)
        return self.out / name

    def write_text(self, name: str, text: str):
        self.path(name).write_text(text, encoding="utf-8")

    def finish(self, inputs: list[str]):
        echo = dump_config(self.cfg)
        self.write_text("config.yaml", echo)
        manifest = {
            "command": self.command,
            "config_sha256": hashlib.sha256(echo.encode()).hexdigest(),
            "inputs": {p: sha256_file(p) for p in inputs},
            "outputs": {name: sha256_file(self.out / name)
                        for name in sorted(self.outputs)},
        }
        manifest.update(self.extra)
        (self.out / "manifest.json").write_text(
            json.dumps(manifest, sort_keys=True, indent=2) + "\n",
            encoding="utf-8")


def _load_dataset(cfg) -> tuple[TemporalGraph, object]:
    path = cfg["dataset"]
    if not path:
        raise ConfigError("dataset is required (set dataset: or --dataset=)",
                          key="dataset")
    with open(path, "rb") as fh:
        magic = fh.read(4)
    if magic == CACHE_MAGIC:
        return read_cache(path)
    return read_events_csv(path)


def _snapshot_spec(cfg) -> SnapshotSpec:
    sc = cfg["snapshot"]
    mode = sc["mode"]
    if mode == "fixed-count":
        part = FixedCount(sc["count"])
    elif mode == "fixed-width":
        part = FixedWidth(sc["width"])
    elif mode == "fixed-events":
        part = FixedEvents(sc["events"])
    else:
        raise ConfigError(f"unknown snapshot.mode {mode!r}", key="snapshot.mode")
    return SnapshotSpec(part, coalesce=sc["coalesce"],
                        accumulation=sc["accumulation"])


def _strategy(cfg):
    sc = cfg["sampler"]
    if sc["strategy"] == "recent":
        return MostRecent()
    if sc["strategy"] == "uniform":
        return Uniform(sc["window"])
    raise ConfigError(f"unknown sampler.strategy {sc['strategy']!r}",
                      key="sampler.strategy")


def _directed(cfg) -> bool:
    mode = cfg["index"]["mode"]
    if mode not in ("symmetrized", "directed"):
        raise ConfigError(f"unknown index.mode {mode!r}", key="index.mode")
    return mode == "directed"


def _ratios(cfg):
    sp = cfg["split"]
    return (sp["train"], sp["val"], sp["test"])


def _fmt(v) -> str:
    return repr(float(v)) if isinstance(v, float) else str(v)


# -- commands ----------------------------------------------------------------


def cmd_ingest(cfg) -> int:
    g, table = _load_dataset(cfg)
    report = validate(g)
    run = _Run(cfg, "ingest")
    stem = Path(cfg["dataset"]).stem
    write_cache(run.path(f"{stem}.tgev"), g, table)
    run.extra["dataset"] = {
        "nodes": g.num_nodes,
        "events": g.num_events,
        "validation": {code: report.count(code) for code in
                       ("delete-before-add", "deleted-node-ref", "duplicate")},
    }
    for f in report.findings:
        print(f"warning: {f.message}", file=sys.stderr)
    run.finish([cfg["dataset"]])
    return 0


def cmd_stats(cfg) -> int:
    g, _ = _load_dataset(cfg)
    bundle = export_stats(g, _snapshot_spec(cfg), directed=_directed(cfg))
    run = _Run(cfg, "stats")
    stem = Path(cfg["dataset"]).stem
    for path in write_stats_csvs(bundle, run.out, stem):
        run.outputs.append(path.name)
    run.finish([cfg["dataset"]])
    return 0


def cmd_snapshot(cfg) -> int:
    g, _ = _load_dataset(cfg)
    snaps = make_snapshots(g, _snapshot_spec(cfg)) if not g.is_empty else []
    run = _Run(cfg, "snapshot")
    listing = []
    for snap in snaps:
        name = f"snapshot_{snap.index:03d}.csv"
        with open(run.path(name), "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["src", "dst", "weight", "rep_t"])
            for s, d, wt, rt in zip(snap.src, snap.dst, snap.weight, snap.rep_t):
                w.writerow([s, d, wt, repr(float(rt))])
        listing.append({"index": snap.index, "t_start": snap.interval[0],
                        "t_end": snap.interval[1], "edges": snap.num_edges,
                        "file": name})
    run.write_text("snapshots.json",
                   json.dumps(listing, sort_keys=True, indent=2) + "\n")
    run.finish([cfg["dataset"]])
    return 0


def cmd_split(cfg) -> int:
    g, _ = _load_dataset(cfg)
    split = chronological_split(g, _ratios(cfg))
    run = _Run(cfg, "split")
    adds = g.edge_add_mask()
    lines = [
        f"t_train_end={split.t_train_end!r}",
        f"t_val_end={split.t_val_end!r}",
        f"train_edges={int((adds & split.mask('train')).sum())}",
        f"val_edges={int((adds & split.mask('val')).sum())}",
        f"test_edges={int((adds & split.mask('test')).sum())}",
        f"unseen_test_edges={int(split.unseen.sum())}",
    ]
    run.write_text("split.txt", "\n".join(lines) + "\n")
    with open(run.path("split_tags.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["event_id", "tag", "unseen"])
        names = {0: "train", 1: "val", 2: "test"}
        for i in range(g.num_events):
            w.writerow([i, names[int(split.tags[i])], int(split.unseen[i])])
    run.finish([cfg["dataset"]])
    return 0


def _parse_seeds(text: str) -> list[tuple[int, float]]:
    seeds = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        node, _, t = part.partition(":")
        try:
            seeds.append((int(node), float(t)))
        except ValueError:
            raise ConfigError(f"bad seed {part!r}, expected node:time",
                              key="sampler.seeds") from None
    return seeds


def _batch_json(batch) -> str:
    obj = {
        "seed_nodes": batch.seed_nodes.tolist(),
        "seed_times": batch.seed_times.tolist(),
        "seed_locals": batch.seed_locals.tolist(),
        "node_map": batch.node_map.tolist(),
        "fanouts": list(batch.fanouts),
        "hops": [{"src": h.src.tolist(), "dst": h.dst.tolist(),
                  "t": h.t.tolist(), "eid": h.eid.tolist()}
                 for h in batch.hops],
    }
    return json.dumps(obj, sort_keys=True, separators=(",", ":")) + "\n"


def cmd_sample(cfg) -> int:
    g, _ = _load_dataset(cfg)
    sc = cfg["sampler"]
    idx = build_index(g, directed=_directed(cfg))
    strategy = _strategy(cfg)
    streams = RngStreams(cfg["seed"]).substreams("sampler")
    run = _Run(cfg, "sample")

    def emit(i: int, batch):
        with open(run.path(f"batch_{i:05d}.bin"), "wb") as fh:
            fh.write(encode_flat_batch(batch))
        run.write_text(f"batch_{i:05d}.json", _batch_json(batch))

    if sc["seeds"]:
        seeds = _parse_seeds(sc["seeds"])
        emit(0, sample_khop(idx, seeds, sc["fanouts"], strategy, streams,
                            time_bound=sc["time_bound"]))
        n_batches = 1
    elif sc["link_batches"]:
        n_batches = 0
        for b, win in enumerate(iterate_link_batches(g, sc["batch_size"])):
            if sc["limit"] and b >= sc["limit"]:
                break
            # Seeds are the window's endpoints at their own event times.
            seeds = []
            for s, d, t in zip(win.src.tolist(), win.dst.tolist(), win.t.tolist()):
                seeds.append((s, t))
                seeds.append((d, t))
            emit(b, sample_khop(idx, seeds, sc["fanouts"], strategy,
                                streams.substreams(str(b)),
                                time_bound=sc["time_bound"]))
            with open(run.path(f"positives_{b:05d}.csv"), "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["src", "dst", "t", "event_id"])
                for s, d, t, e in zip(win.src, win.dst, win.t, win.eid):
                    w.writerow([s, d, repr(float(t)), e])
            n_batches += 1
    else:
        raise ConfigError("sample needs sampler.seeds or sampler.link_batches",
                          key="sampler.seeds")
    run.extra["batches"] = n_batches
    run.finish([cfg["dataset"]])
    return 0


def _negative_windows(cfg, g):
    """(window, positives) pairs the negatives command iterates."""
    nc = cfg["negatives"]
    if nc["window"]:
        lo, _, hi = nc["window"].partition(":")
        try:
            window = (float(lo), float(hi))
        except ValueError:
            raise ConfigError(f"bad negatives.window {nc['window']!r}, "
                              "expected start:end", key="negatives.window") from None
        mask = g.edge_add_mask() & (g.t >= window[0]) & (g.t < window[1])
        yield window, list(zip(g.src[mask].tolist(), g.dst[mask].tolist()))
        return
    mask = None
    if nc["scope"] == "test":
        mask = chronological_split(g, _ratios(cfg)).mask("test")
    elif nc["scope"] != "all":
        raise ConfigError(f"unknown negatives.scope {nc['scope']!r}",
                          key="negatives.scope")
    for win in iterate_link_batches(g, cfg["eval"]["batch_size"], mask=mask):
        yield ((win.t_start, win.t_end),
               list(zip(win.src.tolist(), win.dst.tolist())))


def cmd_negatives(cfg) -> int:
    g, _ = _load_dataset(cfg)
    nc = cfg["negatives"]
    directed = _directed(cfg)
    streams = RngStreams(cfg["seed"])
    run = _Run(cfg, "negatives")
    saturated = shortfall = False
    with open(run.path("negatives.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["src", "dst", "window_start", "window_end", "strategy"])
        for b, (window, positives) in enumerate(_negative_windows(cfg, g)):
            gen = streams.stream("negatives", b)
            if nc["strategy"] == "random":
                negs = random_negatives(g, window, positives, nc["per_positive"],
                                        gen, directed, nc["corrupt_both"])
            else:
                negs = historical_negatives(g, window,
                                            nc["per_positive"] * len(positives),
                                            gen, directed, nc["fallback"])
            saturated |= negs.saturated
            shortfall |= negs.shortfall
            for s, d in negs.pairs():
                w.writerow([s, d, repr(window[0]), repr(window[1]),
                            nc["strategy"]])
    run.extra["flags"] = {"saturated": saturated, "shortfall": shortfall}
    run.finish([cfg["dataset"]])
    return 0


def _build_scorer(cfg, g, split):
    variant = cfg["scorer"]["variant"]
    directed = _directed(cfg)
    if variant == "edgebank-inf":
        return EdgeBank(directed=directed)
    if variant == "edgebank-window":
        w = cfg["scorer"]["window"]
        if not w > 0:
            w = split.t_train_end - g.t_min
        return EdgeBank(window=w, directed=directed)
    raise ConfigError(f"unknown scorer.variant {variant!r}", key="scorer.variant")


def _write_report(run: _Run, report):
    run.write_text("metrics.txt", report.to_kv_text())
    run.write_text("metrics.csv", report.csv_header() + report.csv_row())


def cmd_eval_link(cfg) -> int:
    g, _ = _load_dataset(cfg)
    split = chronological_split(g, _ratios(cfg))
    scorer = _build_scorer(cfg, g, split)
    nc = cfg["negatives"]
    spec = NegativeSpec(strategy=nc["strategy"], per_positive=nc["per_positive"],
                        seed=cfg["seed"], fallback=nc["fallback"],
                        corrupt_both=nc["corrupt_both"])
    report = evaluate_link_prediction(g, split, scorer, spec,
                                      batch_size=cfg["eval"]["batch_size"],
                                      rng=RngStreams(cfg["seed"]),
                                      directed=_directed(cfg))
    run = _Run(cfg, "eval-link")
    _write_report(run, report)
    run.finish([cfg["dataset"]])
    return 0


def _load_labels(cfg, g) -> tuple[object, bool]:
    mode = cfg["labels"]["mode"]
    if mode not in ("dynamic", "static"):
        raise ConfigError(f"unknown labels.mode {mode!r}", key="labels.mode")
    path = cfg["labels"]["path"]
    if not path:
        if mode == "static":
            raise ConfigError("static node labels need labels.path",
                              key="labels.path")
        rows = [(int(g.src[i]), float(g.t[i]), int(g.label[i]))
                for i in np.flatnonzero(g.label_mask)]
        if not rows:
            raise ConfigError("dataset has no event labels; set labels.path",
                              key="labels.path")
        return rows, True
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        body = list(reader)
    if mode == "dynamic":
        if header != ["node", "t", "label"]:
            raise SchemaError(f"{path}: dynamic labels need node,t,label header")
        return [(g.to_dense(_raw_id(r[0], g)), float(r[1]), int(r[2]))
                for r in body], True
    if header != ["node", "label"]:
        raise SchemaError(f"{path}: static labels need node,label header")
    return {g.to_dense(_raw_id(r[0], g)): int(r[1]) for r in body}, False


def _raw_id(value: str, g: TemporalGraph):
    if g.raw_ids is None or (g.raw_ids and isinstance(g.raw_ids[0], int)):
        return int(value)
    return value


def cmd_eval_node(cfg) -> int:
    g, _ = _load_dataset(cfg)
    split = chronological_split(g, _ratios(cfg))
    labels, dynamic = _load_labels(cfg, g)
    report = evaluate_node_classification(g, labels, split, dynamic=dynamic,
                                          rng=RngStreams(cfg["seed"]))
    run = _Run(cfg, "eval-node")
    _write_report(run, report)
    inputs = [cfg["dataset"]]
    if cfg["labels"]["path"]:
        inputs.append(cfg["labels"]["path"])
    run.finish(inputs)
    return 0


# -- entry point ---------------------------------------------------------------


def _parse_overrides(extra: list[str]) -> dict[str, str]:
    overrides = {}
    for arg in extra:
        if not arg.startswith("--") or "=" not in arg:
            raise ConfigError(f"expected --key.path=value, got {arg!r}")
        key, _, value = arg[2:].partition("=")
        overrides[key] = value
    return overrides


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="tgkit",
        description="Temporal graph pipelines: ingest, sample, discretize, evaluate.")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", default=None, help="YAML config file")
    args, extra = parser.parse_known_args(argv)

    handlers = {
        "ingest": cmd_ingest,
        "stats": cmd_stats,
        "snapshot": cmd_snapshot,
        "split": cmd_split,
        "sample": cmd_sample,
        "negatives": cmd_negatives,
        "eval-link": cmd_eval_link,
        "eval-node": cmd_eval_node,
    }
    try:
        cfg = load_config(args.config, _parse_overrides(extra))
        return handlers[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except CacheError as exc:
        print(f"cache error: {exc}", file=sys.stderr)
        return 2
    except (IngestError, SchemaError, SplitError, MetricError, FitError,
            ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
