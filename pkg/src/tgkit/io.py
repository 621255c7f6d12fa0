"""Dataset file formats, binary cache, and statistics export.

Two wire formats are defined here and are the portability contract of
this package; both are little-endian with no padding between sections.

Event cache (magic ``TGEV``, version 1)::

    magic    4 bytes  "TGEV"
    version  u16
    nodes    u64
    events   u64  (= E)
    kinds    u8  x E
    src      u64 x E
    dst      u64 x E          (all-ones sentinel for node events)
    t        f64 x E
    labelbm  ceil(E/8) bytes  (bit i, LSB-first: event i has a label)
    labels   i32 x E          (0 where absent)
    features f32 x E x d      (row-major; d is derived from file size)

The raw-id vocabulary is not persisted: caches are dense-id form.
Because d is derived, an empty stream normalizes to d = 0.

Flat sampled batch (magic ``TGFB``, version 1)::

    magic    4 bytes  "TGFB"
    version  u16
    seeds    u64  (= S)
    hops     u64  (= H)
    nodes    u64  (= N, batch-local id count)
    edges    u64  (= E, across all hops)
    seed_loc u32 x S          (local id of each seed, in seed order)
    seed_t   f64 x S
    node_map u64 x N          (local -> global)
    offsets  u64 x (H+1)      (non-decreasing, offsets[H] = E)
    ends     u32 x 2E         (interleaved local src,dst pairs)
    edge_t   f64 x E
    edge_id  u64 x E
"""

from __future__ import annotations

import csv
import hashlib
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import (KIND_TO_NAME, NO_DST, SchemaError, TemporalGraph,
                   ingest_events)
from .features import FeatureBlock, FeatureTable, load_schema_sidecar
from .sampling import EdgeBlock, TemporalBatch
from .snapshot import SnapshotSpec, make_snapshots

CACHE_MAGIC = b"TGEV"
BATCH_MAGIC = b"TGFB"
CACHE_VERSION = 1
BATCH_VERSION = 1
_DST_SENTINEL = np.uint64(0xFFFFFFFFFFFFFFFF)


class CacheError(ValueError):
    """A binary cache file is malformed or of an unsupported version."""


# -- event CSV -------------------------------------------------------------


def _check_header(header: list[str], path) -> int:
    """Enforce the fixed column order; return the feature column count."""
    expected = ["src", "dst", "t"]
    if header[:3] != expected:
        raise SchemaError(f"{path}: header must start with src,dst,t, got {header[:3]}")
    rest = header[3:]
    if rest and rest[0] == "kind":
        rest = rest[1:]
    if rest and rest[0] == "label":
        rest = rest[1:]
    for i, name in enumerate(rest):
        if name != f"f{i}":
            raise SchemaError(f"{path}: unexpected column {name!r} "
                              f"(expected f{i}); unknown columns are an error")
    return len(rest)


def read_events_csv(path, schema_path=None) -> tuple[TemporalGraph, FeatureTable]:
    """Parse an event CSV into a graph plus its per-event feature block.

    Columns: src,dst,t then optional kind (default "add"), optional
    label, then f0..f{k-1}. Node events leave dst empty. Malformed rows
    report their 1-based line number.
    """
    path = Path(path)
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file, header row required") from None
        n_feat = _check_header(header, path)
        has_kind = "kind" in header
        has_label = "label" in header
        records = []
        feat_rows = []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise SchemaError(f"{path}:{lineno}: expected {len(header)} cells, "
                                  f"got {len(row)}")
            try:
                col = 3
                kind = "add"
                if has_kind:
                    kind = row[col] or "add"
                    col += 1
                label = None
                if has_label:
                    label = int(row[col]) if row[col] != "" else None
                    col += 1
                feats = [float(v) if v != "" else np.nan for v in row[col:]]
                dst = row[1] if row[1] != "" else None
                records.append((row[0], dst, float(row[2]), kind, label))
                feat_rows.append(feats)
            except (ValueError, KeyError) as exc:
                raise SchemaError(f"{path}:{lineno}: {exc}") from None

    g = ingest_events(records)
    table = FeatureTable()
    if n_feat:
        # Reorder feature rows with the same stable time sort as ingest.
        order = np.argsort(np.array([r[2] for r in records]), kind="stable")
        mat = np.asarray(feat_rows, dtype=np.float64)[order]
        schema = load_schema_sidecar(schema_path) if schema_path else {}
        columns = {}
        kinds = {}
        for i in range(n_feat):
            name = f"f{i}"
            kinds[name] = schema.get(name, "numeric")
            if kinds[name] == "categorical":
                columns[name] = mat[:, i].astype(object)
            else:
                columns[name] = mat[:, i]
        table.edge = FeatureBlock(columns, kinds, times=g.t.copy())
    return g, table


def write_events_csv(g: TemporalGraph, path, table: FeatureTable = None):
    """Write the stream back out in canonical order."""
    edge_block = table.edge if table is not None else None
    n_feat = len(edge_block.columns) if edge_block else 0
    has_label = bool(g.label_mask.any())
    header = ["src", "dst", "t", "kind"]
    if has_label:
        header.append("label")
    header += [f"f{i}" for i in range(n_feat)]
    feat_cols = list(edge_block.columns.values()) if edge_block else []
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for e in g.iter_events():
            row = [g.to_raw(e.src),
                   "" if e.dst is None else g.to_raw(e.dst),
                   repr(e.t), KIND_TO_NAME[e.kind]]
            if has_label:
                row.append("" if e.label is None else e.label)
            for col in feat_cols:
                v = col[e.id]
                row.append("" if isinstance(v, float) and np.isnan(v) else repr(float(v)))
            writer.writerow(row)


# -- binary cache -----------------------------------------------------------


def write_cache(path, g: TemporalGraph, table: FeatureTable = None):
    """Serialize graph plus numeric edge features; byte-deterministic."""
    e = g.num_events
    if table is not None and table.edge is not None:
        feats = table.edge.matrix().astype("<f4")
    else:
        feats = np.empty((e, 0), dtype="<f4")
    dst = g.dst.astype(np.int64).copy()
    dst_u = dst.astype("<u8")
    dst_u[dst == NO_DST] = _DST_SENTINEL
    parts = [
        CACHE_MAGIC,
        struct.pack("<H", CACHE_VERSION),
        struct.pack("<Q", g.num_nodes),
        struct.pack("<Q", e),
        g.kind.astype("<u1").tobytes(),
        g.src.astype("<u8").tobytes(),
        dst_u.tobytes(),
        g.t.astype("<f8").tobytes(),
        np.packbits(g.label_mask, bitorder="little").tobytes(),
        g.label.astype("<i4").tobytes(),
        feats.tobytes(),
    ]
    with open(path, "wb") as fh:
        fh.write(b"".join(parts))


def read_cache(path) -> tuple[TemporalGraph, FeatureTable]:
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != CACHE_MAGIC:
        raise CacheError(f"{path}: bad magic {data[:4]!r}")
    (version,) = struct.unpack_from("<H", data, 4)
    if version != CACHE_VERSION:
        raise CacheError(f"{path}: unsupported cache version {version}")
    num_nodes, e = struct.unpack_from("<QQ", data, 6)
    off = 22
    kind = np.frombuffer(data, "<u1", e, off); off += e
    src = np.frombuffer(data, "<u8", e, off).astype(np.int64); off += 8 * e
    dst_u = np.frombuffer(data, "<u8", e, off); off += 8 * e
    t = np.frombuffer(data, "<f8", e, off).astype(np.float64); off += 8 * e
    bm_len = (e + 7) // 8
    bitmap = np.frombuffer(data, "<u1", bm_len, off); off += bm_len
    label = np.frombuffer(data, "<i4", e, off).astype(np.int32); off += 4 * e
    remaining = len(data) - off
    if remaining % 4 != 0 or (e and remaining % (4 * e) != 0):
        raise CacheError(f"{path}: truncated feature section")
    d = remaining // (4 * e) if e else 0
    feats = np.frombuffer(data, "<f4", e * d, off).reshape(e, d)

    dst = dst_u.astype(np.int64, casting="unsafe")
    dst = np.where(dst_u == _DST_SENTINEL, np.int64(NO_DST), dst)
    label_mask = np.unpackbits(bitmap, bitorder="little")[:e].astype(bool)
    g = TemporalGraph(num_nodes, kind.astype(np.uint8).copy(), src.copy(),
                      dst.copy(), t.copy(), label.copy(), label_mask)
    table = FeatureTable()
    if d:
        cols = {f"f{i}": feats[:, i].astype(np.float64) for i in range(d)}
        table.edge = FeatureBlock(cols, {k: "numeric" for k in cols},
                                  times=g.t.copy())
    return g, table


# -- flat batch wire format ---------------------------------------------------


def encode_flat_batch(batch: TemporalBatch) -> bytes:
    offsets = np.zeros(len(batch.hops) + 1, dtype="<u8")
    np.cumsum([len(h) for h in batch.hops], out=offsets[1:])
    ends = np.empty(2 * batch.num_edges, dtype="<u4")
    if batch.num_edges:
        src = np.concatenate([h.src for h in batch.hops])
        dst = np.concatenate([h.dst for h in batch.hops])
        ends[0::2] = src
        ends[1::2] = dst
        et = np.concatenate([h.t for h in batch.hops]).astype("<f8")
        eid = np.concatenate([h.eid for h in batch.hops]).astype("<u8")
    else:
        et = np.empty(0, dtype="<f8")
        eid = np.empty(0, dtype="<u8")
    parts = [
        BATCH_MAGIC,
        struct.pack("<H", BATCH_VERSION),
        struct.pack("<QQQQ", len(batch.seed_nodes), len(batch.hops),
                    len(batch.node_map), batch.num_edges),
        batch.seed_locals.astype("<u4").tobytes(),
        batch.seed_times.astype("<f8").tobytes(),
        batch.node_map.astype("<u8").tobytes(),
        offsets.tobytes(),
        ends.tobytes(),
        et.tobytes(),
        eid.tobytes(),
    ]
    return b"".join(parts)


def decode_flat_batch(data: bytes) -> TemporalBatch:
    if data[:4] != BATCH_MAGIC:
        raise CacheError(f"bad batch magic {data[:4]!r}")
    (version,) = struct.unpack_from("<H", data, 4)
    if version != BATCH_VERSION:
        raise CacheError(f"unsupported batch version {version}")
    s, h, n, e = struct.unpack_from("<QQQQ", data, 6)
    off = 38
    seed_locals = np.frombuffer(data, "<u4", s, off).astype(np.uint32); off += 4 * s
    seed_times = np.frombuffer(data, "<f8", s, off).astype(np.float64); off += 8 * s
    node_map = np.frombuffer(data, "<u8", n, off).astype(np.int64); off += 8 * n
    offsets = np.frombuffer(data, "<u8", h + 1, off).astype(np.int64); off += 8 * (h + 1)
    ends = np.frombuffer(data, "<u4", 2 * e, off).astype(np.uint32); off += 8 * e
    et = np.frombuffer(data, "<f8", e, off).astype(np.float64); off += 8 * e
    eid = np.frombuffer(data, "<u8", e, off).astype(np.int64); off += 8 * e
    if int(offsets[-1]) != e:
        raise CacheError("batch offsets do not cover the edge section")
    hops = []
    for i in range(h):
        lo, hi = int(offsets[i]), int(offsets[i + 1])
        hops.append(EdgeBlock(ends[0::2][lo:hi].copy(), ends[1::2][lo:hi].copy(),
                              et[lo:hi].copy(), eid[lo:hi].copy()))
    seed_nodes = (node_map[seed_locals] if s else np.empty(0, np.int64))
    return TemporalBatch(seed_nodes.astype(np.int64), seed_times, seed_locals,
                         node_map, hops)


# -- statistics export --------------------------------------------------------


@dataclass
class StatsBundle:
    snapshot_rows: list[tuple]          # (index, t_start, t_end, nodes, edges)
    degree_hist: list[tuple[int, int]]  # (degree, node count)
    recurrence_ratio: float
    t_span: float
    num_nodes: int
    num_events: int


def export_stats(g: TemporalGraph, spec: SnapshotSpec,
                 directed: bool = False) -> StatsBundle:
    """Desk statistics: per-snapshot sizes, interaction-degree histogram,
    and the edge recurrence ratio (edge-adds whose pair appeared earlier)."""
    rows = []
    for snap in make_snapshots(g, spec) if not g.is_empty else []:
        active = len(set(snap.src.tolist()) | set(snap.dst.tolist()))
        rows.append((snap.index, snap.interval[0], snap.interval[1],
                     active, snap.num_edges))

    degree = np.zeros(g.num_nodes, dtype=np.int64)
    add = g.edge_add_mask()
    src, dst = g.src[add], g.dst[add]
    np.add.at(degree, src, 1)
    loops = src == dst
    np.add.at(degree, dst[~loops], 1)
    hist = [(int(d), int(c)) for d, c in
            zip(*np.unique(degree, return_counts=True))]

    seen: set[tuple[int, int]] = set()
    repeats = 0
    for u, v in zip(src.tolist(), dst.tolist()):
        key = (u, v) if directed or u <= v else (v, u)
        if key in seen:
            repeats += 1
        else:
            seen.add(key)
    n_adds = len(src)
    ratio = repeats / n_adds if n_adds else 0.0
    span = 0.0 if g.is_empty else g.t_max - g.t_min
    return StatsBundle(rows, hist, ratio, span, g.num_nodes, g.num_events)


def write_stats_csvs(bundle: StatsBundle, outdir, dataset_name: str) -> list[Path]:
    outdir = Path(outdir)
    snap_path = outdir / f"{dataset_name}.snapshots.csv"
    deg_path = outdir / f"{dataset_name}.degrees.csv"
    sum_path = outdir / f"{dataset_name}.summary.csv"
    with open(snap_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["snapshot", "t_start", "t_end", "nodes", "edges"])
        for idx, a, b, nodes, edges in bundle.snapshot_rows:
            w.writerow([idx, repr(a), repr(b), nodes, edges])
    with open(deg_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["degree", "count"])
        w.writerows(bundle.degree_hist)
    with open(sum_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["num_nodes", "num_events", "recurrence_ratio", "t_span"])
        w.writerow([bundle.num_nodes, bundle.num_events,
                    repr(bundle.recurrence_ratio), repr(bundle.t_span)])
    return [snap_path, deg_path, sum_path]


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()
