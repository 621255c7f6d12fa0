"""Conversion between event streams, snapshot sequences, and static graphs.

A snapshot sequence discretizes the stream into half-open windows (the
last window is extended just past the final timestamp so nothing is
orphaned). All snapshots of one conversion share the global vertex set.

Multi-edges between the same (src, dst) orientation are resolved by an
explicit coalescing policy:

* keep-all: one entry per edge-add event; deletes are ignored, so the
  per-window entries partition the full edge-add multiset;
* last: one entry per surviving pair, stamped with its latest add;
* count-weight: one entry per surviving pair, weighted by the number
  of adds since the pair was last deleted.

Under `last` and `count-weight` an edge-delete removes the pair
outright (a later add re-creates it); a delete with nothing to remove
is a validation concern, not an error here. Pairs keep their stored
orientation: coalescing never merges (u, v) with (v, u).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .core import EventKind, TemporalGraph

COALESCE_MODES = ("keep-all", "last", "count-weight")
ACCUMULATION_MODES = ("interval", "cumulative")


@dataclass(frozen=True)
class FixedWidth:
    width: float

    def __post_init__(self):
        if not self.width > 0:
            raise ValueError("width must be positive")


@dataclass(frozen=True)
class FixedCount:
    count: int

    def __post_init__(self):
        if self.count < 1:
            raise ValueError("count must be >= 1")


@dataclass(frozen=True)
class FixedEvents:
    events: int

    def __post_init__(self):
        if self.events < 1:
            raise ValueError("events per snapshot must be >= 1")


Partition = Union[FixedWidth, FixedCount, FixedEvents]


@dataclass(frozen=True)
class SnapshotSpec:
    partition: Partition
    coalesce: str = "count-weight"
    accumulation: str = "interval"

    def __post_init__(self):
        if self.coalesce not in COALESCE_MODES:
            raise ValueError(f"unknown coalesce mode {self.coalesce!r}")
        if self.accumulation not in ACCUMULATION_MODES:
            raise ValueError(f"unknown accumulation mode {self.accumulation!r}")


@dataclass
class Snapshot:
    """One static graph of the discretized sequence."""

    index: int
    interval: tuple[float, float]
    node_count: int
    src: np.ndarray
    dst: np.ndarray
    weight: np.ndarray   # int64 coalesced units
    rep_t: np.ndarray    # representative timestamp per entry

    @property
    def num_edges(self) -> int:
        return len(self.src)

    def pair_multiset(self) -> dict[tuple[int, int], int]:
        """(src, dst) -> total units, for partition/round-trip checks."""
        out: dict[tuple[int, int], int] = {}
        for s, d, w in zip(self.src.tolist(), self.dst.tolist(),
                           self.weight.tolist()):
            out[(s, d)] = out.get((s, d), 0) + int(w)
        return out

    def edge_dict(self) -> dict[tuple[int, int], int]:
        """(src, dst) -> weight; entries must be unique pairs."""
        return {(int(s), int(d)): int(w)
                for s, d, w in zip(self.src, self.dst, self.weight)}


class _PairState:
    """Replay state for last/count-weight coalescing."""

    def __init__(self):
        self.live: dict[tuple[int, int], tuple[int, float]] = {}

    def apply(self, kind: int, s: int, d: int, t: float):
        if kind == EventKind.EDGE_ADD:
            count, _ = self.live.get((s, d), (0, 0.0))
            self.live[(s, d)] = (count + 1, t)
        elif kind == EventKind.EDGE_DELETE:
            self.live.pop((s, d), None)

    def emit(self, coalesce: str):
        src, dst, weight, rep = [], [], [], []
        for (s, d), (count, last_t) in self.live.items():
            src.append(s)
            dst.append(d)
            weight.append(1 if coalesce == "last" else count)
            rep.append(last_t)
        return src, dst, weight, rep


def _coalesce_slice(g, ids, coalesce):
    """Coalesce the events with the given ids (already time-ordered)."""
    if coalesce == "keep-all":
        keep = ids[g.kind[ids] == EventKind.EDGE_ADD]
        return (g.src[keep].tolist(), g.dst[keep].tolist(),
                [1] * len(keep), g.t[keep].tolist())
    state = _PairState()
    for i in ids:
        state.apply(int(g.kind[i]), int(g.src[i]), int(g.dst[i]), float(g.t[i]))
    return state.emit(coalesce)


def _as_snapshot(index, interval, node_count, cols) -> Snapshot:
    src, dst, weight, rep = cols
    return Snapshot(index, interval, node_count,
                    np.array(src, dtype=np.int64),
                    np.array(dst, dtype=np.int64),
                    np.array(weight, dtype=np.int64),
                    np.array(rep, dtype=np.float64))


def _window_bounds(g: TemporalGraph, partition: Partition):
    """Per-window [a, b) bounds plus the event-id list of each window."""
    t_min, t_max = g.t_min, g.t_max
    all_ids = np.arange(g.num_events)
    if isinstance(partition, FixedEvents):
        m = partition.events
        slices = [all_ids[i:i + m] for i in range(0, g.num_events, m)]
        bounds = []
        for w, ids in enumerate(slices):
            a = float(g.t[ids[0]])
            b = (float(g.t[slices[w + 1][0]]) if w + 1 < len(slices)
                 else float(np.nextafter(t_max, np.inf)))
            bounds.append((a, b))
        return bounds, slices

    if isinstance(partition, FixedWidth):
        w = partition.width
        n = int(np.floor((t_max - t_min) / w)) + 1
        edges = [t_min + i * w for i in range(n + 1)]
    else:
        n = partition.count
        width = (t_max - t_min) / n
        edges = [t_min + i * width for i in range(n)]
        # Last window is closed at t_max: represent as half-open just past it.
        edges.append(float(np.nextafter(t_max, np.inf)))
    cuts = np.searchsorted(g.t, edges, side="left")
    bounds = [(float(edges[i]), float(edges[i + 1])) for i in range(n)]
    slices = [all_ids[cuts[i]:cuts[i + 1]] for i in range(n)]
    return bounds, slices


def make_snapshots(g: TemporalGraph, spec: SnapshotSpec) -> list[Snapshot]:
    """Discretize the stream into a snapshot sequence.

    `interval` accumulation coalesces each window's own events;
    `cumulative` coalesces everything before the window's end, so
    without deletes snapshot edge sets only grow.
    """
    if g.is_empty:
        return []
    bounds, slices = _window_bounds(g, spec.partition)
    snaps = []
    if spec.accumulation == "interval":
        for i, (interval, ids) in enumerate(zip(bounds, slices)):
            snaps.append(_as_snapshot(i, interval, g.num_nodes,
                                      _coalesce_slice(g, ids, spec.coalesce)))
        return snaps

    if spec.coalesce == "keep-all":
        for i, interval in enumerate(bounds):
            prefix = np.arange(int(np.searchsorted(g.t, interval[1], side="left")))
            snaps.append(_as_snapshot(i, interval, g.num_nodes,
                                      _coalesce_slice(g, prefix, "keep-all")))
        return snaps

    # Incremental replay for cumulative last/count-weight.
    state = _PairState()
    cursor = 0
    for i, interval in enumerate(bounds):
        end = int(np.searchsorted(g.t, interval[1], side="left"))
        for j in range(cursor, end):
            state.apply(int(g.kind[j]), int(g.src[j]), int(g.dst[j]), float(g.t[j]))
        cursor = end
        snaps.append(_as_snapshot(i, interval, g.num_nodes,
                                  state.emit(spec.coalesce)))
    return snaps


def to_static(g: TemporalGraph, coalesce: str = "count-weight") -> Snapshot:
    """Collapse the whole stream into one static graph.

    Deletes are applied in the cumulative sense; the temporal dimension
    survives only as each entry's representative timestamp.
    """
    if g.is_empty:
        return Snapshot(0, (0.0, 0.0), g.num_nodes,
                        np.empty(0, np.int64), np.empty(0, np.int64),
                        np.empty(0, np.int64), np.empty(0, np.float64))
    interval = (g.t_min, float(np.nextafter(g.t_max, np.inf)))
    ids = np.arange(g.num_events)
    return _as_snapshot(0, interval, g.num_nodes,
                        _coalesce_slice(g, ids, coalesce))


def snapshots_to_events(snaps: Sequence[Snapshot]) -> TemporalGraph:
    """Assign continuous timestamps to a snapshot sequence.

    Every coalesced unit of snapshot i becomes an edge-add at t = i, so
    a weight-w entry emits w events. Node ids are taken as already
    dense over the shared vertex set; no remapping happens.
    """
    if not snaps:
        return TemporalGraph.from_dense(0, [], [], [])
    counts = {s.node_count for s in snaps}
    if len(counts) != 1:
        raise ValueError(f"snapshots disagree on node_count: {sorted(counts)}")
    node_count = counts.pop()
    src_parts, dst_parts, t_parts = [], [], []
    for i, snap in enumerate(snaps):
        reps = snap.weight.astype(np.int64)
        src_parts.append(np.repeat(snap.src, reps))
        dst_parts.append(np.repeat(snap.dst, reps))
        t_parts.append(np.full(int(reps.sum()), float(i)))
    return TemporalGraph.from_dense(node_count,
                                    np.concatenate(src_parts),
                                    np.concatenate(dst_parts),
                                    np.concatenate(t_parts))
