"""Canonical in-memory representation of a temporal graph.

A temporal graph is stored as a chronologically sorted stream of timed
events (edge add/delete, node add/delete, node attribute update) over a
dense node id space. Raw node ids from the input are remapped to dense
ids in first-appearance order; the original ids are kept so the stream
can be serialized back out.

Ordering is total: events are sorted by timestamp with ingestion order
as the tiebreak, and event ids are reassigned to the position in that
canonical order, so ``events[i].id == i`` always holds.

Instances are immutable after construction and safe for concurrent
reads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum
from typing import Iterator, Optional, Sequence

import numpy as np


class EventKind(IntEnum):
    EDGE_ADD = 0
    EDGE_DELETE = 1
    NODE_ADD = 2
    NODE_DELETE = 3
    NODE_UPDATE = 4

    @property
    def is_edge(self) -> bool:
        return self in (EventKind.EDGE_ADD, EventKind.EDGE_DELETE)


# Names accepted in records and CSV `kind` columns.
KIND_NAMES = {
    "add": EventKind.EDGE_ADD,
    "delete": EventKind.EDGE_DELETE,
    "node-add": EventKind.NODE_ADD,
    "node-delete": EventKind.NODE_DELETE,
    "node-update": EventKind.NODE_UPDATE,
}
KIND_TO_NAME = {v: k for k, v in KIND_NAMES.items()}

# Sentinel for "no destination" in the columnar dst array (node events).
NO_DST = -1


class IngestError(ValueError):
    """A raw record cannot be turned into an event."""


class SchemaError(ValueError):
    """A file or table does not match its declared schema."""


@dataclass(frozen=True)
class Event:
    """One timed observation; the atom of the event stream."""

    id: int
    kind: EventKind
    src: int
    dst: Optional[int]
    t: float
    label: Optional[int] = None

    @property
    def pair(self) -> tuple[int, int]:
        if self.dst is None:
            raise ValueError("node event has no pair")
        return (self.src, self.dst)


class TemporalGraph:
    """Validated, chronologically sorted event store with dense node ids.

    Columnar storage (`kind`, `src`, `dst`, `t`, `label`) keeps bulk
    operations in numpy; `event(i)` materializes a single `Event` view.
    Node events carry ``NO_DST`` in the dst column.
    """

    def __init__(self, num_nodes, kind, src, dst, t, label, label_mask,
                 raw_ids=None):
        self.num_nodes = int(num_nodes)
        self.kind = kind
        self.src = src
        self.dst = dst
        self.t = t
        self.label = label
        self.label_mask = label_mask
        # raw_ids[dense] -> original id; None means ids were already dense.
        self.raw_ids = raw_ids
        self._raw_to_dense = (
            {r: i for i, r in enumerate(raw_ids)} if raw_ids is not None else None
        )
        for arr in (kind, src, dst, t, label, label_mask):
            arr.setflags(write=False)

    # -- construction ------------------------------------------------

    @classmethod
    def from_dense(cls, num_nodes, src, dst, t, kind=None, label=None):
        """Build from arrays whose node ids are already dense in [0, num_nodes).

        No id remapping happens; `num_nodes` may exceed the ids that
        actually appear (isolated nodes are legal). Events are sorted by
        (t, input position).
        """
        src = np.asarray(src, dtype=np.int64)
        dst = np.asarray(dst, dtype=np.int64)
        t = np.asarray(t, dtype=np.float64)
        n_ev = len(src)
        if kind is None:
            kind = np.full(n_ev, EventKind.EDGE_ADD, dtype=np.uint8)
        else:
            kind = np.asarray(kind, dtype=np.uint8)
        if label is None:
            label = np.zeros(n_ev, dtype=np.int32)
            label_mask = np.zeros(n_ev, dtype=bool)
        else:
            label = np.asarray(label, dtype=np.int32)
            label_mask = np.ones(n_ev, dtype=bool)
        if not np.all(np.isfinite(t)):
            bad = int(np.flatnonzero(~np.isfinite(t))[0])
            raise IngestError(f"record {bad}: non-finite timestamp")
        if n_ev and int(src.min()) < 0:
            raise IngestError("negative node id in dense input")
        hi = max(int(src.max(initial=-1)), int(dst.max(initial=-1))) if n_ev else -1
        if hi >= num_nodes:
            raise IngestError(f"node id {hi} out of range for num_nodes={num_nodes}")
        order = np.argsort(t, kind="stable")
        return cls(num_nodes, kind[order], src[order], dst[order], t[order],
                   label[order], label_mask[order], raw_ids=None)

    # -- basic properties ---------------------------------------------

    @property
    def num_events(self) -> int:
        return len(self.t)

    @property
    def is_empty(self) -> bool:
        return self.num_events == 0

    @property
    def t_min(self) -> float:
        if self.is_empty:
            raise ValueError("empty graph has no time range")
        return float(self.t[0])

    @property
    def t_max(self) -> float:
        if self.is_empty:
            raise ValueError("empty graph has no time range")
        return float(self.t[-1])

    def edge_add_mask(self) -> np.ndarray:
        return self.kind == EventKind.EDGE_ADD

    # -- id mapping ----------------------------------------------------

    def to_raw(self, dense_id: int):
        if self.raw_ids is None:
            return dense_id
        return self.raw_ids[dense_id]

    def to_dense(self, raw_id) -> int:
        if self._raw_to_dense is None:
            return int(raw_id)
        return self._raw_to_dense[raw_id]

    # -- event access ---------------------------------------------------

    def event(self, i: int) -> Event:
        d = int(self.dst[i])
        return Event(
            id=i,
            kind=EventKind(self.kind[i]),
            src=int(self.src[i]),
            dst=None if d == NO_DST else d,
            t=float(self.t[i]),
            label=int(self.label[i]) if self.label_mask[i] else None,
        )

    def iter_events(self) -> Iterator[Event]:
        return (self.event(i) for i in range(self.num_events))

    def to_records(self) -> list[tuple]:
        """Canonical-order raw records, suitable for re-ingestion."""
        out = []
        for e in self.iter_events():
            dst = None if e.dst is None else self.to_raw(e.dst)
            out.append((self.to_raw(e.src), dst, e.t, KIND_TO_NAME[e.kind], e.label))
        return out

    def __eq__(self, other) -> bool:
        if not isinstance(other, TemporalGraph):
            return NotImplemented
        return (
            self.num_nodes == other.num_nodes
            and np.array_equal(self.kind, other.kind)
            and np.array_equal(self.src, other.src)
            and np.array_equal(self.dst, other.dst)
            and np.array_equal(self.t, other.t)
            and np.array_equal(self.label, other.label)
            and np.array_equal(self.label_mask, other.label_mask)
        )

    def __repr__(self) -> str:
        span = "" if self.is_empty else f", t=[{self.t_min}, {self.t_max}]"
        return f"TemporalGraph(nodes={self.num_nodes}, events={self.num_events}{span})"


def _coerce_kind(value) -> EventKind:
    if isinstance(value, EventKind):
        return value
    if isinstance(value, (int, np.integer)):
        return EventKind(int(value))
    try:
        return KIND_NAMES[str(value)]
    except KeyError:
        raise IngestError(f"unknown event kind {value!r}") from None


def ingest_events(records: Sequence) -> TemporalGraph:
    """Turn raw event records into a `TemporalGraph`.

    Each record is ``(src, dst, t)``, ``(src, dst, t, kind)`` or
    ``(src, dst, t, kind, label)``; ``dst`` must be None for node
    events. Raw ids may be any hashable values; they are remapped to
    dense ids in first-appearance order (src before dst within one
    record), which preserves stream locality. Events are then stably
    sorted by timestamp, ingestion order breaking ties.

    Raises `IngestError` naming the record index for non-finite
    timestamps, edge events without a dst, or node events with one.
    """
    raw_to_dense: dict = {}
    raw_ids: list = []

    def dense(raw) -> int:
        got = raw_to_dense.get(raw)
        if got is None:
            got = len(raw_ids)
            raw_to_dense[raw] = got
            raw_ids.append(raw)
        return got

    n = len(records)
    src = np.empty(n, dtype=np.int64)
    dst = np.empty(n, dtype=np.int64)
    t = np.empty(n, dtype=np.float64)
    kind = np.empty(n, dtype=np.uint8)
    label = np.zeros(n, dtype=np.int32)
    label_mask = np.zeros(n, dtype=bool)

    for i, rec in enumerate(records):
        if len(rec) < 3:
            raise IngestError(f"record {i}: expected (src, dst, t, ...)")
        r_src, r_dst, r_t = rec[0], rec[1], rec[2]
        k = _coerce_kind(rec[3]) if len(rec) > 3 else EventKind.EDGE_ADD
        r_label = rec[4] if len(rec) > 4 else None
        try:
            t_val = float(r_t)
        except (TypeError, ValueError):
            raise IngestError(f"record {i}: unparseable timestamp {r_t!r}") from None
        if not np.isfinite(t_val):
            raise IngestError(f"record {i}: non-finite timestamp {r_t!r}")
        if k.is_edge and r_dst is None:
            raise IngestError(f"record {i}: edge event missing dst")
        if not k.is_edge and r_dst is not None:
            raise IngestError(f"record {i}: node event must not carry dst")
        src[i] = dense(r_src)
        dst[i] = dense(r_dst) if r_dst is not None else NO_DST
        t[i] = t_val
        kind[i] = k
        if r_label is not None:
            label[i] = int(r_label)
            label_mask[i] = True

    order = np.argsort(t, kind="stable")
    return TemporalGraph(len(raw_ids), kind[order], src[order], dst[order],
                         t[order], label[order], label_mask[order],
                         raw_ids=raw_ids)


# -- validation --------------------------------------------------------


@dataclass(frozen=True)
class ValidationFinding:
    code: str          # "delete-before-add" | "deleted-node-ref" | "duplicate"
    event_id: int
    message: str


@dataclass
class ValidationReport:
    """Advisory findings; never mutates the graph it describes."""

    findings: list[ValidationFinding] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.findings

    def count(self, code: str) -> int:
        return sum(1 for f in self.findings if f.code == code)

    def __len__(self) -> int:
        return len(self.findings)


def validate(g: TemporalGraph) -> ValidationReport:
    """Scan the stream in canonical order and report suspicious events.

    Reported: edge deletes whose directed pair was never added earlier,
    events referencing a node that is deleted at that point, and exact
    duplicate (src, dst, t, kind) tuples.
    """
    report = ValidationReport()
    added: set[tuple[int, int]] = set()
    deleted_nodes: set[int] = set()
    seen: set[tuple] = set()

    for i in range(g.num_events):
        k = EventKind(g.kind[i])
        s = int(g.src[i])
        d = int(g.dst[i])
        key = (s, d, float(g.t[i]), int(k))
        if key in seen:
            report.findings.append(ValidationFinding(
                "duplicate", i, f"event {i}: duplicate of earlier (src,dst,t,kind)"))
        else:
            seen.add(key)

        if k == EventKind.NODE_ADD:
            deleted_nodes.discard(s)
            continue
        refs = (s,) if d == NO_DST else (s, d)
        for node in refs:
            if node in deleted_nodes:
                report.findings.append(ValidationFinding(
                    "deleted-node-ref", i,
                    f"event {i}: references node {node} deleted earlier"))
        if k == EventKind.NODE_DELETE:
            deleted_nodes.add(s)
        elif k == EventKind.EDGE_ADD:
            added.add((s, d))
        elif k == EventKind.EDGE_DELETE:
            if (s, d) not in added:
                report.findings.append(ValidationFinding(
                    "delete-before-add", i,
                    f"event {i}: delete of ({s},{d}) with no prior add"))
    return report
