"""Per-node, time-sorted adjacency index over the event stream.

Only edge-add events are indexed. Layout is CSR: one contiguous block
per node holding (neighbor, timestamp, event id) sorted by (t, event
id), so "neighbors strictly before t" is a binary search plus a slice.
Edge deletes never remove index entries; deletion semantics belong to
snapshot materialization, not to interaction sampling.

The index is immutable after build and safe for concurrent reads.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import TemporalGraph


@dataclass(frozen=True)
class NeighborView:
    """Zero-copy view of one node's index entries in time order."""

    nbr: np.ndarray
    t: np.ndarray
    eid: np.ndarray

    def __len__(self) -> int:
        return len(self.nbr)

    def tuples(self) -> list[tuple[int, float, int]]:
        return list(zip(self.nbr.tolist(), self.t.tolist(), self.eid.tolist()))


class TemporalAdjacency:
    """CSR adjacency with per-node (t, event id) ordering.

    `directed=False` (the default, conventional for interaction
    networks) stores both orientations of every edge under the same
    event id; self-loops are stored once.
    """

    def __init__(self, num_nodes, indptr, nbr, t, eid, directed):
        self.num_nodes = int(num_nodes)
        self.indptr = indptr
        self.nbr = nbr
        self.t = t
        self.eid = eid
        self.directed = bool(directed)
        for arr in (indptr, nbr, t, eid):
            arr.setflags(write=False)

    def __len__(self) -> int:
        return len(self.nbr)

    def _check_node(self, u: int):
        if not 0 <= u < self.num_nodes:
            raise IndexError(f"node {u} out of range [0, {self.num_nodes})")

    def _end_before(self, u: int, t: float) -> int:
        """Absolute position of the first entry of u with t' >= t."""
        lo = self.indptr[u]
        hi = self.indptr[u + 1]
        return lo + int(np.searchsorted(self.t[lo:hi], t, side="left"))


def build_index(g: TemporalGraph, directed: bool = False) -> TemporalAdjacency:
    """Index the edge-add events of `g`."""
    mask = g.edge_add_mask()
    src = g.src[mask]
    dst = g.dst[mask]
    t = g.t[mask]
    eid = np.flatnonzero(mask).astype(np.int64)

    if directed:
        node, nbr = src, dst
    else:
        loops = src == dst
        node = np.concatenate([src, dst[~loops]])
        nbr = np.concatenate([dst, src[~loops]])
        t = np.concatenate([t, t[~loops]])
        eid = np.concatenate([eid, eid[~loops]])

    order = np.lexsort((eid, t, node))
    node = node[order]
    counts = np.bincount(node, minlength=g.num_nodes)
    indptr = np.zeros(g.num_nodes + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])
    return TemporalAdjacency(g.num_nodes, indptr, nbr[order], t[order],
                             eid[order], directed)


def neighbors_before(idx: TemporalAdjacency, u: int, t: float) -> NeighborView:
    """All entries of u with timestamp strictly below t, in time order.

    Strictness is deliberate: an event at exactly t must not inform a
    prediction at t.
    """
    idx._check_node(u)
    lo = idx.indptr[u]
    end = idx._end_before(u, t)
    return NeighborView(idx.nbr[lo:end], idx.t[lo:end], idx.eid[lo:end])


def neighbors_in_window(idx: TemporalAdjacency, u: int, t: float,
                        w: float) -> NeighborView:
    """Entries of u with timestamp in the half-open window [t - w, t)."""
    if not w > 0:
        raise ValueError(f"window must be positive, got {w}")
    idx._check_node(u)
    lo = idx.indptr[u]
    end = idx._end_before(u, t)
    start = lo + int(np.searchsorted(idx.t[lo:end], t - w, side="left"))
    return NeighborView(idx.nbr[start:end], idx.t[start:end], idx.eid[start:end])


def degree_before(idx: TemporalAdjacency, u: int, t: float) -> int:
    idx._check_node(u)
    return int(idx._end_before(u, t) - idx.indptr[u])


def last_event_time(idx: TemporalAdjacency, u: int, t: float) -> Optional[float]:
    """Largest indexed timestamp of u strictly below t, if any."""
    idx._check_node(u)
    end = idx._end_before(u, t)
    if end == idx.indptr[u]:
        return None
    return float(idx.t[end - 1])
