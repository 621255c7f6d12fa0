"""Leakage-free temporal neighborhood sampling.

Two strategies: `MostRecent` takes the k latest interactions strictly
before the query time; `Uniform` draws without replacement from the
interactions inside [t - w, t). Neither ever pads: callers get at most
k entries and may get fewer.

k-hop expansion keeps one subtree per seed, with the random stream for
hop h of seed i keyed by (global seed, i, h), so a batch is identical
no matter how work is scheduled. By default every hop of a seed is
sampled at the seed's own query time ("everything known up to now");
`time_bound="edge"` instead bounds each hop by the timestamp of the
edge that reached the frontier node, which recovers strictly causal
path expansion.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Sequence, Union

import numpy as np

from .core import TemporalGraph
from .index import NeighborView, TemporalAdjacency, neighbors_before, neighbors_in_window
from .rng import RngStreams, draw_without_replacement


@dataclass(frozen=True)
class Uniform:
    """Uniform draw from the past interactions inside [t - window, t)."""

    window: float

    def __post_init__(self):
        if not self.window > 0:
            raise ValueError(f"Uniform window must be positive, got {self.window}")


@dataclass(frozen=True)
class MostRecent:
    """Take the k most recent past interactions (ties: larger event id first)."""


Strategy = Union[Uniform, MostRecent]


@dataclass
class EdgeBlock:
    """Edges sampled at one hop, endpoints in batch-local ids."""

    src: np.ndarray   # uint32, expanded frontier node
    dst: np.ndarray   # uint32, sampled neighbor
    t: np.ndarray     # float64
    eid: np.ndarray   # int64, event id in the source graph

    @classmethod
    def empty(cls) -> "EdgeBlock":
        return cls(np.empty(0, np.uint32), np.empty(0, np.uint32),
                   np.empty(0, np.float64), np.empty(0, np.int64))

    def __len__(self) -> int:
        return len(self.src)

    def __eq__(self, other) -> bool:
        return (np.array_equal(self.src, other.src)
                and np.array_equal(self.dst, other.dst)
                and np.array_equal(self.t, other.t)
                and np.array_equal(self.eid, other.eid))


@dataclass
class TemporalBatch:
    """A k-hop sampled subgraph rooted at (node, time) seeds.

    `node_map` assigns batch-local ids in first-appearance order, seeds
    first; `seed_locals[i]` is the local id of seed i. Every edge
    timestamp is strictly below the query time of the seed whose
    expansion produced it.
    """

    seed_nodes: np.ndarray    # int64, global ids
    seed_times: np.ndarray    # float64
    seed_locals: np.ndarray   # uint32
    node_map: np.ndarray      # int64, local -> global
    hops: list[EdgeBlock]
    fanouts: list[int] = field(default_factory=list)

    @property
    def num_edges(self) -> int:
        return sum(len(h) for h in self.hops)

    def __eq__(self, other) -> bool:
        # fanouts are provenance metadata and not part of batch identity
        # (the wire format does not carry them).
        return (np.array_equal(self.seed_nodes, other.seed_nodes)
                and np.array_equal(self.seed_times, other.seed_times)
                and np.array_equal(self.seed_locals, other.seed_locals)
                and np.array_equal(self.node_map, other.node_map)
                and len(self.hops) == len(other.hops)
                and all(a == b for a, b in zip(self.hops, other.hops)))


def sample_neighbors(idx: TemporalAdjacency, u: int, t: float, k: int,
                     strategy: Strategy,
                     rng: np.random.Generator) -> NeighborView:
    """Sample up to k past neighbors of u at query time t.

    The result is never padded; an empty candidate set yields an empty
    view. MostRecent output is ordered (t desc, event id desc); Uniform
    output is in draw order. `rng` is only consumed by Uniform.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if isinstance(strategy, MostRecent):
        view = neighbors_before(idx, u, t)
        lo = max(len(view) - k, 0)
        return NeighborView(view.nbr[lo:][::-1], view.t[lo:][::-1],
                            view.eid[lo:][::-1])
    view = neighbors_in_window(idx, u, t, strategy.window)
    pick = draw_without_replacement(rng, len(view), k)
    return NeighborView(view.nbr[pick], view.t[pick], view.eid[pick])


def _search_positions(idx: TemporalAdjacency, nodes, times) -> np.ndarray:
    """First index at or after each (node, time) in the CSR time arrays."""
    out = np.empty(len(nodes), dtype=np.int64)
    indptr, tarr = idx.indptr, idx.t
    for i in range(len(nodes)):
        u = nodes[i]
        lo, hi = indptr[u], indptr[u + 1]
        out[i] = lo + np.searchsorted(tarr[lo:hi], times[i], side="left")
    return out


def _ragged_tail_indices(lo_per_entry, end_per_entry, k):
    """Per entry, absolute indices of the last min(k, count) slots, descending."""
    counts = end_per_entry - lo_per_entry
    kk = np.minimum(counts, k)
    total = int(kk.sum())
    if total == 0:
        return np.empty(0, np.int64), kk
    starts = np.concatenate([[0], np.cumsum(kk)[:-1]])
    within = np.arange(total, dtype=np.int64) - np.repeat(starts, kk)
    take = np.repeat(end_per_entry, kk) - 1 - within
    return take, kk


def sample_khop(idx: TemporalAdjacency, seeds: Sequence[tuple[int, float]],
                fanouts: Sequence[int], strategy: Strategy,
                rng: Union[RngStreams, int], time_bound: str = "seed") -> TemporalBatch:
    """Expand (node, time) seeds through `len(fanouts)` sampled hops.

    Each seed grows its own subtree. Within a hop the frontier carries a
    governing time per node: the seed's query time (`time_bound="seed"`)
    or, with `time_bound="edge"`, the timestamp of the edge through
    which the node was reached. Repeated (node, governing time) entries
    inside one seed's frontier are expanded once.
    """
    fanouts = [int(f) for f in fanouts]
    if not fanouts or any(f < 1 for f in fanouts):
        raise ValueError(f"fanouts must be non-empty and >= 1, got {fanouts}")
    if time_bound not in ("seed", "edge"):
        raise ValueError(f"time_bound must be 'seed' or 'edge', got {time_bound!r}")
    streams = rng if isinstance(rng, RngStreams) else RngStreams(rng)

    seed_nodes = np.asarray([s[0] for s in seeds], dtype=np.int64)
    seed_times = np.asarray([s[1] for s in seeds], dtype=np.float64)
    if len(seed_nodes) == 0:
        empty32 = np.empty(0, np.uint32)
        return TemporalBatch(seed_nodes, seed_times, empty32,
                             np.empty(0, np.int64), [], fanouts)

    f_nodes = seed_nodes
    f_times = seed_times
    f_seed = np.arange(len(seed_nodes), dtype=np.int64)

    hop_edges = []       # per hop: (gsrc, gdst, t, eid)
    for hop, k in enumerate(fanouts):
        if len(f_nodes) == 0:
            hop_edges.append((np.empty(0, np.int64), np.empty(0, np.int64),
                              np.empty(0, np.float64), np.empty(0, np.int64)))
            continue
        end = _search_positions(idx, f_nodes, f_times)
        if isinstance(strategy, MostRecent):
            take, kk = _ragged_tail_indices(idx.indptr[f_nodes], end, k)
        else:
            start = _search_positions(idx, f_nodes, f_times - strategy.window)
            counts = end - start
            gens: dict[int, np.random.Generator] = {}
            picks = []
            kk = np.minimum(counts, k)
            for i in range(len(f_nodes)):
                c = int(counts[i])
                if c == 0:
                    continue
                sid = int(f_seed[i])
                gen = gens.get(sid)
                if gen is None:
                    gen = streams.stream(sid, hop)
                    gens[sid] = gen
                picks.append(start[i] + draw_without_replacement(gen, c, k))
            take = (np.concatenate(picks) if picks
                    else np.empty(0, np.int64))
        gsrc = np.repeat(f_nodes, kk)
        seed_rep = np.repeat(f_seed, kk)
        gdst = idx.nbr[take]
        et = idx.t[take]
        eeid = idx.eid[take]
        hop_edges.append((gsrc, gdst, et, eeid))

        # Next frontier: sampled neighbors under their governing times,
        # deduplicated per seed.
        gov = np.repeat(f_times, kk) if time_bound == "seed" else et
        if len(gdst):
            order = np.lexsort((gov, gdst, seed_rep))
            s_, n_, g_ = seed_rep[order], gdst[order], gov[order]
            keep = np.ones(len(n_), dtype=bool)
            keep[1:] = (s_[1:] != s_[:-1]) | (n_[1:] != n_[:-1]) | (g_[1:] != g_[:-1])
            f_seed, f_nodes, f_times = s_[keep], n_[keep], g_[keep]
        else:
            f_seed = np.empty(0, np.int64)
            f_nodes = np.empty(0, np.int64)
            f_times = np.empty(0, np.float64)

    # Batch-local ids: first appearance over seeds, then hop edges in order.
    chunks = [seed_nodes]
    for gsrc, gdst, _, _ in hop_edges:
        chunks.append(gsrc)
        chunks.append(gdst)
    allnodes = np.concatenate(chunks)
    uniq, first = np.unique(allnodes, return_index=True)
    appearance = np.argsort(first, kind="stable")
    node_map = uniq[appearance]
    local_of_sorted = np.empty(len(uniq), dtype=np.int64)
    local_of_sorted[appearance] = np.arange(len(uniq))

    def localize(x):
        return local_of_sorted[np.searchsorted(uniq, x)].astype(np.uint32)

    hops = [EdgeBlock(localize(gs), localize(gd), et, eeid.astype(np.int64))
            for gs, gd, et, eeid in hop_edges]
    return TemporalBatch(seed_nodes, seed_times, localize(seed_nodes),
                         node_map, hops, fanouts)


@dataclass
class LinkBatch:
    """One chronological window of positive (edge-add) events."""

    src: np.ndarray
    dst: np.ndarray
    t: np.ndarray
    eid: np.ndarray
    t_start: float
    t_end: float     # exclusive; nextafter(last event time)

    def __len__(self) -> int:
        return len(self.src)


def iterate_link_batches(g: TemporalGraph, batch_size: int,
                         mask: np.ndarray = None) -> Iterator[LinkBatch]:
    """Consecutive chronological slices of the edge-add stream.

    Each window covers [first event t, nextafter(last event t)), so the
    window contains exactly its own events under half-open semantics.
    `mask` restricts which edge-add events participate (e.g. a split
    tag) and must be False on non-edge-add events it covers.
    """
    if batch_size < 1:
        raise ValueError(f"batch_size must be >= 1, got {batch_size}")
    take = g.edge_add_mask() if mask is None else (g.edge_add_mask() & mask)
    eids = np.flatnonzero(take)
    for pos in range(0, len(eids), batch_size):
        ids = eids[pos:pos + batch_size]
        ts = g.t[ids]
        yield LinkBatch(g.src[ids], g.dst[ids], ts, ids.astype(np.int64),
                        float(ts[0]), float(np.nextafter(ts[-1], np.inf)))
