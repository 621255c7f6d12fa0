"""Temporal negative edge sampling for training and evaluation.

Two strategies over an evaluation window [t_start, t_end):

* random: corrupt the destination of each positive with a node whose
  pair has never had an edge-add before t_end;
* historical: pairs seen strictly before t_start that do not recur
  inside the window.

Both are pure functions of immutable inputs plus an explicit
generator, so they are parallel-safe and reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .core import TemporalGraph
from .rng import draw_without_replacement

# Rejection cap per positive, scaled by Q; dense graphs hit it and get
# flagged rather than looping forever.
REJECTION_CAP_FACTOR = 1000


@dataclass(frozen=True)
class NegativeSpec:
    strategy: str = "random"        # random | historical
    per_positive: int = 1
    seed: int = 0
    fallback: str = "to-random"     # to-random | strict
    corrupt_both: bool = False      # random only: resample both endpoints

    def __post_init__(self):
        if self.strategy not in ("random", "historical"):
            raise ValueError(f"unknown negative strategy {self.strategy!r}")
        if self.per_positive < 1:
            raise ValueError("per_positive must be >= 1")
        if self.fallback not in ("to-random", "strict"):
            raise ValueError(f"unknown fallback {self.fallback!r}")


class SeenSet:
    """Node pairs with at least one edge-add inside a time range."""

    def __init__(self, pairs: set[tuple[int, int]], directed: bool):
        self.pairs = pairs
        self.directed = directed

    def key(self, u: int, v: int) -> tuple[int, int]:
        if self.directed or u <= v:
            return (u, v)
        return (v, u)

    def __contains__(self, pair) -> bool:
        return self.key(*pair) in self.pairs

    def __len__(self) -> int:
        return len(self.pairs)


def build_seen_set(g: TemporalGraph, t_lo: float, t_hi: float,
                   directed: bool = False) -> SeenSet:
    """Pairs with >= 1 edge-add in [t_lo, t_hi)."""
    if t_lo > t_hi:
        raise ValueError(f"invalid range [{t_lo}, {t_hi})")
    mask = g.edge_add_mask() & (g.t >= t_lo) & (g.t < t_hi)
    src = g.src[mask]
    dst = g.dst[mask]
    if not directed:
        lo = np.minimum(src, dst)
        hi = np.maximum(src, dst)
        src, dst = lo, hi
    return SeenSet(set(zip(src.tolist(), dst.tolist())), directed)


@dataclass
class NegativeBatch:
    """Sampled negatives plus protocol flags.

    `counts[i]` is how many negatives belong to positive i for
    strategies that group per positive; `None` for pooled draws.
    """

    src: np.ndarray
    dst: np.ndarray
    counts: Optional[np.ndarray] = None
    saturated: bool = False
    shortfall: bool = False

    def __len__(self) -> int:
        return len(self.src)

    def pairs(self) -> list[tuple[int, int]]:
        return list(zip(self.src.tolist(), self.dst.tolist()))


def random_negatives(g: TemporalGraph, window: tuple[float, float],
                     positives: Sequence[tuple[int, int]], q: int,
                     rng: np.random.Generator, directed: bool = False,
                     corrupt_both: bool = False) -> NegativeBatch:
    """Per positive (u, v), draw q never-seen corruptions.

    A corruption (u, v') is admissible when v' != u, the pair has no
    edge-add anywhere before the window's end, and it is not itself a
    positive of this window. Draws are without replacement per
    positive. After REJECTION_CAP_FACTOR * q rejections for one
    positive the batch is flagged saturated and carries what was found.
    """
    if g.num_nodes < 2:
        raise ValueError("need at least 2 nodes to corrupt pairs")
    t_end = window[1]
    seen = build_seen_set(g, -np.inf, t_end, directed)
    pos_keys = {seen.key(u, v) for u, v in positives}

    n = g.num_nodes
    cap = REJECTION_CAP_FACTOR * q
    out_src: list[int] = []
    out_dst: list[int] = []
    counts = np.zeros(len(positives), dtype=np.int64)
    saturated = False
    for i, (u, v) in enumerate(positives):
        chosen: set[tuple[int, int]] = set()
        rejections = 0
        while len(chosen) < q:
            if corrupt_both:
                cu = int(rng.integers(n))
                cv = int(rng.integers(n))
            else:
                cu = u
                cv = int(rng.integers(n))
            key = seen.key(cu, cv)
            if cu == cv or key in seen.pairs or key in pos_keys or key in chosen:
                rejections += 1
                if rejections >= cap:
                    saturated = True
                    break
                continue
            chosen.add(key)
            out_src.append(cu)
            out_dst.append(cv)
            counts[i] += 1
    return NegativeBatch(np.array(out_src, dtype=np.int64),
                         np.array(out_dst, dtype=np.int64),
                         counts, saturated=saturated)


def historical_negatives(g: TemporalGraph, window: tuple[float, float],
                         q_total: int, rng: np.random.Generator,
                         directed: bool = False,
                         fallback: str = "strict") -> NegativeBatch:
    """Draw q_total pairs seen before t_start but absent inside the window.

    The pool is a set of pairs (multiplicity ignored); draws are
    uniform without replacement. When the pool is too small,
    `fallback="to-random"` tops up by corrupting the window's own
    positives, while `fallback="strict"` returns the whole pool with
    the shortfall flag set.
    """
    t_start, t_end = window
    if not g.is_empty and t_start < g.t_min:
        raise ValueError(f"window start {t_start} precedes t_min {g.t_min}")
    t_min = -np.inf if g.is_empty else g.t_min
    before = build_seen_set(g, t_min, t_start, directed)
    inside = build_seen_set(g, t_start, t_end, directed)
    pool = sorted(before.pairs - inside.pairs)

    take = min(q_total, len(pool))
    pick = draw_without_replacement(rng, len(pool), take)
    src = np.array([pool[i][0] for i in pick], dtype=np.int64)
    dst = np.array([pool[i][1] for i in pick], dtype=np.int64)
    if take == q_total:
        return NegativeBatch(src, dst)

    if fallback == "strict":
        return NegativeBatch(src, dst, shortfall=True)

    # Top up by corrupting the window positives round-robin.
    mask = g.edge_add_mask() & (g.t >= t_start) & (g.t < t_end)
    positives = list(zip(g.src[mask].tolist(), g.dst[mask].tolist()))
    missing = q_total - take
    if not positives:
        return NegativeBatch(src, dst, shortfall=True)
    targets = [positives[i % len(positives)] for i in range(missing)]
    top_up = random_negatives(g, window, targets, 1, rng, directed)
    return NegativeBatch(np.concatenate([src, top_up.src]),
                         np.concatenate([dst, top_up.dst]),
                         saturated=top_up.saturated,
                         shortfall=len(top_up) < missing)
