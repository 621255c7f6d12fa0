"""Memorization reference scorer for future link prediction.

Scores 1.0 for node pairs it remembers, 0.0 otherwise. The infinite
variant remembers every pair ever absorbed; the time-window variant
only pairs whose latest add falls inside [clock - window, clock).

The model is advanced batch-by-batch to each evaluation window's start
time, so memory always reflects exactly the events strictly before the
queries being scored; test-period edges enter memory as their batches
pass (streaming evaluation).
"""

from __future__ import annotations

import math

import numpy as np

from .core import EventKind, TemporalGraph


class EdgeBank:
    """Pair-memory scorer; `window=inf` gives the unlimited variant."""

    def __init__(self, window: float = math.inf, directed: bool = False):
        if not window > 0:
            raise ValueError(f"window must be positive, got {window}")
        self.window = float(window)
        self.directed = directed
        self.clock = -math.inf
        self._last_seen: dict[tuple[int, int], float] = {}

    def _key(self, u: int, v: int) -> tuple[int, int]:
        if self.directed or u <= v:
            return (u, v)
        return (v, u)

    def advance(self, g: TemporalGraph, new_clock: float) -> None:
        """Absorb edge-adds with t in [clock, new_clock); set clock.

        Rejects clock regression: memory is a strictly forward replay.
        """
        if new_clock < self.clock:
            raise ValueError(f"clock regression {self.clock} -> {new_clock}")
        start = int(np.searchsorted(g.t, self.clock, side="left"))
        end = int(np.searchsorted(g.t, new_clock, side="left"))
        for i in range(start, end):
            if g.kind[i] == EventKind.EDGE_ADD:
                self._last_seen[self._key(int(g.src[i]), int(g.dst[i]))] = float(g.t[i])
        self.clock = float(new_clock)
        if math.isfinite(self.window):
            horizon = self.clock - self.window
            self._last_seen = {k: t for k, t in self._last_seen.items()
                               if t >= horizon}

    def score(self, u: int, v: int) -> float:
        t = self._last_seen.get(self._key(u, v))
        if t is None:
            return 0.0
        return 1.0 if t >= self.clock - self.window else 0.0

    def score_pairs(self, src, dst) -> np.ndarray:
        out = np.zeros(len(src), dtype=np.float64)
        for i, (u, v) in enumerate(zip(src, dst)):
            out[i] = self.score(int(u), int(v))
        return out

    @property
    def memory_pairs(self) -> set[tuple[int, int]]:
        return set(self._last_seen)
