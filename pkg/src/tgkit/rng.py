"""Deterministic random streams for reproducible pipelines.

All randomness flows from one 64-bit seed. Independent substreams are
derived by a path of components (stage names, seed indices, hop
numbers) fed through `numpy.random.SeedSequence` into a Philox
counter-based generator, so results do not depend on scheduling order
and toggling one pipeline stage never shifts another stage's draws.
"""

from __future__ import annotations

import zlib

import numpy as np


def _encode(component) -> int:
    if isinstance(component, (int, np.integer)):
        return int(component)
    # Stable across processes and platforms, unlike hash().
    return zlib.crc32(str(component).encode("utf-8"))


class RngStreams:
    """Factory of independent generators keyed by (seed, *path)."""

    def __init__(self, seed: int):
        self.seed = int(seed)

    def stream(self, *path) -> np.random.Generator:
        entropy = (self.seed,) + tuple(_encode(c) for c in path)
        return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))

    def substreams(self, name: str) -> "RngStreams":
        """A nested factory: streams of the child are disjoint from the parent's."""
        return RngStreams(_mix(self.seed, _encode(name)))


def _mix(a: int, b: int) -> int:
    # splitmix64-style fold; only used to derive nested factory seeds.
    x = (a ^ (b + 0x9E3779B97F4A7C15)) & 0xFFFFFFFFFFFFFFFF
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & 0xFFFFFFFFFFFFFFFF
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & 0xFFFFFFFFFFFFFFFF
    return x ^ (x >> 31)


def draw_without_replacement(gen: np.random.Generator, n: int, k: int) -> np.ndarray:
    """k distinct indices from range(n), uniformly, by partial Fisher-Yates.

    Spelled out rather than delegated to `Generator.choice` so the draw
    sequence is pinned to the Philox bit stream and stays stable across
    numpy releases.
    """
    k = min(k, n)
    pool = np.arange(n, dtype=np.int64)
    for i in range(k):
        j = i + int(gen.integers(n - i))
        pool[i], pool[j] = pool[j], pool[i]
    return pool[:k]
