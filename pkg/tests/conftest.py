import numpy as np
import pytest

from tgkit import TemporalGraph, ingest_events

# Canonical desk example used across the suite: five edge adds,
# (0,1)@1 (0,2)@2 (1,2)@3 (0,1)@4 (2,3)@5.
D0_RECORDS = [(0, 1, 1.0), (0, 2, 2.0), (1, 2, 3.0), (0, 1, 4.0), (2, 3, 5.0)]


@pytest.fixture
def d0() -> TemporalGraph:
    return ingest_events(D0_RECORDS)


def random_graph(rng: np.random.Generator, num_nodes: int = 30,
                 num_events: int = 300, t_span: float = 100.0,
                 self_loops: bool = True) -> TemporalGraph:
    """Random interaction stream with dense ids, built via the fast path."""
    src = rng.integers(0, num_nodes, num_events)
    dst = rng.integers(0, num_nodes, num_events)
    if not self_loops:
        bump = (src == dst)
        dst[bump] = (dst[bump] + 1) % num_nodes
    t = np.sort(rng.uniform(0.0, t_span, num_events))
    return TemporalGraph.from_dense(num_nodes, src, dst, t)


def scan_neighbors(g: TemporalGraph, u: int, t: float, w: float = None,
                   directed: bool = False):
    """Linear-scan oracle for the adjacency index, straight off the events."""
    out = []
    for i in range(g.num_events):
        if g.kind[i] != 0:
            continue
        s, d, ts = int(g.src[i]), int(g.dst[i]), float(g.t[i])
        nbr = None
        if s == u:
            nbr = d
        elif d == u and not directed:
            nbr = s
        if nbr is None:
            continue
        if ts >= t:
            continue
        if w is not None and ts < t - w:
            continue
        out.append((nbr, ts, i))
    out.sort(key=lambda e: (e[1], e[2]))
    return out
