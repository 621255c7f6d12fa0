import numpy as np
import pytest

from tgkit import (build_index, degree_before, ingest_events, last_event_time,
                   neighbors_before, neighbors_in_window)

from conftest import random_graph, scan_neighbors


def test_build_symmetrized(d0):
    idx = build_index(d0)
    assert neighbors_before(idx, 0, 99.0).tuples() == [(1, 1.0, 0), (2, 2.0, 1),
                                                       (1, 4.0, 3)]
    assert neighbors_before(idx, 3, 10.0).tuples() == [(2, 5.0, 4)]
    # Both orientations share the event id.
    assert neighbors_before(idx, 1, 99.0).tuples() == [(0, 1.0, 0), (2, 3.0, 2),
                                                       (0, 4.0, 3)]


def test_build_directed(d0):
    idx = build_index(d0, directed=True)
    assert neighbors_before(idx, 1, 99.0).tuples() == [(2, 3.0, 2)]
    assert neighbors_before(idx, 3, 99.0).tuples() == []


def test_empty_graph_offsets():
    idx = build_index(ingest_events([]))
    assert idx.indptr.tolist() == [0]
    assert len(idx) == 0


def test_self_loop_indexed_once():
    idx = build_index(ingest_events([(0, 0, 1.0)]))
    assert neighbors_before(idx, 0, 2.0).tuples() == [(0, 1.0, 0)]


def test_strict_before(d0):
    idx = build_index(d0)
    assert neighbors_before(idx, 0, 4.0).tuples() == [(1, 1.0, 0), (2, 2.0, 1)]
    # An event at exactly t must not be visible at t.
    assert neighbors_before(idx, 0, 1.0).tuples() == []


def test_window(d0):
    idx = build_index(d0)
    assert neighbors_in_window(idx, 0, 4.5, 2.0).tuples() == [(1, 4.0, 3)]
    assert len(neighbors_in_window(idx, 0, 4.5, 10.0)) == 3
    assert len(neighbors_in_window(idx, 2, 1.0, 5.0)) == 0


def test_window_requires_positive_w(d0):
    idx = build_index(d0)
    with pytest.raises(ValueError):
        neighbors_in_window(idx, 0, 4.5, 0.0)
    with pytest.raises(ValueError):
        neighbors_in_window(idx, 0, 4.5, -1.0)


def test_bounds_error(d0):
    idx = build_index(d0)
    with pytest.raises(IndexError):
        neighbors_before(idx, 4, 1.0)
    with pytest.raises(IndexError):
        degree_before(idx, -1, 1.0)


def test_degree_and_last_time(d0):
    idx = build_index(d0)
    assert degree_before(idx, 0, 4.5) == 3
    assert last_event_time(idx, 0, 4.5) == 4.0
    assert degree_before(idx, 0, 0.5) == 0
    assert last_event_time(idx, 0, 0.5) is None
    assert degree_before(idx, 2, 5.0) == 2
    assert last_event_time(idx, 2, 5.0) == 3.0


def test_entry_counts_match_modes():
    rng = np.random.default_rng(5)
    g = random_graph(rng, 20, 200)
    n_loops = int((g.src == g.dst).sum())
    assert len(build_index(g, directed=True)) == 200
    assert len(build_index(g)) == 2 * 200 - n_loops


def test_oracle_equivalence_moderate():
    rng = np.random.default_rng(42)
    for _ in range(20):
        g = random_graph(rng, int(rng.integers(2, 40)),
                         int(rng.integers(1, 400)))
        for directed in (False, True):
            idx = build_index(g, directed=directed)
            for _ in range(50):
                u = int(rng.integers(0, g.num_nodes))
                t = float(rng.uniform(-5, 110))
                w = float(rng.uniform(0.1, 120))
                assert (neighbors_before(idx, u, t).tuples()
                        == scan_neighbors(g, u, t, directed=directed))
                assert (neighbors_in_window(idx, u, t, w).tuples()
                        == scan_neighbors(g, u, t, w, directed=directed))


def test_degree_monotone():
    rng = np.random.default_rng(9)
    g = random_graph(rng, 15, 150)
    idx = build_index(g)
    for _ in range(200):
        u = int(rng.integers(0, 15))
        t1, t2 = sorted(rng.uniform(0, 120, 2))
        assert degree_before(idx, u, t1) <= degree_before(idx, u, t2)


def test_no_future_leakage_property():
    rng = np.random.default_rng(13)
    g = random_graph(rng, 25, 250)
    idx = build_index(g)
    for _ in range(300):
        u = int(rng.integers(0, 25))
        t = float(rng.uniform(0, 120))
        view = neighbors_before(idx, u, t)
        assert np.all(view.t < t)
