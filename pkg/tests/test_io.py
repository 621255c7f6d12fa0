from collections import Counter

import numpy as np
import pytest

from tgkit import (CacheError, FixedCount, MostRecent, RngStreams,
                   SnapshotSpec, build_index, decode_flat_batch,
                   encode_flat_batch, export_stats, read_cache,
                   read_events_csv, sample_khop, write_cache,
                   write_events_csv)
from tgkit.core import SchemaError

from conftest import random_graph

D0_CSV = """src,dst,t
0,1,1.0
0,2,2.0
1,2,3.0
0,1,4.0
2,3,5.0
"""


def _write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_read_d0_csv(tmp_path):
    g, table = read_events_csv(_write(tmp_path, "d0.csv", D0_CSV))
    assert g.num_events == 5
    assert g.t_min == 1.0 and g.t_max == 5.0
    assert table.edge is None


def test_csv_full_columns(tmp_path):
    text = ("src,dst,t,kind,label,f0,f1\n"
            "a,b,1.0,add,3,0.5,\n"
            "b,,2.0,node-update,,1.5,2.5\n")
    g, table = read_events_csv(_write(tmp_path, "x.csv", text))
    assert g.num_events == 2
    assert g.event(0).label == 3
    assert g.event(1).dst is None
    assert np.isnan(table.edge.columns["f1"][0])
    assert table.edge.columns["f1"][1] == 2.5


def test_csv_feature_rows_follow_sort(tmp_path):
    text = ("src,dst,t,f0\n"
            "a,b,2.0,20.0\n"
            "a,c,1.0,10.0\n")
    g, table = read_events_csv(_write(tmp_path, "x.csv", text))
    assert g.t.tolist() == [1.0, 2.0]
    assert table.edge.columns["f0"].tolist() == [10.0, 20.0]


def test_csv_unknown_column_is_loud(tmp_path):
    with pytest.raises(SchemaError, match="unknown columns"):
        read_events_csv(_write(tmp_path, "x.csv", "src,dst,t,weird\n0,1,1.0,2\n"))


def test_csv_header_order_enforced(tmp_path):
    with pytest.raises(SchemaError):
        read_events_csv(_write(tmp_path, "x.csv", "dst,src,t\n0,1,1.0\n"))


def test_csv_bad_row_reports_line(tmp_path):
    with pytest.raises(SchemaError, match=":3"):
        read_events_csv(_write(tmp_path, "x.csv",
                               "src,dst,t\n0,1,1.0\n0,1,oops\n"))
    with pytest.raises(SchemaError, match=":2"):
        read_events_csv(_write(tmp_path, "x.csv", "src,dst,t\n0,1\n"))


def test_csv_round_trip_preserves_multiset(tmp_path):
    rng = np.random.default_rng(12)
    g = random_graph(rng, 12, 80)
    path = tmp_path / "g.csv"
    write_events_csv(g, path)
    g2, _ = read_events_csv(path)
    assert sorted(g.t.tolist()) == sorted(g2.t.tolist())
    # Compare in raw-id space: re-ingestion may permute dense ids.
    orig = Counter(zip(g.src.tolist(), g.dst.tolist(), g.t.tolist()))
    back = Counter((int(g2.to_raw(s)), int(g2.to_raw(d)), t)
                   for s, d, t in zip(g2.src.tolist(), g2.dst.tolist(),
                                      g2.t.tolist()))
    assert orig == back


def test_cache_round_trip(tmp_path, d0):
    path = tmp_path / "d0.tgev"
    write_cache(path, d0)
    g2, table = read_cache(path)
    assert g2 == d0
    assert table.edge is None


def test_cache_round_trip_with_everything(tmp_path):
    text = ("src,dst,t,kind,label,f0,f1\n"
            "a,b,1.0,add,3,0.5,1.0\n"
            "b,,2.0,node-delete,,1.5,2.5\n"
            "a,b,3.0,delete,1,,\n")
    g, table = read_events_csv(_write(tmp_path, "x.csv", text))
    path = tmp_path / "x.tgev"
    write_cache(path, g, table)
    g2, t2 = read_cache(path)
    assert g2 == g
    got = t2.edge.matrix()
    want = table.edge.matrix()
    assert np.array_equal(np.isnan(got), np.isnan(want))
    assert np.allclose(np.nan_to_num(got), np.nan_to_num(want))


def test_cache_byte_deterministic(tmp_path, d0):
    a, b = tmp_path / "a.tgev", tmp_path / "b.tgev"
    write_cache(a, d0)
    write_cache(b, d0)
    assert a.read_bytes() == b.read_bytes()


def test_cache_bad_magic(tmp_path):
    p = tmp_path / "bad.tgev"
    p.write_bytes(b"NOPE" + b"\x00" * 30)
    with pytest.raises(CacheError, match="magic"):
        read_cache(p)


def test_cache_bad_version(tmp_path, d0):
    p = tmp_path / "v.tgev"
    write_cache(p, d0)
    raw = bytearray(p.read_bytes())
    raw[4] = 99
    p.write_bytes(bytes(raw))
    with pytest.raises(CacheError, match="version"):
        read_cache(p)


def test_flat_batch_round_trip(d0):
    idx = build_index(d0)
    batch = sample_khop(idx, [(3, 6.0), (0, 4.5)], [2, 2], MostRecent(),
                        RngStreams(1))
    assert decode_flat_batch(encode_flat_batch(batch)) == batch


def test_flat_batch_empty(d0):
    idx = build_index(d0)
    batch = sample_khop(idx, [], [2], MostRecent(), RngStreams(1))
    data = encode_flat_batch(batch)
    back = decode_flat_batch(data)
    assert back == batch
    assert back.node_map.tolist() == []


def test_flat_batch_bad_magic():
    with pytest.raises(CacheError):
        decode_flat_batch(b"XXXX" + b"\x00" * 40)


def test_stats_d0(d0):
    bundle = export_stats(d0, SnapshotSpec(FixedCount(2)))
    assert bundle.recurrence_ratio == pytest.approx(0.2)
    assert bundle.t_span == 4.0
    assert len(bundle.snapshot_rows) == 2
    # degree over symmetrized entries: 0:3, 1:3, 2:3, 3:1
    assert dict(bundle.degree_hist) == {1: 1, 3: 3}
