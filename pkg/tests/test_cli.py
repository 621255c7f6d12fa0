import json

import numpy as np
import pytest

from tgkit.cli import main
from tgkit.config import ConfigError, load_config, set_key

D0_CSV = """src,dst,t
0,1,1.0
0,2,2.0
1,2,3.0
0,1,4.0
2,3,5.0
"""


def _mid_csv(path, seed=0, nodes=30, events=400, labels=True):
    rng = np.random.default_rng(seed)
    t = np.sort(rng.uniform(0, 100, events))
    lines = ["src,dst,t,label" if labels else "src,dst,t"]
    for tt in t:
        u, v = rng.integers(0, nodes, 2)
        row = f"{u},{v},{float(tt)!r}"
        if labels:
            row += f",{rng.integers(0, 3)}"
        lines.append(row)
    path.write_text("\n".join(lines) + "\n")
    return path


@pytest.fixture
def d0_csv(tmp_path):
    p = tmp_path / "d0.csv"
    p.write_text(D0_CSV)
    return p


@pytest.fixture
def mid_csv(tmp_path):
    return _mid_csv(tmp_path / "mid.csv")


def _run(*args) -> int:
    return main(list(args))


def test_config_precedence(tmp_path):
    cfg_file = tmp_path / "run.yaml"
    cfg_file.write_text("seed: 7\nsampler:\n  fanouts: [3, 3]\n")
    cfg = load_config(cfg_file, {"sampler.fanouts": "5,2", "negatives.strategy":
                                 "historical"})
    assert cfg["seed"] == 7
    assert cfg["sampler"]["fanouts"] == [5, 2]
    assert cfg["negatives"]["strategy"] == "historical"


def test_config_unknown_key():
    with pytest.raises(ConfigError) as err:
        load_config(None, {"nope.key": "1"})
    assert "nope" in str(err.value)
    cfg = load_config(None, {})
    with pytest.raises(ConfigError):
        set_key(cfg, "sampler.bogus", "1")


def test_config_type_checks():
    with pytest.raises(ConfigError):
        load_config(None, {"seed": "not-a-number"})
    cfg = load_config(None, {"split.train": "0.5"})
    assert cfg["split"]["train"] == 0.5


def test_scorer_alias():
    cfg = load_config(None, {"scorer": "edgebank-window"})
    assert cfg["scorer"]["variant"] == "edgebank-window"


def test_ingest_outputs(d0_csv, tmp_path, capsys):
    out = tmp_path / "run"
    assert _run("ingest", f"--dataset={d0_csv}", f"--out={out}") == 0
    assert (out / "d0.tgev").exists()
    assert (out / "config.yaml").exists()
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["command"] == "ingest"
    assert str(d0_csv) in manifest["inputs"]
    assert "d0.tgev" in manifest["outputs"]
    assert manifest["dataset"]["events"] == 5


def test_eval_accepts_cache(d0_csv, mid_csv, tmp_path):
    out = tmp_path / "ing"
    assert _run("ingest", f"--dataset={mid_csv}", f"--out={out}") == 0
    out2 = tmp_path / "ev"
    assert _run("eval-link", f"--dataset={out / 'mid.tgev'}",
                f"--out={out2}") == 0
    assert (out2 / "metrics.txt").exists()


def test_sample_explicit_seed_dump(d0_csv, tmp_path):
    out = tmp_path / "s"
    assert _run("sample", f"--dataset={d0_csv}", f"--out={out}",
                "--sampler.seeds=3:6.0", "--sampler.fanouts=2,2",
                "--sampler.time_bound=edge") == 0
    dump = json.loads((out / "batch_00000.json").read_text())
    gmap = dump["node_map"]
    hop0 = {(gmap[s], gmap[d], t) for s, d, t in
            zip(dump["hops"][0]["src"], dump["hops"][0]["dst"],
                dump["hops"][0]["t"])}
    hop1 = {(gmap[s], gmap[d], t) for s, d, t in
            zip(dump["hops"][1]["src"], dump["hops"][1]["dst"],
                dump["hops"][1]["t"])}
    assert hop0 == {(3, 2, 5.0)}
    assert hop1 == {(2, 0, 2.0), (2, 1, 3.0)}
    assert (out / "batch_00000.bin").exists()


def test_sample_link_batches(mid_csv, tmp_path):
    out = tmp_path / "sb"
    assert _run("sample", f"--dataset={mid_csv}", f"--out={out}",
                "--sampler.link_batches=true", "--sampler.batch_size=50",
                "--sampler.limit=3") == 0
    for b in range(3):
        assert (out / f"batch_{b:05d}.bin").exists()
        assert (out / f"positives_{b:05d}.csv").exists()
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["batches"] == 3


def test_snapshot_fixed_count_one_matches_static(d0_csv, tmp_path):
    out = tmp_path / "sn"
    assert _run("snapshot", f"--dataset={d0_csv}", f"--out={out}",
                "--snapshot.mode=fixed-count", "--snapshot.count=1") == 0
    rows = (out / "snapshot_000.csv").read_text().strip().splitlines()[1:]
    got = {}
    for row in rows:
        s, d, w, _ = row.split(",")
        got[(int(s), int(d))] = int(w)
    assert got == {(0, 1): 2, (0, 2): 1, (1, 2): 1, (2, 3): 1}


def test_split_and_stats_and_negatives(mid_csv, tmp_path):
    for cmd, outputs in [
        ("split", ["split.txt", "split_tags.csv"]),
        ("stats", ["mid.snapshots.csv", "mid.degrees.csv", "mid.summary.csv"]),
        ("negatives", ["negatives.csv"]),
    ]:
        out = tmp_path / cmd
        assert _run(cmd, f"--dataset={mid_csv}", f"--out={out}") == 0
        for name in outputs:
            assert (out / name).exists(), name


def test_negatives_csv_format(d0_csv, tmp_path):
    out = tmp_path / "neg"
    assert _run("negatives", f"--dataset={d0_csv}", f"--out={out}",
                "--eval.batch_size=2") == 0
    lines = (out / "negatives.csv").read_text().strip().splitlines()
    assert lines[0] == "src,dst,window_start,window_end,strategy"
    assert all(line.endswith("random") for line in lines[1:])


def test_eval_link_and_node(mid_csv, tmp_path):
    out = tmp_path / "el"
    assert _run("eval-link", f"--dataset={mid_csv}", f"--out={out}",
                "--negatives.per_positive=2") == 0
    text = (out / "metrics.txt").read_text()
    assert "auc=" in text and "mrr=" in text
    csv_lines = (out / "metrics.csv").read_text().splitlines()
    assert len(csv_lines) == 2

    out2 = tmp_path / "en"
    assert _run("eval-node", f"--dataset={mid_csv}", f"--out={out2}") == 0
    assert "accuracy=" in (out2 / "metrics.txt").read_text()


def test_eval_node_static_labels(mid_csv, tmp_path):
    labels = tmp_path / "labels.csv"
    lines = ["node,label"] + [f"{i},{i % 2}" for i in range(30)]
    labels.write_text("\n".join(lines) + "\n")
    out = tmp_path / "ens"
    assert _run("eval-node", f"--dataset={mid_csv}", f"--out={out}",
                f"--labels.path={labels}", "--labels.mode=static") == 0
    assert "mode=static" in (out / "metrics.txt").read_text()


def test_unknown_key_exit_code(d0_csv, tmp_path, capsys):
    assert _run("eval-link", f"--dataset={d0_csv}",
                f"--out={tmp_path / 'x'}", "--bogus.path=1") == 1
    assert "bogus" in capsys.readouterr().err


def test_missing_dataset_is_io_error(tmp_path):
    assert _run("stats", "--dataset=/nonexistent/x.csv",
                f"--out={tmp_path / 'x'}") == 2


def test_dataset_required(tmp_path):
    assert _run("stats", f"--out={tmp_path / 'x'}") == 1


def test_rerun_from_echoed_config(mid_csv, tmp_path):
    out = tmp_path / "first"
    assert _run("eval-link", f"--dataset={mid_csv}", f"--out={out}",
                "--seed=9", "--negatives.per_positive=2") == 0
    metrics_first = (out / "metrics.txt").read_bytes()
    echoed = out / "config.yaml"
    out2 = tmp_path / "second"
    assert _run("eval-link", f"--config={echoed}", f"--out={out2}") == 0
    assert (out2 / "metrics.txt").read_bytes() == metrics_first


def test_negatives_explicit_window(d0_csv, tmp_path):
    out = tmp_path / "negw"
    assert _run("negatives", f"--dataset={d0_csv}", f"--out={out}",
                "--negatives.window=4.0:6.0",
                "--negatives.strategy=historical") == 0
    lines = (out / "negatives.csv").read_text().strip().splitlines()[1:]
    pairs = sorted(tuple(map(int, line.split(",")[:2])) for line in lines)
    assert pairs == [(0, 2), (1, 2)]
    assert all(line.split(",")[2] == "4.0" for line in lines)
