"""Chronological splitting, ranking metrics, and task protocols.

Tie conventions are pinned here because a 0/1 memorization scorer
produces nothing but ties:

* AUC: Mann-Whitney with average-rank ties,
  (#{pos > neg} + 0.5 * #{pos = neg}) / (P * N);
* average precision: pessimistic ties, equal-scored negatives rank
  above positives, so constant scorers get no free credit;
* MRR: per-positive rank = 1 + #{neg > pos} + #{neg = pos} / 2, which
  may be fractional.

Splits are taken at time quantiles of the edge-add timestamps (not at
event counts) so validation and test stay temporally contiguous.
"""

from __future__ import annotations

import bisect
from collections import Counter, OrderedDict
from dataclasses import dataclass
from typing import Optional, Protocol, Sequence, Union

import numpy as np

from .core import TemporalGraph
from .index import TemporalAdjacency, build_index, neighbors_before
from .negatives import NegativeSpec, historical_negatives, random_negatives
from .rng import RngStreams
from .sampling import iterate_link_batches


class SplitError(ValueError):
    """The stream cannot be split as requested."""


class MetricError(ValueError):
    """A metric was asked of an empty score set."""


TAG_TRAIN, TAG_VAL, TAG_TEST = 0, 1, 2


@dataclass
class Split:
    """Quantile boundaries plus per-event tags.

    `unseen` marks test edge-adds with an endpoint that has no
    edge-add before the validation boundary (transductive protocol
    reports these as a slice, it does not filter them).
    """

    t_train_end: float
    t_val_end: float
    tags: np.ndarray      # uint8 per event
    unseen: np.ndarray    # bool per event
    ratios: tuple[float, float, float]

    def mask(self, part: str) -> np.ndarray:
        tag = {"train": TAG_TRAIN, "val": TAG_VAL, "test": TAG_TEST}[part]
        return self.tags == tag


def chronological_split(g: TemporalGraph,
                        ratios: tuple[float, float, float] = (0.7, 0.15, 0.15)
                        ) -> Split:
    """Split by empirical time quantiles of the edge-add timestamps."""
    if len(ratios) != 3 or any(r <= 0 for r in ratios):
        raise SplitError(f"ratios must be three positive numbers, got {ratios}")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise SplitError(f"ratios must sum to 1, got {sum(ratios)}")
    add_mask = g.edge_add_mask()
    times = g.t[add_mask]
    if len(times) < 3:
        raise SplitError("need at least 3 edge-add events to split")
    if times[0] == times[-1]:
        raise SplitError("all edge-add timestamps are equal; no split exists")
    t_train_end = float(np.quantile(times, ratios[0]))
    t_val_end = float(np.quantile(times, ratios[0] + ratios[1]))

    tags = np.full(g.num_events, TAG_TEST, dtype=np.uint8)
    tags[g.t < t_val_end] = TAG_VAL
    tags[g.t < t_train_end] = TAG_TRAIN

    seen = np.zeros(g.num_nodes, dtype=bool)
    hist = add_mask & (g.t < t_val_end)
    seen[g.src[hist]] = True
    seen[g.dst[hist]] = True
    unseen = np.zeros(g.num_events, dtype=bool)
    test_adds = add_mask & (tags == TAG_TEST)
    unseen[test_adds] = (~seen[g.src[test_adds]]) | (~seen[g.dst[test_adds]])
    return Split(t_train_end, t_val_end, tags, unseen, tuple(ratios))


# -- ranking metrics ------------------------------------------------------


def auc(pos_scores, neg_scores) -> float:
    """Area under the ROC curve, average-rank tie handling, exact."""
    pos = np.asarray(pos_scores, dtype=np.float64)
    neg = np.asarray(neg_scores, dtype=np.float64)
    if len(pos) == 0 or len(neg) == 0:
        raise MetricError("auc needs non-empty positive and negative scores")
    neg_sorted = np.sort(neg)
    below = np.searchsorted(neg_sorted, pos, side="left")
    at_or_below = np.searchsorted(neg_sorted, pos, side="right")
    wins = int(below.sum())
    ties = int((at_or_below - below).sum())
    return (wins + 0.5 * ties) / (len(pos) * len(neg))


def average_precision(pos_scores, neg_scores) -> float:
    """AP with pessimistic ties: tied negatives outrank positives."""
    pos = np.asarray(pos_scores, dtype=np.float64)
    neg = np.asarray(neg_scores, dtype=np.float64)
    if len(pos) == 0 or len(neg) == 0:
        raise MetricError("average_precision needs non-empty scores")
    scores = np.concatenate([pos, neg])
    is_pos = np.concatenate([np.ones(len(pos)), np.zeros(len(neg))])
    order = np.lexsort((is_pos, -scores))
    hits = is_pos[order]
    cum = np.cumsum(hits)
    ranks = np.arange(1, len(hits) + 1)
    return float((cum[hits == 1] / ranks[hits == 1]).mean())


def reciprocal_rank(pos_score: float, neg_scores) -> float:
    """1 / rank of a positive among its negatives, average-tie rank."""
    neg = np.asarray(neg_scores, dtype=np.float64)
    greater = int((neg > pos_score).sum())
    ties = int((neg == pos_score).sum())
    return 1.0 / (1.0 + greater + ties / 2.0)


def mrr(per_positive: Sequence[tuple[float, Sequence[float]]]) -> float:
    """Mean reciprocal rank over (positive score, its negatives) groups."""
    if not per_positive:
        raise MetricError("mrr needs at least one positive")
    return float(np.mean([reciprocal_rank(p, negs) for p, negs in per_positive]))


# -- scorer contract ------------------------------------------------------


class Scorer(Protocol):
    """Stateful link scorer driven chronologically by the evaluator.

    `advance(g, t)` must absorb exactly the history strictly before t;
    `score_pairs` then scores queries governed by that t. A scorer
    never reads events at or after the time it was advanced to.
    """

    def advance(self, g: TemporalGraph, t: float) -> None: ...

    def score_pairs(self, src, dst) -> np.ndarray: ...


class TemporalView:
    """Adjacency window hard-capped at a ceiling time.

    Handed to function scorers so that no query, however phrased, can
    observe events at or beyond the ceiling.
    """

    def __init__(self, idx: TemporalAdjacency, ceiling: float):
        self._idx = idx
        self.ceiling = float(ceiling)

    def neighbors_before(self, u: int, t: Optional[float] = None):
        t = self.ceiling if t is None else min(t, self.ceiling)
        return neighbors_before(self._idx, u, t)

    @property
    def num_nodes(self) -> int:
        return self._idx.num_nodes


class FunctionScorer:
    """Adapter turning f(view, u, v) into the stateful scorer contract."""

    def __init__(self, fn, directed: bool = False):
        self.fn = fn
        self.directed = directed
        self._idx: Optional[TemporalAdjacency] = None
        self._view: Optional[TemporalView] = None

    def advance(self, g: TemporalGraph, t: float) -> None:
        if self._idx is None:
            self._idx = build_index(g, directed=self.directed)
        self._view = TemporalView(self._idx, t)

    def score_pairs(self, src, dst) -> np.ndarray:
        if self._view is None:
            raise RuntimeError("scorer was never advanced")
        return np.array([self.fn(self._view, int(u), int(v))
                         for u, v in zip(src, dst)], dtype=np.float64)


# -- reports --------------------------------------------------------------


@dataclass
class MetricsReport:
    """Flat ordered key -> value mapping with text/CSV serialization."""

    values: "OrderedDict[str, object]"

    def __getitem__(self, key):
        return self.values[key]

    def to_kv_text(self) -> str:
        return "".join(f"{k}={_fmt(v)}\n" for k, v in self.values.items())

    def csv_header(self) -> str:
        return ",".join(self.values.keys()) + "\n"

    def csv_row(self) -> str:
        return ",".join(_fmt(v) for v in self.values.values()) + "\n"


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return repr(v)
    if v is None:
        return ""
    return str(v)


# -- future link prediction ----------------------------------------------


def evaluate_link_prediction(g: TemporalGraph, split: Split, scorer: Scorer,
                             spec: NegativeSpec, batch_size: int = 200,
                             rng: Union[RngStreams, int] = 0,
                             directed: bool = False) -> MetricsReport:
    """Stream the test window chronologically and rank against negatives.

    Per batch: the scorer is advanced to the batch's start time,
    negatives are drawn for the batch window under `spec`, and
    positives/negatives are scored and pooled. Sampler saturation and
    pool shortfall are reported as flags, never as failures. Positives
    left without negatives by a shortfall are skipped for MRR and
    counted in `mrr_skipped`.
    """
    streams = rng if isinstance(rng, RngStreams) else RngStreams(rng)
    pos_scores_all: list[np.ndarray] = []
    neg_scores_all: list[np.ndarray] = []
    groups: list[tuple[float, np.ndarray]] = []
    unseen_pos: list[np.ndarray] = []
    unseen_neg: list[np.ndarray] = []
    saturated = False
    shortfall = False
    skipped = 0
    n_batches = 0

    for b, batch in enumerate(iterate_link_batches(g, batch_size,
                                                   mask=split.mask("test"))):
        n_batches += 1
        scorer.advance(g, batch.t_start)
        window = (batch.t_start, batch.t_end)
        gen = streams.stream("negatives", b)
        positives = list(zip(batch.src.tolist(), batch.dst.tolist()))
        if spec.strategy == "random":
            negs = random_negatives(g, window, positives, spec.per_positive,
                                    gen, directed, spec.corrupt_both)
            counts = negs.counts
        else:
            negs = historical_negatives(g, window, spec.per_positive * len(positives),
                                        gen, directed, spec.fallback)
            # Round-robin assignment keeps group sizes within one of
            # each other even under shortfall.
            counts = np.bincount(np.arange(len(negs)) % len(positives),
                                 minlength=len(positives))
        saturated |= negs.saturated
        shortfall |= negs.shortfall

        pos_scores = scorer.score_pairs(batch.src, batch.dst)
        neg_scores = scorer.score_pairs(negs.src, negs.dst)
        pos_scores_all.append(pos_scores)
        neg_scores_all.append(neg_scores)

        if spec.strategy == "random":
            offsets = np.concatenate([[0], np.cumsum(counts)])
            group_idx = [np.arange(offsets[i], offsets[i + 1])
                         for i in range(len(positives))]
        else:
            group_idx = [np.flatnonzero(np.arange(len(negs)) % len(positives) == i)
                         for i in range(len(positives))]
        batch_unseen = split.unseen[batch.eid]
        for i in range(len(positives)):
            idx_i = group_idx[i]
            if len(idx_i) == 0:
                skipped += 1
            else:
                groups.append((float(pos_scores[i]), neg_scores[idx_i]))
            if batch_unseen[i]:
                unseen_pos.append(pos_scores[i:i + 1])
                unseen_neg.append(neg_scores[idx_i])

    if n_batches == 0:
        raise MetricError("no test edges to evaluate")
    pos_all = np.concatenate(pos_scores_all)
    neg_all = np.concatenate(neg_scores_all)
    if len(neg_all) == 0:
        raise MetricError("negative sampling produced no negatives at all")

    n_unseen = sum(len(p) for p in unseen_pos)
    unseen_auc = None
    if n_unseen:
        u_neg = np.concatenate(unseen_neg) if unseen_neg else np.empty(0)
        if len(u_neg):
            unseen_auc = auc(np.concatenate(unseen_pos), u_neg)

    report = OrderedDict()
    report["task"] = "link-prediction"
    report["negative_strategy"] = spec.strategy
    report["per_positive"] = spec.per_positive
    report["n_pos"] = len(pos_all)
    report["n_neg"] = len(neg_all)
    report["auc"] = auc(pos_all, neg_all)
    report["ap"] = average_precision(pos_all, neg_all)
    report["mrr"] = mrr(groups) if groups else None
    report["mrr_skipped"] = skipped
    report["saturated"] = saturated
    report["shortfall"] = shortfall
    report["n_unseen_pos"] = n_unseen
    report["unseen_auc"] = unseen_auc
    return MetricsReport(report)


# -- node classification --------------------------------------------------


class PersistenceScorer:
    """Predict a node's most recent past label, else the training majority.

    The label stream is everything with a timestamp strictly before the
    query time, so test-period labels become visible only after their
    own timestamp passes.
    """

    def __init__(self, labeled: Sequence[tuple[int, float, int]],
                 majority: int):
        self.majority = majority
        self._times: dict[int, list[float]] = {}
        self._labels: dict[int, list[int]] = {}
        for node, t, cls in sorted(labeled, key=lambda r: (r[1], r[0])):
            self._times.setdefault(node, []).append(t)
            self._labels.setdefault(node, []).append(cls)

    def predict(self, node: int, t: float) -> int:
        times = self._times.get(node)
        if not times:
            return self.majority
        i = bisect.bisect_left(times, t)
        if i == 0:
            return self.majority
        return self._labels[node][i - 1]


def _majority_class(classes: Sequence[int]) -> int:
    counts = Counter(classes)
    top = max(counts.values())
    return min(c for c, n in counts.items() if n == top)


def macro_f1(y_true, y_pred) -> float:
    classes = sorted(set(y_true) | set(y_pred))
    scores = []
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    for c in classes:
        tp = int(((y_true == c) & (y_pred == c)).sum())
        fp = int(((y_true != c) & (y_pred == c)).sum())
        fn = int(((y_true == c) & (y_pred != c)).sum())
        scores.append(2 * tp / (2 * tp + fp + fn) if (2 * tp + fp + fn) else 0.0)
    return float(np.mean(scores))


def evaluate_node_classification(g: TemporalGraph, labels, split: Split,
                                 scorer=None, dynamic: bool = True,
                                 rng: Union[RngStreams, int] = 0
                                 ) -> MetricsReport:
    """Accuracy and macro-F1 for the two node task protocols.

    Dynamic mode takes (node, t, class) rows, evaluates those at or
    after the validation boundary, and defaults to the label
    persistence baseline. Static mode takes {node: class}; because that
    task carries no time axis, labeled nodes are split uniformly at
    random (seeded, same ratios as the chronological split) and each
    test node is evaluated once.
    """
    if dynamic:
        rows = sorted(labels, key=lambda r: (r[1], r[0]))
        train_rows = [r for r in rows if r[1] < split.t_train_end]
        test_rows = [r for r in rows if r[1] >= split.t_val_end]
        if not test_rows:
            raise MetricError("no labeled rows in the test period")
        if not train_rows:
            raise MetricError("no labeled rows in the training period")
        majority = _majority_class([c for _, _, c in train_rows])
        model = scorer or PersistenceScorer(rows, majority)
        y_true = [c for _, _, c in test_rows]
        y_pred = [model.predict(n, t) for n, t, _ in test_rows]
        n_eval = len(test_rows)
    else:
        label_of = dict(labels.items() if isinstance(labels, dict) else labels)
        nodes = sorted(label_of)
        streams = rng if isinstance(rng, RngStreams) else RngStreams(rng)
        perm = streams.stream("node-split").permutation(len(nodes))
        n_train = int(round(split.ratios[0] * len(nodes)))
        n_val = int(round(split.ratios[1] * len(nodes)))
        train_nodes = [nodes[i] for i in perm[:n_train]]
        test_nodes = [nodes[i] for i in perm[n_train + n_val:]]
        if not test_nodes:
            raise MetricError("no labeled nodes fall in the test partition")
        if not train_nodes:
            raise MetricError("no labeled nodes fall in the training partition")
        majority = _majority_class([label_of[n] for n in train_nodes])
        model = scorer or PersistenceScorer([], majority)
        y_true = [label_of[n] for n in test_nodes]
        y_pred = [model.predict(n, np.inf) for n in test_nodes]
        n_eval = len(test_nodes)

    acc = float(np.mean(np.asarray(y_true) == np.asarray(y_pred)))
    report = OrderedDict()
    report["task"] = "node-classification"
    report["mode"] = "dynamic" if dynamic else "static"
    report["n_eval"] = n_eval
    report["accuracy"] = acc
    report["macro_f1"] = macro_f1(y_true, y_pred)
    return MetricsReport(report)
