"""Leakage-aware preprocessing of node and edge features.

Feature rows live in three sections: static per-node rows (timeless),
per-event edge rows (aligned with the event stream), and sparse dynamic
node rows keyed by (node, t). Transform parameters are fitted only on
rows before a cutoff `t_fit` and then applied frozen everywhere, so
nothing after the cutoff can influence the statistics.

Conventions, stated once:

* z-score uses the population standard deviation (divide by n);
* zero-variance columns are flagged constant and map to 0;
* missing numeric cells (NaN) are imputed with the fit-range mean and
  reported through an appended ``<column>__missing`` indicator column
  (only added when the column actually has gaps);
* categorical vocabularies are built in first-appearance order with
  code 0 reserved for unseen values; encoding is idempotent;
* textual columns are rejected at schema load.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .core import SchemaError, TemporalGraph

COLUMN_KINDS = ("numeric", "categorical")
ENCODED = "categorical-codes"   # schema kind after encoding


class FitError(ValueError):
    """The fit range selects no usable rows."""


@dataclass
class FeatureBlock:
    """One section of aligned feature rows.

    `times` is None for timeless sections (static node features); for
    dynamic rows `nodes` carries the owning node per row.
    """

    columns: dict[str, np.ndarray]
    schema: dict[str, str]
    times: Optional[np.ndarray] = None
    nodes: Optional[np.ndarray] = None

    @property
    def num_rows(self) -> int:
        if not self.columns:
            return 0
        return len(next(iter(self.columns.values())))

    def fit_mask(self, t_fit: Optional[float]) -> np.ndarray:
        if t_fit is None or self.times is None:
            return np.ones(self.num_rows, dtype=bool)
        return self.times < t_fit

    def matrix(self) -> np.ndarray:
        """All columns as a float matrix; unencoded categoricals refuse."""
        cols = []
        for name, kind in self.schema.items():
            if kind == "categorical":
                raise SchemaError(f"column {name!r} is categorical; encode it first")
            cols.append(np.asarray(self.columns[name], dtype=np.float64))
        if not cols:
            return np.empty((self.num_rows, 0), dtype=np.float64)
        return np.column_stack(cols)

    def copy(self) -> "FeatureBlock":
        return FeatureBlock(dict(self.columns), dict(self.schema),
                            self.times, self.nodes)


@dataclass
class FeatureTable:
    node: Optional[FeatureBlock] = None
    edge: Optional[FeatureBlock] = None
    dynamic: Optional[FeatureBlock] = None

    def block(self, section: str) -> FeatureBlock:
        got = getattr(self, section, None)
        if got is None:
            raise SchemaError(f"feature table has no {section!r} section")
        return got

    def copy(self) -> "FeatureTable":
        return FeatureTable(
            self.node.copy() if self.node else None,
            self.edge.copy() if self.edge else None,
            self.dynamic.copy() if self.dynamic else None,
        )


@dataclass(frozen=True)
class TransformParams:
    """Frozen per-column parameters; `t_fit` records the fit cutoff."""

    section: str
    column: str
    kind: str                  # zscore | minmax | vocab
    t_fit: Optional[float]
    mean: float = 0.0
    std: float = 0.0
    lo: float = 0.0
    hi: float = 0.0
    vocab: tuple = ()
    constant: bool = False
    impute_mean: float = 0.0

    @property
    def vocab_size(self) -> int:
        # Code 0 is the reserved out-of-vocabulary slot.
        return len(self.vocab) + 1


def _missing_mask(values: np.ndarray) -> np.ndarray:
    if values.dtype == object:
        return np.array([v is None or v == "" for v in values], dtype=bool)
    return np.isnan(values)


def fit_transform_params(table: FeatureTable, section: str, column: str,
                         kind: str, t_fit: Optional[float] = None) -> TransformParams:
    """Fit one column's transform on rows strictly before `t_fit`.

    `kind` is "zscore" or "minmax" for numeric columns and "vocab" for
    categorical ones. Timeless sections ignore `t_fit`.
    """
    block = table.block(section)
    if column not in block.columns:
        raise SchemaError(f"no column {column!r} in section {section!r}")
    values = block.columns[column]
    mask = block.fit_mask(t_fit)
    if not mask.any():
        raise FitError(f"fit range before {t_fit} selects no rows")

    if kind == "vocab":
        if block.schema[column] not in ("categorical", ENCODED):
            raise SchemaError(f"column {column!r} is not categorical")
        vocab: list = []
        seen = set()
        fit_vals = values[mask]
        for v, miss in zip(fit_vals, _missing_mask(fit_vals)):
            if miss or v in seen:
                continue
            seen.add(v)
            vocab.append(v)
        return TransformParams(section, column, "vocab", t_fit, vocab=tuple(vocab))

    if kind not in ("zscore", "minmax"):
        raise ValueError(f"unknown transform kind {kind!r}")
    if block.schema[column] != "numeric":
        raise SchemaError(f"column {column!r} is not numeric")
    fit_vals = np.asarray(values[mask], dtype=np.float64)
    fit_vals = fit_vals[~np.isnan(fit_vals)]
    if len(fit_vals) == 0:
        raise FitError(f"column {column!r}: all fit-range values missing")
    mean = float(fit_vals.mean())
    if kind == "zscore":
        std = float(np.sqrt(np.mean((fit_vals - mean) ** 2)))
        return TransformParams(section, column, "zscore", t_fit,
                               mean=mean, std=std, constant=std == 0.0,
                               impute_mean=mean)
    lo = float(fit_vals.min())
    hi = float(fit_vals.max())
    return TransformParams(section, column, "minmax", t_fit,
                           lo=lo, hi=hi, constant=lo == hi, impute_mean=mean)


def _apply_numeric(values: np.ndarray, p: TransformParams):
    vals = np.asarray(values, dtype=np.float64).copy()
    missing = np.isnan(vals)
    vals[missing] = p.impute_mean
    if p.constant:
        out = np.zeros_like(vals)
    elif p.kind == "zscore":
        out = (vals - p.mean) / p.std
    else:
        out = (vals - p.lo) / (p.hi - p.lo)
    return out, missing


def _apply_vocab(values: np.ndarray, p: TransformParams) -> np.ndarray:
    codes = {v: i + 1 for i, v in enumerate(p.vocab)}
    miss = _missing_mask(values)
    return np.array([0 if m else codes.get(v, 0)
                     for v, m in zip(values, miss)], dtype=np.float64)


def apply_transform(table: FeatureTable,
                    params: Union[TransformParams, Sequence[TransformParams]]
                    ) -> FeatureTable:
    """Apply fitted params column-wise, returning a new table.

    Rows at or after `t_fit` get the same frozen parameters; nothing is
    refitted. Encoding an already-encoded categorical column is a
    no-op, so categorical application is idempotent.
    """
    if isinstance(params, TransformParams):
        params = [params]
    out = table.copy()
    for p in params:
        block = out.block(p.section)
        if p.column not in block.columns:
            raise SchemaError(f"no column {p.column!r} in section {p.section!r}")
        kind = block.schema[p.column]
        if p.kind == "vocab":
            if kind == ENCODED:
                continue
            if kind != "categorical":
                raise SchemaError(f"column {p.column!r} is not categorical")
            block.columns[p.column] = _apply_vocab(block.columns[p.column], p)
            block.schema[p.column] = ENCODED
        else:
            if kind != "numeric":
                raise SchemaError(f"column {p.column!r} is not numeric")
            transformed, missing = _apply_numeric(block.columns[p.column], p)
            block.columns[p.column] = transformed
            if missing.any():
                block.columns[p.column + "__missing"] = missing.astype(np.float64)
                block.schema[p.column + "__missing"] = "numeric"
    return out


# -- loading -------------------------------------------------------------


def load_schema_sidecar(path) -> dict[str, str]:
    """Read a JSON sidecar mapping column name -> kind.

    Textual columns are rejected here, once, with a clear message.
    """
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    out = {}
    for name, kind in raw.items():
        if kind == "text":
            raise SchemaError(
                f"column {name!r} is textual; text features are not supported, "
                "drop the column or pre-encode it")
        if kind not in COLUMN_KINDS:
            raise SchemaError(f"column {name!r}: unknown kind {kind!r}")
        out[name] = kind
    return out


def _read_csv_columns(path, meta_columns):
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file, header row required") from None
        rows = list(reader)
    for col in meta_columns:
        if col not in header:
            raise SchemaError(f"{path}: missing required column {col!r}")
    data = {name: [row[i] for row in rows] for i, name in enumerate(header)}
    feature_names = [h for h in header if h not in meta_columns]
    return data, feature_names


def _build_block(data, names, schema, times=None, nodes=None) -> FeatureBlock:
    columns: dict[str, np.ndarray] = {}
    kinds: dict[str, str] = {}
    for name in names:
        kind = schema.get(name, "numeric")
        raw = data[name]
        if kind == "numeric":
            vals = np.array([float(v) if v != "" else np.nan for v in raw],
                            dtype=np.float64)
        else:
            vals = np.array(raw, dtype=object)
        columns[name] = vals
        kinds[name] = kind
    return FeatureBlock(columns, kinds, times=times, nodes=nodes)


def load_node_features_csv(path, g: TemporalGraph,
                           schema_path=None) -> FeatureBlock:
    """Static node features; the `node` column carries raw ids from the
    event file. Nodes without a row get NaN / missing cells."""
    schema = load_schema_sidecar(schema_path) if schema_path else {}
    data, names = _read_csv_columns(path, meta_columns=("node",))
    rows = {}
    for i, raw_id in enumerate(data["node"]):
        try:
            dense = g.to_dense(_parse_raw_id(raw_id, g))
        except KeyError:
            raise SchemaError(f"{path}: unknown node id {raw_id!r}") from None
        rows[dense] = i
    block = _build_block(data, names, schema)
    aligned: dict[str, np.ndarray] = {}
    for name, col in block.columns.items():
        if block.schema[name] == "numeric":
            out = np.full(g.num_nodes, np.nan, dtype=np.float64)
        else:
            out = np.array([None] * g.num_nodes, dtype=object)
        for dense, i in rows.items():
            out[dense] = col[i]
        aligned[name] = out
    return FeatureBlock(aligned, block.schema)


def load_dynamic_node_features_csv(path, g: TemporalGraph,
                                   schema_path=None) -> FeatureBlock:
    """Sparse (node, t) feature rows; kept in file order sorted by t."""
    schema = load_schema_sidecar(schema_path) if schema_path else {}
    data, names = _read_csv_columns(path, meta_columns=("node", "t"))
    nodes = np.array([g.to_dense(_parse_raw_id(v, g)) for v in data["node"]],
                     dtype=np.int64)
    times = np.array([float(v) for v in data["t"]], dtype=np.float64)
    order = np.argsort(times, kind="stable")
    block = _build_block(data, names, schema)
    return FeatureBlock({n: c[order] for n, c in block.columns.items()},
                        block.schema, times=times[order], nodes=nodes[order])


def _parse_raw_id(value: str, g: TemporalGraph):
    # Event CSVs parse ids as strings unless the graph was built from
    # dense arrays, in which case ids are ints.
    if g.raw_ids is None or (g.raw_ids and isinstance(g.raw_ids[0], int)):
        return int(value)
    return value
