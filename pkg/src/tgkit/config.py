"""Run configuration: defaults, YAML files, and dotted overrides.

Precedence is command line > config file > defaults. Every key has a
default, so an effective config is always complete and can be echoed
next to a run's outputs for exact reproduction. Unknown keys are an
error naming the offending path; silent config drift is worse than a
failed run.
"""

from __future__ import annotations

import copy
from typing import Any

import yaml


class ConfigError(ValueError):
    def __init__(self, message: str, key: str = ""):
        super().__init__(message)
        self.key = key


DEFAULTS: dict[str, Any] = {
    "dataset": "",
    "out": "out",
    "seed": 42,
    "index": {
        "mode": "symmetrized",        # symmetrized | directed
    },
    "split": {
        "train": 0.7,
        "val": 0.15,
        "test": 0.15,
    },
    "sampler": {
        "strategy": "recent",         # recent | uniform
        "fanouts": [10, 10],
        "window": float("inf"),       # uniform strategy window
        "time_bound": "seed",         # seed | edge
        "seeds": "",                  # explicit "node:t,node:t" seeds
        "link_batches": False,        # sample per chronological window
        "batch_size": 200,
        "limit": 0,                   # max windows in link-batches mode; 0 = all
    },
    "negatives": {
        "strategy": "random",         # random | historical
        "per_positive": 1,
        "fallback": "to-random",      # to-random | strict
        "corrupt_both": False,
        "scope": "all",               # all | test (negatives command)
        "window": "",                 # "a:b" = one explicit window [a, b)
    },
    "snapshot": {
        "mode": "fixed-count",        # fixed-count | fixed-width | fixed-events
        "count": 10,
        "width": 1.0,
        "events": 100,
        "coalesce": "count-weight",   # keep-all | last | count-weight
        "accumulation": "interval",   # interval | cumulative
    },
    "scorer": {
        "variant": "edgebank-inf",    # edgebank-inf | edgebank-window
        "window": 0.0,                # 0 = training-range span
    },
    "eval": {
        "batch_size": 200,
    },
    "labels": {
        "path": "",                   # node label CSV; empty = event labels
        "mode": "dynamic",            # dynamic | static
    },
}

# Single-word shorthands accepted on the command line.
ALIASES = {
    "scorer": "scorer.variant",
}


def default_config() -> dict:
    return copy.deepcopy(DEFAULTS)


def _merge(base: dict, update: dict, prefix: str = ""):
    for key, value in update.items():
        path = f"{prefix}{key}"
        if key not in base:
            raise ConfigError(f"unknown config key: {path}", key=path)
        if isinstance(base[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(f"config key {path} expects a mapping", key=path)
            _merge(base[key], value, prefix=f"{path}.")
        else:
            base[key] = _coerce(path, base[key], value)


def _coerce(path: str, default, value):
    if isinstance(default, bool):
        if isinstance(value, bool):
            return value
        raise ConfigError(f"config key {path} expects a boolean", key=path)
    if isinstance(default, float) and isinstance(value, int):
        return float(value)
    if isinstance(default, int) and not isinstance(default, bool):
        if isinstance(value, int) and not isinstance(value, bool):
            return value
        raise ConfigError(f"config key {path} expects an integer", key=path)
    if isinstance(default, float):
        if isinstance(value, float):
            return value
        raise ConfigError(f"config key {path} expects a number", key=path)
    if isinstance(default, list):
        if isinstance(value, list):
            return value
        raise ConfigError(f"config key {path} expects a list", key=path)
    if isinstance(default, str):
        return "" if value is None else str(value)
    return value


def set_key(cfg: dict, dotted: str, raw_value: str):
    """Apply one ``--key.path=value`` override; values parse as YAML."""
    dotted = ALIASES.get(dotted, dotted)
    parts = dotted.split(".")
    node = cfg
    for i, part in enumerate(parts[:-1]):
        if part not in node or not isinstance(node[part], dict):
            raise ConfigError(f"unknown config key: {'.'.join(parts[:i + 1])}",
                              key=dotted)
        node = node[part]
    leaf = parts[-1]
    if leaf not in node:
        raise ConfigError(f"unknown config key: {dotted}", key=dotted)
    if isinstance(node[leaf], dict):
        raise ConfigError(f"config key {dotted} is a section, not a value",
                          key=dotted)
    if isinstance(node[leaf], str):
        # String-typed keys take the raw text; YAML would mangle values
        # like "3:6.0" (sexagesimal) or "no" (boolean).
        node[leaf] = raw_value
        return
    try:
        value = yaml.safe_load(raw_value)
    except yaml.YAMLError:
        value = raw_value
    # "10,10" is a friendlier spelling of a list on the command line.
    if isinstance(node[leaf], list) and isinstance(value, (str, int, float)):
        value = [yaml.safe_load(v) for v in str(raw_value).split(",")]
    node[leaf] = _coerce(dotted, node[leaf], value)


def load_config(path=None, overrides: dict[str, str] | None = None) -> dict:
    """Defaults, then the YAML file, then dotted overrides."""
    cfg = default_config()
    if path:
        with open(path, "r", encoding="utf-8") as fh:
            loaded = yaml.safe_load(fh) or {}
        if not isinstance(loaded, dict):
            raise ConfigError(f"{path}: config root must be a mapping")
        _merge(cfg, loaded)
    for key, value in (overrides or {}).items():
        set_key(cfg, key, value)
    return cfg


def dump_config(cfg: dict) -> str:
    return yaml.safe_dump(cfg, sort_keys=True, default_flow_style=False)
