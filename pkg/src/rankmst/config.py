"""Run configuration: JSON file plus CLI flag overrides (flags win)."""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping

from . import bootstrap as bs
from . import correlation
from .errors import ConfigError

METHOD_ALIASES = {
    "pearson": correlation.PEARSON,
    "spearman": correlation.SPEARMAN,
    "kendall": correlation.KENDALL,
    "kendall_tau_b": correlation.KENDALL,
    "tau": correlation.KENDALL,
}


def canonical_method(name: str) -> str:
    try:
        return METHOD_ALIASES[name.strip().lower()]
    except KeyError:
        raise ConfigError(f"unknown correlation method {name!r}") from None


@dataclass(frozen=True)
class RunConfig:
    prices: str
    sectors: str
    out: str
    methods: tuple[str, ...] = tuple(correlation.METHODS)
    window: int = 504
    step: int = 30
    max_missing_frac: float = 0.10
    stability: bool = True
    centrality: bool = True
    gaussianity: bool = True
    quantile_normalize: bool = False
    portfolio: bool = True
    bootstrap: bool = False
    bootstrap_replicates: int = bs.DEFAULT_REPLICATES
    bootstrap_source_length: int = bs.DEFAULT_SOURCE_LENGTH
    bootstrap_output_length: int = bs.DEFAULT_OUTPUT_LENGTH
    block_length: int = bs.DEFAULT_BLOCK_LENGTH
    pair_budget: int = bs.DEFAULT_PAIR_BUDGET
    alpha: float = 0.9
    # the literal trace-identity ridge keeps MST-filtered matrices positive
    # definite at realistic asset counts; scaled_identity cannot at alpha=0.9
    shrink_target: str = "trace_identity"
    quantiles: int = 200
    seed: int = 0
    threads: int = 0  # 0 means all available cores
    label: str = "dataset"

    def effective_threads(self) -> int:
        if self.threads > 0:
            return self.threads
        return os.cpu_count() or 1

    def to_dict(self) -> dict[str, Any]:
        doc = dataclasses.asdict(self)
        doc["methods"] = list(self.methods)
        return doc


_FIELDS = {f.name for f in dataclasses.fields(RunConfig)}
_REQUIRED = ("prices", "sectors", "out")


def build_config(
    base: Mapping[str, Any] | None = None, overrides: Mapping[str, Any] | None = None
) -> RunConfig:
    """Merge a config document with overrides (overrides win) into a RunConfig."""
    merged: dict[str, Any] = {}
    for source in (base or {}), (overrides or {}):
        for key, value in source.items():
            if value is None:
                continue
            if key not in _FIELDS:
                raise ConfigError(f"unknown config field {key!r}")
            merged[key] = value
    missing = [k for k in _REQUIRED if k not in merged]
    if missing:
        raise ConfigError(f"missing required config fields: {', '.join(missing)}")
    if "methods" in merged:
        raw = merged["methods"]
        if isinstance(raw, str):
            raw = [m for m in raw.split(",") if m.strip()]
        canonical = [canonical_method(m) for m in raw]
        merged["methods"] = tuple(dict.fromkeys(canonical))  # dedupe, keep order
    return RunConfig(**merged)


def load_config(path: str | Path, overrides: Mapping[str, Any] | None = None) -> RunConfig:
    with open(path, "r", encoding="utf-8") as f:
        try:
            doc = json.load(f)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError("config file must contain a JSON object")
    return build_config(doc, overrides)


def validate(config: RunConfig) -> list[str]:
    """All violations in one pass; an empty list means the config is usable."""
    problems: list[str] = []
    if not config.methods:
        problems.append("methods list is empty")
    for m in config.methods:
        if m not in correlation.METHODS:
            problems.append(f"unknown correlation method {m!r}")
    for name in ("prices", "sectors"):
        path = getattr(config, name)
        if not Path(path).is_file():
            problems.append(f"{name} file not found: {path}")
    if not 0 < config.alpha <= 1:
        problems.append(f"alpha must lie in (0, 1], got {config.alpha}")
    if config.shrink_target not in ("scaled_identity", "trace_identity"):
        problems.append(f"unknown shrink_target {config.shrink_target!r}")
    if config.window < 2:
        problems.append("window must be at least 2 days")
    if config.step < 1:
        problems.append("step must be at least 1 day")
    if not 0 <= config.max_missing_frac < 1:
        problems.append("max_missing_frac must lie in [0, 1)")
    if config.quantiles < 2:
        problems.append("quantiles must be at least 2")
    if config.bootstrap_replicates < 2:
        problems.append("bootstrap_replicates must be at least 2")
    if config.block_length < 1:
        problems.append("block_length must be at least 1 day")
    if config.bootstrap_source_length < 2 or config.bootstrap_output_length < 2:
        problems.append("bootstrap lengths must be at least 2 days")
    if config.pair_budget < 1:
        problems.append("pair_budget must be at least 1")
    if config.threads < 0:
        problems.append("threads must be non-negative")
    if config.seed < 0:
        problems.append("seed must be non-negative")
    return problems
