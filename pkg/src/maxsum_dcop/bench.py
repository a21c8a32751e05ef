"""Sweep harness: generate instances along one axis, run each backend, record rows.

A sweep config fixes a base generation config and varies one parameter
across a list of values; every (setting, instance) pair reuses the same
generated problem for all backends, so rows are comparable head-to-head.
Instance seeds derive from the sweep seed through SeedSequence spawn keys
(setting index, instance index), which keeps every row reproducible in
isolation.

Timing separates preprocessing (decomposition or sorting) from the solve
loop, because the two backends pay very different up-front costs.  The
exhaustive backend is skipped, with a recorded reason, on instances whose
largest table exceeds a guard threshold.
"""

from __future__ import annotations

import csv
import json
import os
import time
from dataclasses import dataclass, fields, replace
from typing import Iterable, Mapping, Sequence

import numpy as np

from .engine import BACKEND_TAGS, make_backend, run
from .generator import ConfigError, GenConfig, generate

__all__ = [
    "BenchRow",
    "CSV_COLUMNS",
    "SweepConfig",
    "load_sweep_config",
    "sweep",
    "write_csv",
    "read_rows",
    "summarize",
]

TIMING_COLUMNS = ("preprocess_time", "solve_time")


@dataclass(frozen=True)
class BenchRow:
    """One (setting, instance, backend) measurement; field order is the CSV schema."""

    config_id: str
    backend: str
    instance_seed: int
    iterations: int
    pruned_fraction: float
    preprocess_time: float
    solve_time: float
    best_global_utility: float
    leaves_evaluated: int
    total_leaves: int


CSV_COLUMNS = tuple(f.name for f in fields(BenchRow))

_AXIS_PARAMS = ("var_t", "max_arity", "min_arity", "num_functions", "domain_size")
_VAR_T_BANDS = {"sparse": (0.1, 0.5), "dense": (0.5, 0.9)}


@dataclass(frozen=True)
class SweepConfig:
    """One-axis sweep description.

    ``axis_param`` names a generation knob ("var_t", "max_arity",
    "min_arity", "num_functions", or "domain_size", the last pinning the
    domain range to a single value).  ``var_t_mode`` is "fixed" to use the
    config's var_t as-is, or "sparse"/"dense" to draw it per instance from
    [0.1, 0.5] / (0.5, 0.9].
    """

    name: str
    base: GenConfig
    axis_param: str
    axis_values: tuple
    instances: int
    iterations: int
    backends: tuple[str, ...]
    seed: int
    naive_leaf_limit: int = 2_000_000
    var_t_mode: str = "fixed"

    def __post_init__(self):
        if self.axis_param not in _AXIS_PARAMS:
            raise ConfigError(
                f"axis param {self.axis_param!r} not one of {_AXIS_PARAMS}"
            )
        if not self.axis_values:
            raise ConfigError("axis has no values")
        if self.instances < 1 or self.iterations < 0:
            raise ConfigError("instances must be >= 1 and iterations >= 0")
        bad = [t for t in self.backends if t not in BACKEND_TAGS]
        if bad or not self.backends:
            raise ConfigError(f"bad backend tags {bad or self.backends}")
        if self.var_t_mode != "fixed" and self.var_t_mode not in _VAR_T_BANDS:
            raise ConfigError(f"bad var_t_mode {self.var_t_mode!r}")


def load_sweep_config(path) -> SweepConfig:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    try:
        return SweepConfig(
            name=str(doc["name"]),
            base=GenConfig.from_dict(doc["base"]),
            axis_param=str(doc["axis"]["param"]),
            axis_values=tuple(doc["axis"]["values"]),
            instances=int(doc["instances"]),
            iterations=int(doc["iterations"]),
            backends=tuple(doc["backends"]),
            seed=int(doc["seed"]),
            naive_leaf_limit=int(doc.get("naive_leaf_limit", 2_000_000)),
            var_t_mode=str(doc.get("var_t_mode", "fixed")),
        )
    except (KeyError, TypeError, ValueError) as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(f"malformed sweep config: {e}") from e


def _apply_axis(base: GenConfig, param: str, value) -> GenConfig:
    if param == "var_t":
        return replace(base, var_t=float(value))
    if param == "max_arity":
        return replace(base, max_arity=int(value))
    if param == "min_arity":
        return replace(base, min_arity=int(value))
    if param == "num_functions":
        return replace(base, num_functions=int(value))
    if param == "domain_size":
        return replace(base, domain_size_range=(int(value), int(value)))
    raise ConfigError(f"unknown axis param {param!r}")  # pragma: no cover


def _instance_seed(sweep_seed: int, setting_idx: int, instance_idx: int) -> int:
    ss = np.random.SeedSequence(sweep_seed, spawn_key=(setting_idx, instance_idx))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def sweep(
    config: SweepConfig, use_numba: bool | None = None, progress=None
) -> tuple[list[BenchRow], dict]:
    """Run the whole grid; returns rows plus a meta dict (skips, residuals)."""
    rows: list[BenchRow] = []
    meta = {"skips": [], "max_query_imbalance": 0.0, "settings": []}
    for si, value in enumerate(config.axis_values):
        gen_base = _apply_axis(config.base, config.axis_param, value)
        config_id = f"{config.name}:{config.axis_param}={value}"
        meta["settings"].append(config_id)
        for inst in range(config.instances):
            seed = _instance_seed(config.seed, si, inst)
            gcfg = replace(gen_base, seed=seed)
            if config.var_t_mode != "fixed":
                lo, hi = _VAR_T_BANDS[config.var_t_mode]
                draw = np.random.default_rng(
                    np.random.SeedSequence(config.seed, spawn_key=(si, inst, 1))
                ).uniform(lo, hi)
                gcfg = replace(gcfg, var_t=float(draw))
            problem = generate(gcfg)
            biggest = max(f.table.size for f in problem.functions)
            for tag in config.backends:
                if tag == "naive" and biggest > config.naive_leaf_limit:
                    meta["skips"].append(
                        {
                            "config_id": config_id,
                            "instance_seed": seed,
                            "backend": tag,
                            "reason": (
                                f"largest table has {biggest} cells, over the "
                                f"naive guard of {config.naive_leaf_limit}"
                            ),
                        }
                    )
                    continue
                backend = make_backend(tag, use_numba=use_numba)
                t0 = time.perf_counter()
                backend.prepare(problem)
                preprocess_time = time.perf_counter() - t0
                t0 = time.perf_counter()
                result = run(problem, config.iterations, backend, seed=seed)
                solve_time = time.perf_counter() - t0
                meta["max_query_imbalance"] = max(
                    meta["max_query_imbalance"], result.max_query_imbalance
                )
                rows.append(
                    BenchRow(
                        config_id=config_id,
                        backend=tag,
                        instance_seed=seed,
                        iterations=config.iterations,
                        pruned_fraction=result.stats.pruned_fraction,
                        preprocess_time=preprocess_time,
                        solve_time=solve_time,
                        best_global_utility=result.best_utility,
                        leaves_evaluated=result.stats.leaves_evaluated,
                        total_leaves=result.stats.total_leaves,
                    )
                )
                if progress is not None:
                    progress(rows[-1])
    return rows, meta


def write_csv(rows: Iterable[BenchRow], path) -> None:
    """Append rows, writing the header only when the file is new or empty."""
    need_header = not os.path.exists(path) or os.path.getsize(path) == 0
    with open(path, "a", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        if need_header:
            writer.writerow(CSV_COLUMNS)
        for row in rows:
            writer.writerow([getattr(row, c) for c in CSV_COLUMNS])


def read_rows(path) -> list[BenchRow]:
    out: list[BenchRow] = []
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
            raise ValueError(
                f"unexpected CSV header {reader.fieldnames}; expected {list(CSV_COLUMNS)}"
            )
        for rec in reader:
            out.append(
                BenchRow(
                    config_id=rec["config_id"],
                    backend=rec["backend"],
                    instance_seed=int(rec["instance_seed"]),
                    iterations=int(rec["iterations"]),
                    pruned_fraction=float(rec["pruned_fraction"]),
                    preprocess_time=float(rec["preprocess_time"]),
                    solve_time=float(rec["solve_time"]),
                    best_global_utility=float(rec["best_global_utility"]),
                    leaves_evaluated=int(rec["leaves_evaluated"]),
                    total_leaves=int(rec["total_leaves"]),
                )
            )
    return out


def summarize(rows: Sequence[BenchRow]) -> dict:
    """Per (setting, backend) means, JSON-ready and ordered by first appearance."""
    groups: dict[tuple[str, str], list[BenchRow]] = {}
    order: list[tuple[str, str]] = []
    for row in rows:
        key = (row.config_id, row.backend)
        if key not in groups:
            groups[key] = []
            order.append(key)
        groups[key].append(row)
    settings = []
    for config_id, backend in order:
        grp = groups[(config_id, backend)]
        leaves = sum(r.leaves_evaluated for r in grp)
        total = sum(r.total_leaves for r in grp)
        settings.append(
            {
                "config_id": config_id,
                "backend": backend,
                "runs": len(grp),
                # pooled: share of the group's combined assignment space never
                # priced; immune to tiny tables dominating a plain mean
                "pooled_pruned_fraction": (
                    1.0 - leaves / total if total > 0 else 0.0
                ),
                "mean_pruned_fraction": float(
                    np.mean([r.pruned_fraction for r in grp])
                ),
                "mean_preprocess_time": float(
                    np.mean([r.preprocess_time for r in grp])
                ),
                "mean_solve_time": float(np.mean([r.solve_time for r in grp])),
                "mean_best_global_utility": float(
                    np.mean([r.best_global_utility for r in grp])
                ),
            }
        )
    return {"settings": settings}
