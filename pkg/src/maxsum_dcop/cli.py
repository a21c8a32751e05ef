"""Command-line entry points: generate, solve, sweep, kernel-bench."""

from __future__ import annotations

import argparse
import json
import sys
import time

import numpy as np

from . import __version__
from .bench import load_sweep_config, summarize, sweep, write_csv
from .engine import BACKEND_TAGS, make_backend, run
from .factor_graph import InvalidProblemError, load_problem, save_problem
from .generator import ConfigError, GenConfig, generate, var_tightness
from .kernels import HAS_NUMBA, numba_enabled


def _load_gen_config(path, seed_override) -> GenConfig:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    cfg = GenConfig.from_dict(doc)
    if seed_override is not None:
        cfg = GenConfig.from_dict({**cfg.to_dict(), "seed": seed_override})
    return cfg


def _cmd_generate(args) -> int:
    cfg = _load_gen_config(args.config, args.seed)
    problem = generate(cfg)
    save_problem(problem, args.out, meta={"generator": cfg.to_dict()})
    print(
        json.dumps(
            {
                "out": str(args.out),
                "variables": len(problem.variables),
                "functions": len(problem.functions),
                "domain_size": problem.variables[0].domain_size,
                "requested_var_t": cfg.var_t,
                "measured_var_tightness": var_tightness(problem),
            },
            indent=1,
        )
    )
    return 0


def _cmd_solve(args) -> int:
    problem = load_problem(args.problem)
    use_numba = False if args.no_numba else None
    backend = make_backend(args.backend, use_numba=use_numba)
    t0 = time.perf_counter()
    backend.prepare(problem)
    preprocess_time = time.perf_counter() - t0
    t0 = time.perf_counter()
    result = run(problem, args.iters, backend, seed=args.seed)
    solve_time = time.perf_counter() - t0
    doc = {
        "backend": result.backend,
        "iterations": result.iterations,
        "seed": result.seed,
        "best_iteration": result.best_iteration,
        "best_assignment": {str(k): int(v) for k, v in result.best_assignment.items()},
        "best_global_utility": result.best_utility,
        "final_global_utility": result.utilities[-1],
        "stats": {
            "leaves_evaluated": result.stats.leaves_evaluated,
            "expansions": result.stats.expansions,
            "prunes": result.stats.prunes,
            "total_leaves": result.stats.total_leaves,
            "pruned_fraction": result.stats.pruned_fraction,
        },
        "max_query_imbalance": result.max_query_imbalance,
        "preprocess_time": preprocess_time,
        "solve_time": solve_time,
    }
    print(json.dumps(doc, indent=1))
    return 0


def _cmd_sweep(args) -> int:
    cfg = load_sweep_config(args.config)
    if args.seed is not None:
        from dataclasses import replace

        cfg = replace(cfg, seed=args.seed)
    use_numba = False if args.no_numba else None
    rows, meta = sweep(cfg, use_numba=use_numba)
    write_csv(rows, args.out)
    doc = summarize(rows)
    doc["rows_written"] = len(rows)
    doc["out"] = str(args.out)
    doc["skips"] = meta["skips"]
    doc["max_query_imbalance"] = meta["max_query_imbalance"]
    print(json.dumps(doc, indent=1))
    return 0


def _cmd_kernel_bench(args) -> int:
    """Time the compiled kernels against the plain-Python fallback."""
    cfg = GenConfig(
        num_functions=args.num_functions,
        min_arity=args.min_arity,
        max_arity=args.max_arity,
        domain_size_range=(args.domain, args.domain),
        cost_range=(0, 99),
        var_t=args.var_t,
        seed=args.seed,
    )
    problem = generate(cfg)
    modes = [("numba", True)] if HAS_NUMBA else []
    modes.append(("python", False))
    report = {"numba_available": HAS_NUMBA, "numba_default": numba_enabled(), "runs": []}
    baseline = {}
    for tag in ("fdsp", "gdp"):
        for mode_name, flag in modes:
            backend = make_backend(tag, use_numba=flag)
            backend.prepare(problem)
            run(problem, 1, backend, seed=args.seed)  # warm the JIT outside timing
            t0 = time.perf_counter()
            result = run(problem, args.iters, backend, seed=args.seed)
            elapsed = time.perf_counter() - t0
            baseline.setdefault(tag, result.best_utility)
            if result.best_utility != baseline[tag]:
                print(
                    f"mode {mode_name} for {tag} changed the result",
                    file=sys.stderr,
                )
                return 1
            report["runs"].append(
                {
                    "backend": tag,
                    "mode": mode_name,
                    "iterations": args.iters,
                    "seconds": elapsed,
                    "best_global_utility": result.best_utility,
                    "pruned_fraction": result.stats.pruned_fraction,
                }
            )
    by_key = {(r["backend"], r["mode"]): r["seconds"] for r in report["runs"]}
    if HAS_NUMBA:
        report["speedup"] = {
            tag: by_key[(tag, "python")] / max(by_key[(tag, "numba")], 1e-12)
            for tag in ("fdsp", "gdp")
        }
    print(json.dumps(report, indent=1))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="maxsum-dcop",
        description=(
            "Max-sum solving of n-ary DCOP instances with exhaustive, "
            "branch-and-bound, and sorted-scan response maximizers."
        ),
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a random problem file")
    p.add_argument("--config", required=True, help="generation config JSON")
    p.add_argument("--out", required=True, help="problem file to write")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("solve", help="run message passing on a problem file")
    p.add_argument("--problem", required=True, help="problem file (JSON)")
    p.add_argument("--backend", choices=BACKEND_TAGS, default="fdsp")
    p.add_argument("--iters", type=int, default=200)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--no-numba", action="store_true", help="force the Python kernels")
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("sweep", help="run a benchmark sweep, append rows to a CSV")
    p.add_argument("--config", required=True, help="sweep config JSON")
    p.add_argument("--out", required=True, help="CSV to append rows to")
    p.add_argument("--seed", type=int, default=None, help="override the sweep seed")
    p.add_argument("--no-numba", action="store_true", help="force the Python kernels")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser(
        "kernel-bench", help="compare compiled kernels with the Python fallback"
    )
    p.add_argument("--num-functions", type=int, default=6)
    p.add_argument("--min-arity", type=int, default=2)
    p.add_argument("--max-arity", type=int, default=3)
    p.add_argument("--domain", type=int, default=3)
    p.add_argument("--var-t", type=float, default=0.5)
    p.add_argument("--iters", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_kernel_bench)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InvalidProblemError as e:
        print("invalid problem:", file=sys.stderr)
        for violation in e.violations:
            print(f"  - {violation}", file=sys.stderr)
        return 2
    except ConfigError as e:
        print(f"bad config: {e}", file=sys.stderr)
        return 2
    except FileNotFoundError as e:
        print(f"file not found: {e.filename or e}", file=sys.stderr)
        return 2
    except json.JSONDecodeError as e:
        print(f"not valid JSON: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
