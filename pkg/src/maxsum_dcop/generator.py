"""Random n-ary problem generation with a controllable variable tightness.

Tightness is 1 - (number of variables / total arity): for a fixed pool of
scope slots, fewer variables means each one sits in more constraints.
The generator draws per-function arities, sizes the variable pool to hit
the requested tightness (clamped so the widest scope still fits), samples
scopes uniformly without replacement, and finally swaps unused variables
into slots whose occupant appears elsewhere, so every variable ends up
constrained and arities never change.

All randomness flows through one numpy Generator (PCG64) seeded from the
config, so a config reproduces its instance bit-for-bit across platforms.
Draw order is part of that contract: arities, then domain size, then each
scope in function order, then each utility table in function order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .factor_graph import (
    FunctionDecl,
    Problem,
    UtilityTable,
    VariableDecl,
    validate_problem,
)

__all__ = ["ConfigError", "GenConfig", "generate", "var_tightness"]


class ConfigError(ValueError):
    """Raised for generation configs that violate their invariants."""


@dataclass(frozen=True)
class GenConfig:
    """Knobs for one random instance.

    ``domain_size_range`` and ``cost_range`` are inclusive [lo, hi]; one
    domain size is drawn per instance and shared by all variables, and
    utilities are drawn as integers (stored as floats).  ``var_t`` is the
    requested tightness, open interval (0, 1).
    """

    num_functions: int
    min_arity: int
    max_arity: int
    domain_size_range: tuple[int, int]
    cost_range: tuple[int, int]
    var_t: float
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(
            self, "domain_size_range", tuple(int(x) for x in self.domain_size_range)
        )
        object.__setattr__(
            self, "cost_range", tuple(int(x) for x in self.cost_range)
        )
        problems = []
        if self.num_functions < 1:
            problems.append(f"num_functions {self.num_functions} < 1")
        if self.min_arity < 1:
            problems.append(f"min_arity {self.min_arity} < 1")
        if self.max_arity < self.min_arity:
            problems.append(
                f"max_arity {self.max_arity} < min_arity {self.min_arity}"
            )
        if len(self.domain_size_range) != 2 or not (
            1 <= self.domain_size_range[0] <= self.domain_size_range[1]
        ):
            problems.append(f"bad domain_size_range {self.domain_size_range}")
        if len(self.cost_range) != 2 or self.cost_range[0] > self.cost_range[1]:
            problems.append(f"bad cost_range {self.cost_range}")
        if not 0.0 < self.var_t < 1.0:
            problems.append(f"var_t {self.var_t} outside (0, 1)")
        if problems:
            raise ConfigError("; ".join(problems))

    def to_dict(self) -> dict:
        return {
            "num_functions": self.num_functions,
            "min_arity": self.min_arity,
            "max_arity": self.max_arity,
            "domain_size_range": list(self.domain_size_range),
            "cost_range": list(self.cost_range),
            "var_t": self.var_t,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, doc: Mapping) -> "GenConfig":
        try:
            return cls(
                num_functions=int(doc["num_functions"]),
                min_arity=int(doc["min_arity"]),
                max_arity=int(doc["max_arity"]),
                domain_size_range=tuple(doc["domain_size_range"]),
                cost_range=tuple(doc["cost_range"]),
                var_t=float(doc["var_t"]),
                seed=int(doc.get("seed", 0)),
            )
        except (KeyError, TypeError) as e:
            raise ConfigError(f"malformed generation config: {e}") from e


def generate(config: GenConfig) -> Problem:
    """One random problem, a pure function of the config (seed included)."""
    rng = np.random.default_rng(config.seed)
    k = config.num_functions
    arities = rng.integers(config.min_arity, config.max_arity + 1, size=k)
    total_arity = int(arities.sum())
    # pool size targeting the requested tightness, half-up rounding,
    # clamped so the widest drawn scope still has enough distinct variables
    target = math.floor((1.0 - config.var_t) * total_arity + 0.5)
    num_vars = max(int(arities.max()), target, 1)
    domain = int(
        rng.integers(config.domain_size_range[0], config.domain_size_range[1] + 1)
    )

    scopes = [
        np.sort(rng.choice(num_vars, size=int(a), replace=False)).tolist()
        for a in arities
    ]

    counts = [0] * num_vars
    for scope in scopes:
        for vid in scope:
            counts[vid] += 1
    # sweep unused variables into multiply-used slots, first fit
    for orphan in range(num_vars):
        if counts[orphan] > 0:
            continue
        placed = False
        for scope in scopes:
            for slot, vid in enumerate(scope):
                if counts[vid] >= 2:
                    counts[vid] -= 1
                    counts[orphan] += 1
                    scope[slot] = orphan
                    scope.sort()
                    placed = True
                    break
            if placed:
                break
        if not placed:  # unreachable: orphans imply some count >= 2
            raise ConfigError(
                f"cannot place variable {orphan} in any scope without "
                "emptying another variable"
            )

    variables = tuple(
        VariableDecl(id=i, domain_size=domain, owner_agent=f"a{i}")
        for i in range(num_vars)
    )
    functions = []
    for fid, scope in enumerate(scopes):
        shape = tuple(domain for _ in scope)
        size = int(np.prod(shape, dtype=np.int64))
        values = rng.integers(
            config.cost_range[0], config.cost_range[1] + 1, size=size
        ).astype(np.float64)
        functions.append(
            FunctionDecl(id=fid, scope=tuple(scope), table=UtilityTable(shape, values))
        )
    problem = Problem(
        agents=tuple(v.owner_agent for v in variables),
        variables=variables,
        functions=tuple(functions),
    )
    violations = validate_problem(problem)
    if violations:  # pragma: no cover - generator bug guard
        raise RuntimeError("generated an invalid problem: " + "; ".join(violations))
    return problem


def var_tightness(problem: Problem) -> float:
    """Measured tightness: 1 - variables / total scope slots."""
    total_arity = sum(f.arity for f in problem.functions)
    if total_arity == 0:
        raise ValueError("problem has no functions")
    return 1.0 - len(problem.variables) / total_arity
