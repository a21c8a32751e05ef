"""Factor-graph data model for n-ary DCOP instances.

A problem is a bipartite factor graph: variable-nodes with finite integer
domains and function-nodes holding dense utility tables over an ordered
scope of variables.  Values are represented as indices ``0..d-1``.  Tables
are stored flat in row-major order (the last scope variable varies
fastest), which keeps prefix indexing cheap for the search kernels.

All types are immutable after construction and safe to share across
workers.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "UNASSIGNED",
    "VariableDecl",
    "UtilityTable",
    "FunctionDecl",
    "Problem",
    "InvalidProblemError",
    "row_major_index",
    "table_lookup",
    "global_utility",
    "validate_problem",
    "problem_to_dict",
    "problem_from_dict",
    "save_problem",
    "load_problem",
]

UNASSIGNED = None  # open slot in a joint assignment


class InvalidProblemError(ValueError):
    """Raised when a problem fails validation.

    ``violations`` holds one human-readable string per broken invariant.
    """

    def __init__(self, violations: list[str]):
        self.violations = list(violations)
        super().__init__(
            "invalid problem: " + "; ".join(self.violations)
        )


@dataclass(frozen=True)
class VariableDecl:
    """One variable-node; values are indices 0..domain_size-1."""

    id: int
    domain_size: int
    owner_agent: str = ""


@dataclass(frozen=True, eq=False)
class UtilityTable:
    """Dense utility tensor for one constraint, flat and row-major."""

    shape: tuple[int, ...]
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "shape", tuple(int(d) for d in self.shape))
        vals = np.ascontiguousarray(self.values, dtype=np.float64).reshape(-1)
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def __eq__(self, other):
        if not isinstance(other, UtilityTable):
            return NotImplemented
        return self.shape == other.shape and np.array_equal(self.values, other.values)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape, dtype=np.int64)) if self.shape else 0

    def as_ndarray(self) -> np.ndarray:
        """Read-only n-dimensional view of the flat values."""
        return self.values.reshape(self.shape)


@dataclass(frozen=True)
class FunctionDecl:
    """One function-node: an ordered scope of variable ids plus its table."""

    id: int
    scope: tuple[int, ...]
    table: UtilityTable

    def __post_init__(self):
        object.__setattr__(self, "scope", tuple(int(v) for v in self.scope))

    @property
    def arity(self) -> int:
        return len(self.scope)


@dataclass(frozen=True)
class Problem:
    """A DCOP instance: agents, variables, and n-ary constraints."""

    agents: tuple[str, ...]
    variables: tuple[VariableDecl, ...]
    functions: tuple[FunctionDecl, ...]

    def __post_init__(self):
        object.__setattr__(self, "agents", tuple(self.agents))
        object.__setattr__(self, "variables", tuple(self.variables))
        object.__setattr__(self, "functions", tuple(self.functions))

    @cached_property
    def variable_by_id(self) -> dict[int, VariableDecl]:
        return {v.id: v for v in self.variables}

    @cached_property
    def function_by_id(self) -> dict[int, FunctionDecl]:
        return {f.id: f for f in self.functions}

    @cached_property
    def neighbors_of_variable(self) -> dict[int, tuple[int, ...]]:
        """Function ids adjacent to each variable, in function order."""
        adj: dict[int, list[int]] = {v.id: [] for v in self.variables}
        for f in self.functions:
            for vid in f.scope:
                if vid in adj:
                    adj[vid].append(f.id)
        return {vid: tuple(fids) for vid, fids in adj.items()}

    def domain_size(self, variable_id: int) -> int:
        return self.variable_by_id[variable_id].domain_size


def row_major_index(shape: Sequence[int], assignment: Sequence[int]) -> int:
    """Flat index of a fully-assigned tuple, last axis fastest."""
    if len(assignment) != len(shape):
        raise ValueError(
            f"assignment length {len(assignment)} != table arity {len(shape)}"
        )
    idx = 0
    for d, v in zip(shape, assignment):
        if v is UNASSIGNED:
            raise ValueError("assignment has an unassigned slot")
        v = int(v)
        if not 0 <= v < d:
            raise ValueError(f"value {v} out of range for axis of size {d}")
        idx = idx * d + v
    return idx


def table_lookup(table: UtilityTable, assignment: Sequence[int]) -> float:
    """Utility of one fully-assigned tuple of the table's scope."""
    return float(table.values[row_major_index(table.shape, assignment)])


def global_utility(
    problem: Problem, assignment: Mapping[int, int] | Sequence[int]
) -> float:
    """Sum of all function tables under a joint assignment.

    ``assignment`` is either a mapping from variable id to value or a
    sequence aligned with ``problem.variables``.
    """
    if isinstance(assignment, Mapping):
        values = dict(assignment)
    else:
        if len(assignment) != len(problem.variables):
            raise ValueError(
                f"expected one value per variable "
                f"({len(problem.variables)}), got {len(assignment)}"
            )
        values = {v.id: assignment[i] for i, v in enumerate(problem.variables)}
    total = 0.0
    for f in problem.functions:
        try:
            local = [values[vid] for vid in f.scope]
        except KeyError as e:
            raise ValueError(f"no value for variable {e.args[0]}") from None
        total += table_lookup(f.table, local)
    return total


def validate_problem(problem: Problem) -> list[str]:
    """All invariant violations in the problem; empty means valid."""
    violations: list[str] = []
    var_ids = [v.id for v in problem.variables]
    if len(set(var_ids)) != len(var_ids):
        violations.append("duplicate variable ids")
    for v in problem.variables:
        if v.domain_size < 1:
            violations.append(f"variable {v.id}: domain_size {v.domain_size} < 1")
    fun_ids = [f.id for f in problem.functions]
    if len(set(fun_ids)) != len(fun_ids):
        violations.append("duplicate function ids")

    by_id = {v.id: v for v in problem.variables}
    covered: set[int] = set()
    for f in problem.functions:
        if f.arity < 1:
            violations.append(f"function {f.id}: empty scope")
            continue
        unknown = [vid for vid in f.scope if vid not in by_id]
        if unknown:
            violations.append(f"function {f.id}: unknown variables {unknown}")
        if any(b <= a for a, b in zip(f.scope, f.scope[1:])):
            violations.append(
                f"function {f.id}: scope {list(f.scope)} is not strictly increasing"
            )
        covered.update(f.scope)
        if len(f.table.shape) != f.arity:
            violations.append(
                f"function {f.id}: table has {len(f.table.shape)} axes "
                f"for arity {f.arity}"
            )
        else:
            for pos, vid in enumerate(f.scope):
                if vid in by_id and f.table.shape[pos] != by_id[vid].domain_size:
                    violations.append(
                        f"function {f.id}: axis {pos} has length "
                        f"{f.table.shape[pos]}, variable {vid} has domain "
                        f"{by_id[vid].domain_size}"
                    )
        if f.table.values.size != f.table.size:
            violations.append(
                f"function {f.id}: {f.table.values.size} values for shape "
                f"{list(f.table.shape)}"
            )
        if not np.all(np.isfinite(f.table.values)):
            violations.append(f"function {f.id}: non-finite utilities")
    for v in problem.variables:
        if v.id not in covered:
            violations.append(f"variable {v.id} appears in no scope")
    return violations


# ---------------------------------------------------------------------------
# Problem file format (UTF-8 JSON)
# ---------------------------------------------------------------------------

def problem_to_dict(problem: Problem, meta: dict | None = None) -> dict:
    return {
        "variables": [
            {"id": v.id, "domain_size": v.domain_size, "agent": v.owner_agent}
            for v in problem.variables
        ],
        "functions": [
            {
                "id": f.id,
                "scope": list(f.scope),
                "shape": list(f.table.shape),
                "values": f.table.values.tolist(),
            }
            for f in problem.functions
        ],
        "meta": dict(meta) if meta else {},
    }


def problem_from_dict(doc: Mapping) -> Problem:
    """Build and validate a problem from its JSON document form."""
    try:
        variables = tuple(
            VariableDecl(
                id=int(v["id"]),
                domain_size=int(v["domain_size"]),
                owner_agent=str(v.get("agent", "")),
            )
            for v in doc["variables"]
        )
        functions = tuple(
            FunctionDecl(
                id=int(f["id"]),
                scope=tuple(int(x) for x in f["scope"]),
                table=UtilityTable(
                    shape=tuple(int(d) for d in f["shape"]),
                    values=np.asarray(f["values"], dtype=np.float64),
                ),
            )
            for f in doc["functions"]
        )
    except (KeyError, TypeError, ValueError) as e:
        raise InvalidProblemError([f"malformed document: {e}"]) from e
    agents: list[str] = []
    for v in variables:
        if v.owner_agent and v.owner_agent not in agents:
            agents.append(v.owner_agent)
    problem = Problem(agents=tuple(agents), variables=variables, functions=functions)
    violations = validate_problem(problem)
    if violations:
        raise InvalidProblemError(violations)
    return problem


def save_problem(problem: Problem, path, meta: dict | None = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(problem_to_dict(problem, meta), fh, indent=1)
        fh.write("\n")


def load_problem(path) -> Problem:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if not isinstance(doc, dict):
        raise InvalidProblemError(["top-level document is not an object"])
    return problem_from_dict(doc)
