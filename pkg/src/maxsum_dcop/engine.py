"""Synchronous max-sum message passing with pluggable response maximizers.

Each iteration runs three phases over the whole factor graph: every
variable sends a query to each neighbor function (sum of the other
neighbors' responses, shifted to sum to zero), every function sends a
response to each scope variable (exact maximization of table plus query
sums, via the selected backend), and every variable picks the value
maximizing the sum of incoming responses.  Phases are double-buffered:
messages computed in a phase never feed that same phase.

Backends are interchangeable and exact, so runs produce identical
assignment trajectories regardless of backend; they differ only in how
much of the assignment space they price (tracked in SearchStats).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .factor_graph import (
    FunctionDecl,
    InvalidProblemError,
    Problem,
    global_utility,
    validate_problem,
)
from .fdsp import FdspBackend
from .gdp import GdpBackend
from .stats import SearchStats

__all__ = [
    "MessageStore",
    "RunResult",
    "NaiveBackend",
    "BACKEND_TAGS",
    "make_backend",
    "compute_query",
    "naive_maximize",
    "compute_response",
    "decide_assignment",
    "run",
]


class MessageStore:
    """Mutable message state for one run over one problem.

    Holds the latest query vector per (variable, function) edge and the
    latest response per (function, variable) edge, all zero-initialized,
    plus aggregated search stats and the largest query-sum residual seen.
    """

    def __init__(self, problem: Problem):
        self.problem = problem
        self.queries: dict[tuple[int, int], np.ndarray] = {}
        self.responses: dict[tuple[int, int], np.ndarray] = {}
        for f in problem.functions:
            for vid in f.scope:
                d = problem.domain_size(vid)
                self.queries[(vid, f.id)] = np.zeros(d)
                self.responses[(f.id, vid)] = np.zeros(d)
        self.iteration = 0
        self.stats = SearchStats()
        self.max_query_imbalance = 0.0


def compute_query(variable_id: int, function_id: int, store: MessageStore) -> np.ndarray:
    """Query vector from a variable to one neighbor function.

    Sums the responses from every other neighbor function, then shifts the
    vector to sum to zero (mean subtracted twice to squash the rounding
    residual).  The residual magnitude is recorded on the store.
    """
    problem = store.problem
    neighbors = problem.neighbors_of_variable[variable_id]
    if function_id not in neighbors:
        raise ValueError(
            f"function {function_id} is not a neighbor of variable {variable_id}"
        )
    d = problem.domain_size(variable_id)
    q = np.zeros(d)
    for fid in neighbors:
        if fid != function_id:
            q = q + store.responses[(fid, variable_id)]
    q = q - q.mean()
    q = q - q.mean()
    imbalance = abs(float(q.sum()))
    if imbalance > store.max_query_imbalance:
        store.max_query_imbalance = imbalance
    return q


def naive_maximize(
    function, target_pos: int, queries: Sequence[np.ndarray | None]
) -> tuple[np.ndarray, SearchStats]:
    """Exhaustive response maximization; the oracle the fast paths must match.

    Prices every cell of the table once: result[v] = max over completions
    of table + query sums, for each target value v.
    """
    if isinstance(function, FunctionDecl):
        table = function.table.as_ndarray()
    else:
        table = np.asarray(function, dtype=np.float64)
    n = table.ndim
    if n < 1:
        raise ValueError("function arity must be at least 1")
    if not 0 <= target_pos < n:
        raise ValueError(f"target position {target_pos} out of range for arity {n}")
    if len(queries) != n:
        raise ValueError(f"expected {n} query slots, got {len(queries)}")
    acc = table.astype(np.float64)
    for i in range(n):
        if i == target_pos:
            continue
        if queries[i] is None:
            raise ValueError(f"missing query for non-target position {i}")
        q = np.asarray(queries[i], dtype=np.float64)
        if q.ndim != 1 or q.shape[0] != table.shape[i]:
            raise ValueError(
                f"query for position {i} has shape {q.shape}, "
                f"expected ({table.shape[i]},)"
            )
        view = [1] * n
        view[i] = table.shape[i]
        acc = acc + q.reshape(view)
    axes = tuple(i for i in range(n) if i != target_pos)
    out = acc.max(axis=axes) if axes else acc.copy()
    size = int(table.size)
    return out, SearchStats(size, 0, 0, size)


class NaiveBackend:
    """Backend wrapper around the exhaustive maximizer."""

    tag = "naive"

    def __init__(self, use_numba: bool | None = None):
        del use_numba  # pure numpy; accepted for interface symmetry
        self._problem = None

    def prepare(self, problem: Problem) -> None:
        self._problem = problem

    def respond(
        self, function: FunctionDecl, target_pos: int, queries
    ) -> tuple[np.ndarray, SearchStats]:
        return naive_maximize(function, target_pos, queries)


BACKEND_TAGS = ("naive", "fdsp", "gdp")


def make_backend(tag: str, use_numba: bool | None = None):
    if tag == "naive":
        return NaiveBackend()
    if tag == "fdsp":
        return FdspBackend(use_numba=use_numba)
    if tag == "gdp":
        return GdpBackend(use_numba=use_numba)
    raise ValueError(f"unknown backend {tag!r}; expected one of {BACKEND_TAGS}")


def compute_response(
    function_id: int, target_variable_id: int, store: MessageStore, backend
) -> np.ndarray:
    """Response vector from a function to one scope variable.

    Delegates the maximization to the backend and folds its search stats
    into the store's aggregate.
    """
    problem = store.problem
    function = problem.function_by_id[function_id]
    if target_variable_id not in function.scope:
        raise ValueError(
            f"variable {target_variable_id} is not in the scope of "
            f"function {function_id}"
        )
    target_pos = function.scope.index(target_variable_id)
    queries = [
        None if vid == target_variable_id else store.queries[(vid, function_id)]
        for vid in function.scope
    ]
    out, stats = backend.respond(function, target_pos, queries)
    store.stats += stats
    return out


def decide_assignment(variable_id: int, store: MessageStore) -> int:
    """Value maximizing the summed incoming responses; ties pick the lowest."""
    problem = store.problem
    d = problem.domain_size(variable_id)
    belief = np.zeros(d)
    for fid in problem.neighbors_of_variable[variable_id]:
        belief = belief + store.responses[(fid, variable_id)]
    return int(np.argmax(belief))


@dataclass(frozen=True)
class RunResult:
    """Outcome of one message-passing run.

    ``assignments[0]`` and ``utilities[0]`` record the decision taken on
    the zero-initialized messages before any iteration; entry k records
    iteration k.  Best-so-far fields implement anytime behavior.
    """

    backend: str
    iterations: int
    seed: int | None
    assignments: tuple
    utilities: tuple
    best_iteration: int
    best_assignment: Mapping[int, int]
    best_utility: float
    stats: SearchStats
    max_query_imbalance: float


def run(
    problem: Problem,
    iterations: int,
    backend="fdsp",
    seed: int | None = None,
    use_numba: bool | None = None,
) -> RunResult:
    """Run synchronous message passing for a fixed number of iterations.

    ``backend`` is a tag from BACKEND_TAGS or a prepared backend instance
    (re-prepared only if it was prepared for a different problem).  The
    schedule is deterministic, so ``seed`` is recorded in the result for
    bookkeeping but drawn from nowhere.
    """
    violations = validate_problem(problem)
    if violations:
        raise InvalidProblemError(violations)
    if iterations < 0:
        raise ValueError("iterations must be >= 0")
    if isinstance(backend, str):
        backend = make_backend(backend, use_numba=use_numba)
    if getattr(backend, "_problem", None) is not problem:
        backend.prepare(problem)

    store = MessageStore(problem)
    assignments = []
    utilities = []

    def record():
        assignment = {
            v.id: decide_assignment(v.id, store) for v in problem.variables
        }
        assignments.append(assignment)
        utilities.append(global_utility(problem, assignment))

    record()  # decision on all-zero messages
    for it in range(1, iterations + 1):
        new_queries = {}
        for v in problem.variables:
            for fid in problem.neighbors_of_variable[v.id]:
                new_queries[(v.id, fid)] = compute_query(v.id, fid, store)
        store.queries = new_queries
        new_responses = {}
        for f in problem.functions:
            for vid in f.scope:
                new_responses[(f.id, vid)] = compute_response(
                    f.id, vid, store, backend
                )
        store.responses = new_responses
        store.iteration = it
        record()

    best_iteration = int(np.argmax(utilities))
    return RunResult(
        backend=backend.tag,
        iterations=iterations,
        seed=seed,
        assignments=tuple(assignments),
        utilities=tuple(utilities),
        best_iteration=best_iteration,
        best_assignment=assignments[best_iteration],
        best_utility=utilities[best_iteration],
        stats=store.stats,
        max_query_imbalance=store.max_query_imbalance,
    )
