"""Branch-and-bound response maximization over decomposed utility tables.

The maximizer answers, for one function and one target scope position,
the vector ``result[v] = max over completions of table + query sums`` —
the same contract as the exhaustive maximizer, but it prices only a small
corner of the assignment space.

Two precomputations feed the bound:

* Function estimates: for every prefix of the scope, the max of the table
  over all suffix completions ("uninformed"), and the same with one later
  position pinned to each of its values ("informed").  Built once per
  table, back to front, each level a single axis-max of the previous one.
* Message estimates: for every position, the sum of query-vector maxima
  over all later non-target positions.  Rebuilt per response message, or
  incrementally via :class:`MsgEstCache` when only some queries changed.

The search itself expands partial assignments depth-first, ascending by
position and value, discarding a node whenever its bound fails to strictly
exceed the best complete utility found for the current target value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from types import MappingProxyType
from typing import Mapping, Sequence

import numpy as np

from .factor_graph import FunctionDecl
from .kernels import branch_bound_search, pack_queries
from .stats import SearchStats

__all__ = [
    "FunctionEstimates",
    "decompose",
    "estimate_cell_count",
    "build_message_estimates",
    "upper_bound",
    "TraceEvent",
    "fdsp_maximize",
    "MsgEstCache",
    "FdspBackend",
]


@dataclass(frozen=True)
class FunctionEstimates:
    """Prefix max-marginal tables of one utility tensor.

    ``uninformed[i]`` spans scope positions 0..i and holds the max of the
    table over all completions of that prefix.  ``informed[(i, j)]`` spans
    positions 0..i plus a trailing axis for position j's value (j > i),
    holding the max over completions with position j pinned.  The last
    uninformed level is the table itself; the (j-1, j) informed level is
    the j-level uninformed table viewed with its last axis as the pin.
    """

    shape: tuple[int, ...]
    uninformed: tuple[np.ndarray, ...]
    informed: Mapping[tuple[int, int], np.ndarray]

    @property
    def arity(self) -> int:
        return len(self.shape)

    def informed_table(self, i: int, j: int, value: int) -> np.ndarray:
        """Prefix table over positions 0..i with position j pinned."""
        return self.informed[(i, j)][..., value]


def _as_table(function) -> np.ndarray:
    if isinstance(function, FunctionDecl):
        return function.table.as_ndarray()
    return np.asarray(function, dtype=np.float64)


def decompose(function) -> FunctionEstimates:
    """Build every prefix estimate table for one function.

    Accepts a FunctionDecl or a bare ndarray.  Cost is one axis-max per
    produced level; all outputs are read-only.
    """
    table = _as_table(function).view()  # fresh view so flag changes stay local
    n = table.ndim
    if n < 1:
        raise ValueError("function arity must be at least 1")
    unin: list[np.ndarray] = [table] * n
    unin[n - 1] = table
    for i in range(n - 2, -1, -1):
        unin[i] = unin[i + 1].max(axis=i + 1)
    informed: dict[tuple[int, int], np.ndarray] = {}
    for j in range(1, n):
        cur = unin[j]  # axes: positions 0..j; the last is position j's value
        informed[(j - 1, j)] = cur
        for i in range(j - 2, -1, -1):
            cur = cur.max(axis=i + 1)
            informed[(i, j)] = cur
    for arr in unin:
        arr.setflags(write=False)
    for arr in informed.values():
        arr.setflags(write=False)
    return FunctionEstimates(
        shape=tuple(int(d) for d in table.shape),
        uninformed=tuple(unin),
        informed=MappingProxyType(informed),
    )


def estimate_cell_count(estimates: FunctionEstimates) -> int:
    """Total cells across all estimate tables (shared levels counted per role)."""
    total = sum(int(a.size) for a in estimates.uninformed)
    total += sum(int(a.size) for a in estimates.informed.values())
    return total


def build_message_estimates(
    n: int, target_pos: int, queries: Sequence[np.ndarray | None]
) -> np.ndarray:
    """Suffix sums of query maxima, skipping the target position.

    ``out[i]`` is the sum of ``max(queries[j])`` over all j > i with
    j != target_pos; the last non-target position gets 0.  Computed by one
    right-to-left pass so partial rebuilds can splice in bit-identically.
    """
    if not 0 <= target_pos < n:
        raise ValueError(f"target position {target_pos} out of range for arity {n}")
    out = np.zeros(n, dtype=np.float64)
    acc = 0.0
    for i in range(n - 1, -1, -1):
        out[i] = acc
        if i != target_pos:
            q = queries[i]
            if q is None:
                raise ValueError(f"missing query for non-target position {i}")
            acc += float(np.max(q))
    return out


def upper_bound(
    position: int,
    target_pos: int,
    target_value: int,
    prefix: Sequence[int],
    msg_util: float,
    estimates: FunctionEstimates,
    msg_estimates: np.ndarray,
) -> float:
    """Bound on any completion of a prefix with the target pinned.

    ``prefix`` assigns scope positions 0..position; when the target lies
    inside it, its slot must hold ``target_value``.  ``msg_util`` is the
    caller-accumulated sum of query values over assigned non-target
    positions.  At the last position the bound equals the exact total.
    """
    if position == target_pos:
        raise ValueError("the target position is never an expansion position")
    if len(prefix) != position + 1:
        raise ValueError(
            f"prefix length {len(prefix)} does not reach position {position}"
        )
    if position > target_pos and prefix[target_pos] != target_value:
        raise ValueError("prefix disagrees with the target value at the target slot")
    if position > target_pos:
        fun = estimates.uninformed[position][tuple(int(v) for v in prefix)]
    else:
        fun = estimates.informed[(position, target_pos)][
            tuple(int(v) for v in prefix) + (int(target_value),)
        ]
    return float(msg_util + msg_estimates[position] + fun)


@dataclass(frozen=True)
class TraceEvent:
    """One node visit of the instrumented search."""

    target_value: int
    depth: int
    position: int
    value: int
    ub: float
    parent_ub: float | None
    lb_before: float
    action: str  # "expand" | "prune" | "leaf"
    leaf_utility: float | None = None


def _pack_uninformed(est: FunctionEstimates) -> tuple[np.ndarray, np.ndarray]:
    off = np.zeros(est.arity, dtype=np.int64)
    parts = []
    pos = 0
    for i, arr in enumerate(est.uninformed):
        off[i] = pos
        flat = np.ascontiguousarray(arr).reshape(-1)
        parts.append(flat)
        pos += flat.size
    return np.concatenate(parts), off


def _pack_informed(est: FunctionEstimates, target_pos: int) -> tuple[np.ndarray, np.ndarray]:
    n = est.arity
    off = np.zeros(n, dtype=np.int64)
    if target_pos == 0:
        return np.zeros(0, dtype=np.float64), off
    parts = []
    pos = 0
    for i in range(target_pos):
        off[i] = pos
        flat = np.ascontiguousarray(est.informed[(i, target_pos)]).reshape(-1)
        parts.append(flat)
        pos += flat.size
    return np.concatenate(parts), off


def _traced_search(
    table_flat: np.ndarray,
    shape: Sequence[int],
    t: int,
    queries2d: np.ndarray,
    msg_est: np.ndarray,
    unin_cat: np.ndarray,
    unin_off: np.ndarray,
    info_cat: np.ndarray,
    info_off: np.ndarray,
    out: np.ndarray,
    stats: np.ndarray,
    events: list[TraceEvent],
) -> None:
    """Recursive mirror of the compiled search that records every visit.

    Visit order, lookups, and arithmetic expressions match the kernel
    exactly, so results and stats are bit-identical to the fast path.
    """
    n = len(shape)
    dt = int(shape[t])
    srch = [i for i in range(n) if i != t]
    m = len(srch)
    counters = [0, 0, 0]  # leaves, expansions, prunes

    for vt in range(dt):
        lb = -math.inf

        def visit(depth: int, base_pi: int, mu_parent: float, parent_ub: float | None):
            nonlocal lb
            i = srch[depth]
            base = base_pi * dt + vt if i - 1 == t else base_pi
            for v in range(int(shape[i])):
                pi = base * int(shape[i]) + v
                mu = mu_parent + queries2d[i, v]
                if i < t:
                    fun = info_cat[info_off[i] + pi * dt + vt]
                else:
                    fun = unin_cat[unin_off[i] + pi]
                ub = mu + msg_est[i] + fun
                counters[1] += 1
                lb_before = lb
                if ub > lb:
                    if depth == m - 1:
                        flat = pi * dt + vt if t == n - 1 else pi
                        ret = table_flat[flat] + mu
                        counters[0] += 1
                        lb = ub
                        events.append(
                            TraceEvent(vt, depth, i, v, float(ub), parent_ub,
                                       lb_before, "leaf", float(ret))
                        )
                    else:
                        events.append(
                            TraceEvent(vt, depth, i, v, float(ub), parent_ub,
                                       lb_before, "expand")
                        )
                        visit(depth + 1, pi, mu, float(ub))
                else:
                    counters[2] += 1
                    events.append(
                        TraceEvent(vt, depth, i, v, float(ub), parent_ub,
                                   lb_before, "prune")
                    )

        visit(0, 0, 0.0, None)
        out[vt] = lb
    stats[0] += counters[0]
    stats[1] += counters[1]
    stats[2] += counters[2]
    stats[3] += int(np.prod([int(d) for d in shape], dtype=np.int64))


def _check_queries(shape, target_pos, queries) -> None:
    n = len(shape)
    if not 0 <= target_pos < n:
        raise ValueError(f"target position {target_pos} out of range for arity {n}")
    if len(queries) != n:
        raise ValueError(f"expected {n} query slots, got {len(queries)}")
    for i in range(n):
        if i == target_pos:
            continue
        if queries[i] is None:
            raise ValueError(f"missing query for non-target position {i}")


def fdsp_maximize(
    function,
    target_pos: int,
    queries: Sequence[np.ndarray | None],
    estimates: FunctionEstimates | None = None,
    msg_estimates: np.ndarray | None = None,
    *,
    use_numba: bool | None = None,
    trace: list[TraceEvent] | None = None,
) -> tuple[np.ndarray, SearchStats]:
    """Exact response vector for one (function, target) pair, with pruning.

    ``queries`` is one vector per scope position, the target slot ignored
    (may be None).  Pass ``estimates`` to reuse a decomposition and
    ``msg_estimates`` to reuse cached suffix maxima.  A ``trace`` list
    switches to an instrumented pure-Python search that records every node
    visit while producing identical results and stats.
    """
    table = _as_table(function)
    shape = table.shape
    n = table.ndim
    _check_queries(shape, target_pos, queries)
    dt = int(shape[target_pos])

    if n == 1:
        out = table.astype(np.float64).copy()
        return out, SearchStats(dt, 0, 0, dt)

    if estimates is None:
        estimates = decompose(table)
    if msg_estimates is None:
        msg_estimates = build_message_estimates(n, target_pos, queries)
    unin_cat, unin_off = _pack_uninformed(estimates)
    info_cat, info_off = _pack_informed(estimates, target_pos)
    queries2d = pack_queries(shape, queries, target_pos)
    shape_arr = np.asarray(shape, dtype=np.int64)
    out = np.zeros(dt, dtype=np.float64)
    stats = np.zeros(4, dtype=np.int64)
    if trace is not None:
        _traced_search(
            np.ascontiguousarray(table).reshape(-1), shape, target_pos, queries2d,
            msg_estimates, unin_cat, unin_off, info_cat, info_off, out, stats, trace,
        )
    else:
        branch_bound_search(
            shape_arr, target_pos, queries2d, msg_estimates,
            unin_cat, unin_off, info_cat, info_off, out, stats,
            use_numba=use_numba,
        )
    return out, SearchStats(int(stats[0]), int(stats[1]), int(stats[2]), int(stats[3]))


class MsgEstCache:
    """Incremental message-estimate maintenance keyed by (function, target).

    A refresh compares the new query rows against the last seen ones and
    recomputes only the entries before the highest changed position,
    splicing onto the still-valid suffix.  Results are bit-identical to a
    full rebuild because the surviving suffix was produced by the same
    right-to-left fold.
    """

    def __init__(self):
        self._rows: dict = {}
        self._est: dict = {}
        self.hits = 0
        self.partial_rebuilds = 0
        self.full_builds = 0

    def refresh(self, key, target_pos: int, queries: Sequence[np.ndarray | None]) -> np.ndarray:
        n = len(queries)
        rows = [
            None if i == target_pos else np.asarray(queries[i], dtype=np.float64).copy()
            for i in range(n)
        ]
        old = self._rows.get(key)
        if old is None or len(old) != n:
            est = build_message_estimates(n, target_pos, queries)
            self._rows[key] = rows
            self._est[key] = est
            self.full_builds += 1
            return est
        changed = [
            i
            for i in range(n)
            if i != target_pos and not np.array_equal(old[i], rows[i])
        ]
        if not changed:
            self.hits += 1
            return self._est[key]
        i0 = max(changed)
        est = self._est[key].copy()
        acc = est[i0] + float(np.max(rows[i0]))
        for i in range(i0 - 1, -1, -1):
            est[i] = acc
            if i != target_pos:
                acc += float(np.max(rows[i]))
        self._rows[key] = rows
        self._est[key] = est
        self.partial_rebuilds += 1
        return est


@dataclass
class _FdspPack:
    """Per-function arrays staged for the search kernel."""

    shape_arr: np.ndarray
    estimates: FunctionEstimates
    unin_cat: np.ndarray
    unin_off: np.ndarray
    info: dict  # target position -> (info_cat, info_off)

    @classmethod
    def build(cls, function: FunctionDecl) -> "_FdspPack":
        est = decompose(function)
        unin_cat, unin_off = _pack_uninformed(est)
        info = {
            t: _pack_informed(est, t) for t in range(est.arity)
        }
        return cls(
            shape_arr=np.asarray(est.shape, dtype=np.int64),
            estimates=est,
            unin_cat=unin_cat,
            unin_off=unin_off,
            info=info,
        )


class FdspBackend:
    """Pruned-search maximizer with per-problem prepared state."""

    tag = "fdsp"

    def __init__(self, use_numba: bool | None = None):
        self.use_numba = use_numba
        self._packs: dict[int, _FdspPack] = {}
        self._msg_cache = MsgEstCache()
        self._problem = None

    def prepare(self, problem) -> None:
        self._packs = {f.id: _FdspPack.build(f) for f in problem.functions}
        self._msg_cache = MsgEstCache()
        self._problem = problem

    @property
    def msg_cache(self) -> MsgEstCache:
        return self._msg_cache

    def estimates_for(self, function_id: int) -> FunctionEstimates:
        return self._packs[function_id].estimates

    def respond(
        self, function: FunctionDecl, target_pos: int, queries
    ) -> tuple[np.ndarray, SearchStats]:
        pack = self._packs.get(function.id)
        if pack is None:
            raise RuntimeError(
                f"backend not prepared for function {function.id}; call prepare()"
            )
        shape = pack.estimates.shape
        n = len(shape)
        _check_queries(shape, target_pos, queries)
        dt = int(shape[target_pos])
        if n == 1:
            out = function.table.values.astype(np.float64).copy()
            return out, SearchStats(dt, 0, 0, dt)
        msg_est = self._msg_cache.refresh(
            (function.id, target_pos), target_pos, queries
        )
        info_cat, info_off = pack.info[target_pos]
        queries2d = pack_queries(shape, queries, target_pos)
        out = np.zeros(dt, dtype=np.float64)
        stats = np.zeros(4, dtype=np.int64)
        branch_bound_search(
            pack.shape_arr, target_pos, queries2d, msg_est,
            pack.unin_cat, pack.unin_off, info_cat, info_off, out, stats,
            use_numba=self.use_numba,
        )
        return out, SearchStats(
            int(stats[0]), int(stats[1]), int(stats[2]), int(stats[3])
        )
