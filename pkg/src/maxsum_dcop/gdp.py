"""Sort-based response maximization with a one-shot pruned range.

For every (target position, target value) pair the function table's slice
is pre-sorted descending.  At response time a single cut is derived from
the query vectors: with p the slice maximum, m the sum of query maxima,
and b the query sum at p's first-listed completion, only slice entries
with local utility above (or at, see below) ``p - (m - b)`` can beat p's
own total, so the scan covers just a prefix of the sorted slice.

The cut never adapts during the scan; it is a function of the slice and
the queries alone.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .factor_graph import FunctionDecl
from .kernels import pack_queries, sorted_scan_search
from .stats import SearchStats

__all__ = [
    "SortedSlices",
    "GdpRange",
    "gdp_preprocess",
    "gdp_range",
    "gdp_maximize",
    "GdpBackend",
]


@dataclass(frozen=True)
class SortedSlices:
    """Descending-sorted table slices for every (target position, value).

    ``values[t]`` has shape (d_t, L) with each row sorted non-increasing;
    ``completions[t]`` carries the matching row-major completion indices
    over the non-target positions, ties listed in ascending completion
    order (stable sort).
    """

    shape: tuple[int, ...]
    values: Mapping[int, np.ndarray]
    completions: Mapping[int, np.ndarray]

    @property
    def arity(self) -> int:
        return len(self.shape)

    def slice_for(self, target_pos: int, value: int) -> tuple[np.ndarray, np.ndarray]:
        return self.values[target_pos][value], self.completions[target_pos][value]


@dataclass(frozen=True)
class GdpRange:
    """One-shot scan range over a sorted slice.

    Utilities u with q <= u <= p are scanned when ``inclusive_q``, else
    q < u <= p; ``scan_count`` is the resulting prefix length, which always
    covers at least the leading ties at p.
    """

    p: float
    q: float
    inclusive_q: bool
    t_gap: float
    scan_count: int


def gdp_preprocess(function) -> SortedSlices:
    """Sort every slice of the table, for every possible target position."""
    if isinstance(function, FunctionDecl):
        table = function.table.as_ndarray()
    else:
        table = np.asarray(function, dtype=np.float64)
    n = table.ndim
    if n < 1:
        raise ValueError("function arity must be at least 1")
    values: dict[int, np.ndarray] = {}
    completions: dict[int, np.ndarray] = {}
    for t in range(n):
        sl = np.moveaxis(table, t, 0).reshape(table.shape[t], -1)
        order = np.argsort(-sl, axis=1, kind="stable").astype(np.int64)
        svals = np.take_along_axis(sl, order, axis=1)
        svals.setflags(write=False)
        order.setflags(write=False)
        values[t] = svals
        completions[t] = order
    return SortedSlices(
        shape=tuple(int(d) for d in table.shape),
        values=values,
        completions=completions,
    )


def _cut_prefix(svals: np.ndarray, theta: float) -> tuple[float, bool, int]:
    """(q, inclusive_q, scan_count) for a descending row and a cut value."""
    L = svals.shape[0]
    p = svals[0]
    lo, hi = 0, L
    while lo < hi:
        mid = (lo + hi) // 2
        if svals[mid] <= theta:
            hi = mid
        else:
            lo = mid + 1
    if lo == L:
        # nothing at or below the cut: the whole slice stays in play
        return float(svals[L - 1]), True, L
    if svals[lo] == theta:
        run = 1
        while run < L and svals[run] == p:
            run += 1
        return float(theta), False, max(lo, run)
    q = svals[lo]
    rq = lo + 1
    while rq < L and svals[rq] == q:
        rq += 1
    return float(q), True, rq


def gdp_range(
    slices: SortedSlices,
    target_pos: int,
    target_value: int,
    queries: Sequence[np.ndarray | None],
) -> GdpRange:
    """Derive the scan range for one (target, value) slice.

    Mirrors the scan kernel's arithmetic; tests hold the two to identical
    scan counts.
    """
    shape = slices.shape
    n = len(shape)
    svals, scomp = slices.slice_for(target_pos, target_value)
    srch = [i for i in range(n) if i != target_pos]
    m_sum = 0.0
    for i in srch:
        m_sum += float(np.max(queries[i]))
    c = int(scomp[0])
    b = 0.0
    for i in reversed(srch):
        d = shape[i]
        b += float(queries[i][c % d])
        c //= d
    t_gap = m_sum - b
    theta = float(svals[0]) - t_gap
    q, inclusive_q, scan_count = _cut_prefix(svals, theta)
    return GdpRange(
        p=float(svals[0]),
        q=q,
        inclusive_q=inclusive_q,
        t_gap=t_gap,
        scan_count=scan_count,
    )


def gdp_maximize(
    function,
    target_pos: int,
    queries: Sequence[np.ndarray | None],
    slices: SortedSlices | None = None,
    *,
    use_numba: bool | None = None,
) -> tuple[np.ndarray, SearchStats]:
    """Exact response vector via sorted slices and the one-shot range.

    Stats count scanned completions as evaluated leaves; entries beyond
    the cut are prunes.  No node bounds are computed, so expansions stay 0.
    """
    if isinstance(function, FunctionDecl):
        table = function.table.as_ndarray()
    else:
        table = np.asarray(function, dtype=np.float64)
    shape = table.shape
    n = table.ndim
    if not 0 <= target_pos < n:
        raise ValueError(f"target position {target_pos} out of range for arity {n}")
    if len(queries) != n:
        raise ValueError(f"expected {n} query slots, got {len(queries)}")
    for i in range(n):
        if i != target_pos and queries[i] is None:
            raise ValueError(f"missing query for non-target position {i}")
    if slices is None:
        slices = gdp_preprocess(table)
    dt = int(shape[target_pos])
    queries2d = pack_queries(shape, queries, target_pos)
    shape_arr = np.asarray(shape, dtype=np.int64)
    out = np.zeros(dt, dtype=np.float64)
    stats = np.zeros(4, dtype=np.int64)
    sorted_scan_search(
        shape_arr, target_pos, queries2d,
        slices.values[target_pos], slices.completions[target_pos],
        out, stats, use_numba=use_numba,
    )
    return out, SearchStats(int(stats[0]), int(stats[1]), int(stats[2]), int(stats[3]))


class GdpBackend:
    """Sorted-slice maximizer with per-problem prepared state."""

    tag = "gdp"

    def __init__(self, use_numba: bool | None = None):
        self.use_numba = use_numba
        self._slices: dict[int, SortedSlices] = {}
        self._problem = None

    def prepare(self, problem) -> None:
        self._slices = {f.id: gdp_preprocess(f) for f in problem.functions}
        self._problem = problem

    def slices_for(self, function_id: int) -> SortedSlices:
        return self._slices[function_id]

    def respond(
        self, function: FunctionDecl, target_pos: int, queries
    ) -> tuple[np.ndarray, SearchStats]:
        slices = self._slices.get(function.id)
        if slices is None:
            raise RuntimeError(
                f"backend not prepared for function {function.id}; call prepare()"
            )
        return gdp_maximize(
            function, target_pos, queries, slices, use_numba=self.use_numba
        )
