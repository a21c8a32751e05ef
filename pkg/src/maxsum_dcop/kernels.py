"""Hot search loops for response-message maximization.

Two kernels live here: a depth-first branch-and-bound over partial
assignments guided by precomputed prefix maxima plus query headroom, and a
descending-sorted slice scan with a one-shot cut.  Each is written once as
a plain Python function over numpy arrays and compiled with numba when
available; the uncompiled function doubles as the fallback path, so both
modes execute the identical algorithm and arithmetic.

Numba use is controlled three ways, in priority order: an explicit
``use_numba`` argument to the dispatch helpers, the environment variable
``MAXSUM_DCOP_DISABLE_NUMBA`` (any non-empty value forces the fallback),
and whether numba imported at all.
"""

from __future__ import annotations

import os

import numpy as np

try:
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba installed
    njit = None
    HAS_NUMBA = False

__all__ = [
    "HAS_NUMBA",
    "DISABLE_ENV_VAR",
    "numba_enabled",
    "pack_queries",
    "get_branch_bound_kernel",
    "get_sorted_scan_kernel",
    "branch_bound_search",
    "sorted_scan_search",
]

DISABLE_ENV_VAR = "MAXSUM_DCOP_DISABLE_NUMBA"


def numba_enabled() -> bool:
    """True when compiled kernels are active by default."""
    return HAS_NUMBA and not os.environ.get(DISABLE_ENV_VAR)


def pack_queries(shape, queries, target_pos: int) -> np.ndarray:
    """Pad per-position query vectors into one (n, max_domain) array.

    The target row and any padding cells are left at zero; kernels never
    read them.
    """
    n = len(shape)
    dmax = int(max(shape))
    out = np.zeros((n, dmax), dtype=np.float64)
    for i in range(n):
        if i == target_pos:
            continue
        q = np.asarray(queries[i], dtype=np.float64)
        if q.ndim != 1 or q.shape[0] != shape[i]:
            raise ValueError(
                f"query for position {i} has shape {q.shape}, "
                f"expected ({shape[i]},)"
            )
        out[i, : shape[i]] = q
    return out


def _branch_bound_impl(
    shape, t, queries, msg_est, unin_cat, unin_off, info_cat, info_off, out, stats
):
    """Depth-first max of table + query sums, one pass per target value.

    Search visits non-target scope positions in ascending order, values in
    ascending order.  A node is expanded only when its bound strictly
    exceeds the best complete utility found so far for the current target
    value; ties are discarded.  ``stats`` accumulates
    (leaves, expansions, prunes, total_leaves).
    """
    n = shape.shape[0]
    dt = shape[t]
    m = n - 1
    srch = np.empty(m, np.int64)
    k = 0
    for i in range(n):
        if i != t:
            srch[k] = i
            k += 1
    cursor = np.zeros(m, np.int64)
    # index s holds the state after assigning depth s-1; slot 0 is the root
    pi_stack = np.zeros(m + 1, np.int64)
    mu_stack = np.zeros(m + 1, np.float64)
    total = 1
    for i in range(n):
        total *= shape[i]
    leaves = 0
    expansions = 0
    prunes = 0
    for vt in range(dt):
        lb = -np.inf
        depth = 0
        cursor[0] = 0
        while depth >= 0:
            v = cursor[depth]
            if v >= shape[srch[depth]]:
                depth -= 1
                continue
            cursor[depth] += 1
            i = srch[depth]
            base = pi_stack[depth]
            if i - 1 == t:  # the prefix index absorbs the target slot here
                base = base * dt + vt
            pi = base * shape[i] + v
            mu = mu_stack[depth] + queries[i, v]
            if i < t:
                fun = info_cat[info_off[i] + pi * dt + vt]
            else:
                fun = unin_cat[unin_off[i] + pi]
            ub = mu + msg_est[i] + fun
            expansions += 1
            if ub > lb:
                if depth == m - 1:
                    # prefix maxima are exact here, so ub is the leaf total
                    leaves += 1
                    lb = ub
                else:
                    pi_stack[depth + 1] = pi
                    mu_stack[depth + 1] = mu
                    depth += 1
                    cursor[depth] = 0
            else:
                prunes += 1
        out[vt] = lb
    stats[0] += leaves
    stats[1] += expansions
    stats[2] += prunes
    stats[3] += total


def _sorted_scan_impl(shape, t, queries, svals, scomp, out, stats):
    """Scan a prefix of each descending-sorted slice for the true max.

    For each target value: the cut is p - (m - b) where p is the slice
    maximum, m the sum of query maxima, and b the query sum at p's
    first-listed completion.  Entries strictly above the cut are always
    scanned; when the cut lands exactly on a stored value the scan stops
    before it (but always covers the leading ties at p), otherwise the
    full run of the largest value at or below the cut is included.
    """
    n = shape.shape[0]
    dt = shape[t]
    L = svals.shape[1]
    m = n - 1
    srch = np.empty(m, np.int64)
    k = 0
    for i in range(n):
        if i != t:
            srch[k] = i
            k += 1
    msum = 0.0
    for k in range(m):
        i = srch[k]
        mx = queries[i, 0]
        for v in range(1, shape[i]):
            if queries[i, v] > mx:
                mx = queries[i, v]
        msum += mx
    leaves = 0
    prunes = 0
    for vt in range(dt):
        p = svals[vt, 0]
        c = scomp[vt, 0]
        b = 0.0
        for k in range(m - 1, -1, -1):
            i = srch[k]
            d = shape[i]
            b += queries[i, c % d]
            c //= d
        theta = p - (msum - b)
        # first index at or below the cut in the descending row
        lo = 0
        hi = L
        while lo < hi:
            mid = (lo + hi) // 2
            if svals[vt, mid] <= theta:
                hi = mid
            else:
                lo = mid + 1
        if lo == L:
            k_scan = L
        elif svals[vt, lo] == theta:
            run = 1
            while run < L and svals[vt, run] == p:
                run += 1
            k_scan = lo if lo > run else run
        else:
            q = svals[vt, lo]
            rq = lo + 1
            while rq < L and svals[vt, rq] == q:
                rq += 1
            k_scan = rq
        best = -np.inf
        for kk in range(k_scan):
            u = svals[vt, kk]
            c = scomp[vt, kk]
            for k in range(m - 1, -1, -1):
                i = srch[k]
                d = shape[i]
                u += queries[i, c % d]
                c //= d
            if u > best:
                best = u
        out[vt] = best
        leaves += k_scan
        prunes += L - k_scan
    stats[0] += leaves
    stats[2] += prunes
    stats[3] += dt * L


if HAS_NUMBA:
    _branch_bound_jit = njit(cache=True)(_branch_bound_impl)
    _sorted_scan_jit = njit(cache=True)(_sorted_scan_impl)
else:  # pragma: no cover - exercised only without numba installed
    _branch_bound_jit = _branch_bound_impl
    _sorted_scan_jit = _sorted_scan_impl


def _resolve(use_numba: bool | None) -> bool:
    if use_numba is None:
        return numba_enabled()
    return bool(use_numba) and HAS_NUMBA


def get_branch_bound_kernel(use_numba: bool | None = None):
    return _branch_bound_jit if _resolve(use_numba) else _branch_bound_impl


def get_sorted_scan_kernel(use_numba: bool | None = None):
    return _sorted_scan_jit if _resolve(use_numba) else _sorted_scan_impl


def branch_bound_search(
    shape,
    t,
    queries,
    msg_est,
    unin_cat,
    unin_off,
    info_cat,
    info_off,
    out,
    stats,
    use_numba: bool | None = None,
) -> None:
    kern = get_branch_bound_kernel(use_numba)
    kern(shape, t, queries, msg_est, unin_cat, unin_off, info_cat, info_off, out, stats)


def sorted_scan_search(
    shape, t, queries, svals, scomp, out, stats, use_numba: bool | None = None
) -> None:
    kern = get_sorted_scan_kernel(use_numba)
    kern(shape, t, queries, svals, scomp, out, stats)
