"""Shared fixtures and independent oracles.

The oracles here are deliberately dumb: explicit Python loops over every
assignment, no shared code with the package's search paths.  Fast-path
results are always judged against these, never against each other.
"""

from __future__ import annotations

import numpy as np
import pytest

from maxsum_dcop import FunctionDecl, Problem, UtilityTable, VariableDecl


# ---------------------------------------------------------------------------
# Independent oracles
# ---------------------------------------------------------------------------

def oracle_response(table, target_pos, queries):
    """Exhaustive response maximization by full enumeration."""
    table = np.asarray(table, dtype=np.float64)
    n = table.ndim
    out = np.full(table.shape[target_pos], -np.inf)
    for idx in np.ndindex(*table.shape):
        total = float(table[idx])
        for i in range(n):
            if i != target_pos:
                total += float(queries[i][idx[i]])
        vt = idx[target_pos]
        if total > out[vt]:
            out[vt] = total
    return out


def oracle_suffix_max(table, prefix_end):
    """max over positions prefix_end+1..n-1, brute force per prefix."""
    table = np.asarray(table, dtype=np.float64)
    n = table.ndim
    pre_shape = table.shape[: prefix_end + 1]
    out = np.full(pre_shape, -np.inf)
    for idx in np.ndindex(*table.shape):
        pre = idx[: prefix_end + 1]
        if table[idx] > out[pre]:
            out[pre] = table[idx]
    return out


def oracle_informed_max(table, prefix_end, pinned_pos, pinned_value):
    """max over suffix completions with one later position pinned."""
    table = np.asarray(table, dtype=np.float64)
    pre_shape = table.shape[: prefix_end + 1]
    out = np.full(pre_shape, -np.inf)
    for idx in np.ndindex(*table.shape):
        if idx[pinned_pos] != pinned_value:
            continue
        pre = idx[: prefix_end + 1]
        if table[idx] > out[pre]:
            out[pre] = table[idx]
    return out


def oracle_sorted_slice(table, target_pos, target_value):
    """(utility, completion-index) pairs, descending, ties by completion."""
    table = np.asarray(table, dtype=np.float64)
    n = table.ndim
    entries = []
    comp = 0
    free = [i for i in range(n) if i != target_pos]
    for idx in np.ndindex(*(table.shape[i] for i in free)):
        full = [0] * n
        for k, i in enumerate(free):
            full[i] = idx[k]
        full[target_pos] = target_value
        entries.append((float(table[tuple(full)]), comp))
        comp += 1
    entries.sort(key=lambda e: (-e[0], e[1]))
    return entries


def oracle_msg_est(n, target_pos, queries):
    out = []
    for i in range(n):
        total = 0.0
        for j in range(i + 1, n):
            if j != target_pos:
                total += float(np.max(queries[j]))
        out.append(total)
    return np.array(out)


# ---------------------------------------------------------------------------
# Random case helpers
# ---------------------------------------------------------------------------

def random_case(rng, max_arity=4, max_domain=3, integer=True):
    """One (table, target_pos, queries) triple with random shape."""
    n = int(rng.integers(1, max_arity + 1))
    shape = tuple(int(rng.integers(1, max_domain + 1)) for _ in range(n))
    target_pos = int(rng.integers(0, n))
    table, queries = random_table_and_queries(rng, shape, target_pos, integer)
    return table, target_pos, queries


def random_table_and_queries(rng, shape, target_pos, integer=True):
    if integer:
        table = rng.integers(-50, 100, size=shape).astype(np.float64)
        queries = [
            None
            if i == target_pos
            else rng.integers(-20, 30, size=shape[i]).astype(np.float64)
            for i in range(len(shape))
        ]
    else:
        table = rng.uniform(-50.0, 100.0, size=shape)
        queries = [
            None if i == target_pos else rng.uniform(-20.0, 30.0, size=shape[i])
            for i in range(len(shape))
        ]
    return table, queries


def make_problem(functions_spec, domain_size):
    """Problem from [(scope, flat_values), ...] with one shared domain size."""
    max_vid = max(v for scope, _ in functions_spec for v in scope)
    variables = tuple(
        VariableDecl(id=i, domain_size=domain_size, owner_agent=f"a{i}")
        for i in range(max_vid + 1)
    )
    functions = tuple(
        FunctionDecl(
            id=k,
            scope=tuple(scope),
            table=UtilityTable(
                tuple(domain_size for _ in scope), np.asarray(vals, dtype=np.float64)
            ),
        )
        for k, (scope, vals) in enumerate(functions_spec)
    )
    return Problem(
        agents=tuple(v.owner_agent for v in variables),
        variables=variables,
        functions=functions,
    )


# ---------------------------------------------------------------------------
# The frozen reference case: 4-ary table, d=2, target position 3.
# Hand-checked anchors: naive response (62, 52); branch-and-bound for target
# value 0 evaluates exactly the leaves 38 and 62 and prunes bounds 32 and 54;
# message estimates (27, 10, 0); slice for target value 1 sorts to
# [13,9,8,7,5,5,4,1] with gap 13 covering all 8 entries.
# ---------------------------------------------------------------------------

REF_SHAPE = (2, 2, 2, 2)
REF_TABLE = np.array(
    [4, 13, 26, 9, 2, 8, 1, 7, 5, 5, 3, 5, 7, 4, 2, 1], dtype=np.float64
)
REF_TARGET = 3
REF_QUERIES = [
    np.array([9.0, 20.0]),
    np.array([17.0, 11.0]),
    np.array([8.0, 10.0]),
    None,
]


@pytest.fixture
def ref_function():
    return FunctionDecl(
        id=0, scope=(0, 1, 2, 3), table=UtilityTable(REF_SHAPE, REF_TABLE.copy())
    )


@pytest.fixture
def ref_queries():
    return [None if q is None else q.copy() for q in REF_QUERIES]
