"""Kernel dispatch, query packing, and raw stats accumulation."""

import numpy as np
import pytest

from maxsum_dcop.kernels import (
    DISABLE_ENV_VAR,
    HAS_NUMBA,
    _branch_bound_impl,
    _branch_bound_jit,
    _sorted_scan_impl,
    _sorted_scan_jit,
    branch_bound_search,
    get_branch_bound_kernel,
    get_sorted_scan_kernel,
    numba_enabled,
    pack_queries,
    sorted_scan_search,
)


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------

def test_env_var_disables_compiled_path(monkeypatch):
    monkeypatch.setenv(DISABLE_ENV_VAR, "1")
    assert not numba_enabled()
    assert get_branch_bound_kernel() is _branch_bound_impl
    assert get_sorted_scan_kernel() is _sorted_scan_impl


def test_any_non_empty_value_disables(monkeypatch):
    monkeypatch.setenv(DISABLE_ENV_VAR, "0")
    assert not numba_enabled()


def test_default_uses_compiled_path_when_available(monkeypatch):
    monkeypatch.delenv(DISABLE_ENV_VAR, raising=False)
    assert numba_enabled() == HAS_NUMBA
    if HAS_NUMBA:
        assert get_branch_bound_kernel() is _branch_bound_jit
        assert get_sorted_scan_kernel() is _sorted_scan_jit


def test_explicit_argument_overrides_environment(monkeypatch):
    monkeypatch.setenv(DISABLE_ENV_VAR, "1")
    assert get_sorted_scan_kernel(use_numba=False) is _sorted_scan_impl
    if HAS_NUMBA:
        assert get_sorted_scan_kernel(use_numba=True) is _sorted_scan_jit
        assert get_branch_bound_kernel(use_numba=True) is _branch_bound_jit


# ---------------------------------------------------------------------------
# pack_queries
# ---------------------------------------------------------------------------

def test_pack_pads_and_zeroes_target_row():
    shape = (2, 3)
    queries = [np.array([5.0, -1.0]), None]
    packed = pack_queries(shape, queries, 1)
    assert packed.shape == (2, 3)
    np.testing.assert_array_equal(packed[0], [5.0, -1.0, 0.0])
    np.testing.assert_array_equal(packed[1], [0.0, 0.0, 0.0])


def test_pack_rejects_wrong_length():
    with pytest.raises(ValueError):
        pack_queries((2, 3), [np.zeros(3), None], 1)
    with pytest.raises(ValueError):
        pack_queries((2, 3), [np.zeros((2, 1)), None], 1)


# ---------------------------------------------------------------------------
# raw kernel calls (inputs packed by hand)
# ---------------------------------------------------------------------------

def _scan_inputs():
    # table [[3,1],[2,4]], target position 0, zero queries
    shape = np.array([2, 2], dtype=np.int64)
    queries = pack_queries((2, 2), [None, np.zeros(2)], 0)
    svals = np.array([[3.0, 1.0], [4.0, 2.0]])
    scomp = np.array([[0, 1], [1, 0]], dtype=np.int64)
    return shape, queries, svals, scomp


@pytest.mark.parametrize("use_numba", [False, None])
def test_sorted_scan_kernel_and_stats_accumulate(use_numba):
    shape, queries, svals, scomp = _scan_inputs()
    out = np.zeros(2)
    stats = np.zeros(4, dtype=np.int64)
    for _ in range(2):
        sorted_scan_search(
            shape, 0, queries, svals, scomp, out, stats, use_numba=use_numba
        )
    np.testing.assert_array_equal(out, [3.0, 4.0])
    # zero queries: the cut equals each slice max, so only the leading
    # run of the maximum is scanned -- one entry per target value here
    np.testing.assert_array_equal(stats, [2 * 2, 0, 2 * 2, 2 * 4])


@pytest.mark.parametrize("use_numba", [False, None])
def test_branch_bound_kernel_and_stats_accumulate(use_numba):
    # table [[1,2],[3,4]], target position 1: a single informed lookup
    shape = np.array([2, 2], dtype=np.int64)
    queries = pack_queries((2, 2), [np.zeros(2), None], 1)
    msg_est = np.zeros(2)
    unin_cat = np.zeros(0)
    unin_off = np.zeros(2, dtype=np.int64)
    info_cat = np.array([1.0, 2.0, 3.0, 4.0])
    info_off = np.zeros(2, dtype=np.int64)
    out = np.zeros(2)
    stats = np.zeros(4, dtype=np.int64)
    for _ in range(2):
        branch_bound_search(
            shape, 1, queries, msg_est, unin_cat, unin_off,
            info_cat, info_off, out, stats, use_numba=use_numba,
        )
    np.testing.assert_array_equal(out, [3.0, 4.0])
    # ascending values always improve here: every visit is a kept leaf
    np.testing.assert_array_equal(stats, [2 * 4, 2 * 4, 0, 2 * 4])
