"""Max-sum message passing for n-ary DCOPs with pruned response maximizers.

Public surface:

* :mod:`.factor_graph` — problem model, validation, JSON file format
* :mod:`.engine` — synchronous message-passing loop and the exhaustive
  oracle maximizer
* :mod:`.fdsp` — branch-and-bound maximizer over decomposed prefix maxima
* :mod:`.gdp` — sorted-slice maximizer with a one-shot scan range
* :mod:`.generator` — seeded random instance generation
* :mod:`.bench` — sweep harness and CSV schema
* :mod:`.cli` — ``maxsum-dcop`` command-line tool
"""

from .factor_graph import (
    UNASSIGNED,
    FunctionDecl,
    InvalidProblemError,
    Problem,
    UtilityTable,
    VariableDecl,
    global_utility,
    load_problem,
    problem_from_dict,
    problem_to_dict,
    save_problem,
    table_lookup,
    validate_problem,
)
from .stats import SearchStats
from .fdsp import (
    FdspBackend,
    FunctionEstimates,
    MsgEstCache,
    build_message_estimates,
    decompose,
    fdsp_maximize,
    upper_bound,
)
from .gdp import GdpBackend, GdpRange, SortedSlices, gdp_maximize, gdp_preprocess, gdp_range
from .engine import (
    BACKEND_TAGS,
    MessageStore,
    NaiveBackend,
    RunResult,
    compute_query,
    compute_response,
    decide_assignment,
    make_backend,
    naive_maximize,
    run,
)
from .generator import ConfigError, GenConfig, generate, var_tightness
from .bench import BenchRow, CSV_COLUMNS, SweepConfig, load_sweep_config, sweep, write_csv
from .kernels import HAS_NUMBA, numba_enabled

__version__ = "0.1.0"

__all__ = [
    "UNASSIGNED",
    "VariableDecl",
    "UtilityTable",
    "FunctionDecl",
    "Problem",
    "InvalidProblemError",
    "table_lookup",
    "global_utility",
    "validate_problem",
    "load_problem",
    "save_problem",
    "problem_to_dict",
    "problem_from_dict",
    "SearchStats",
    "FunctionEstimates",
    "decompose",
    "build_message_estimates",
    "upper_bound",
    "fdsp_maximize",
    "MsgEstCache",
    "FdspBackend",
    "SortedSlices",
    "GdpRange",
    "gdp_preprocess",
    "gdp_range",
    "gdp_maximize",
    "GdpBackend",
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
    "ConfigError",
    "GenConfig",
    "generate",
    "var_tightness",
    "BenchRow",
    "CSV_COLUMNS",
    "SweepConfig",
    "load_sweep_config",
    "sweep",
    "write_csv",
    "HAS_NUMBA",
    "numba_enabled",
    "__version__",
]
