"""Resource allocation on flexible-numerology radio grids.

Blocks of differing numerologies tile a frequency x time mini-slot grid;
URLLC users carry per-frame demands and deadlines, eMBB users soak up the
rest.  The package models the grid and achievable rates, solves the
demand-constrained (p0) and grant-capped (p1) assignment problems exactly by
branch and bound, offers a two-step scoring heuristic, and sweeps demand and
latency over scenarios defined in JSON.
"""

from .demand_rate import (
    RATE_EPS,
    TIME_EPS,
    RateMatrix,
    RateModelParams,
    ServiceClass,
    User,
    achievable_rate,
    build_rate_matrix,
    latency_mask,
)
from .grid import Grid, GridConfig, MiniSlot, Numerology, ResourceBlock, build_grid
from .harness import (
    Metrics,
    MethodOutcome,
    Scenario,
    ScenarioError,
    SweepRow,
    SweepSpec,
    VerificationError,
    emit_csv,
    emit_plot_data,
    load_scenario,
    load_sweep_spec,
    parse_csv,
    parse_scenario,
    parse_sweep_spec,
    run_scenario,
    run_sweep,
)
from .heuristic import HeuristicResult, UrllcOutcome, run_heuristic, score_candidates
from .ilp import (
    DEFAULT_NODE_LIMIT,
    Allocation,
    Formulation,
    IlpInstance,
    SolveResult,
    SolveStatus,
    Violation,
    build_p0,
    build_p1,
    format_lp,
    solve_exact,
    verify_allocation,
)

__version__ = "0.1.0"

__all__ = [
    "Allocation",
    "DEFAULT_NODE_LIMIT",
    "Formulation",
    "Grid",
    "GridConfig",
    "HeuristicResult",
    "IlpInstance",
    "Metrics",
    "MethodOutcome",
    "MiniSlot",
    "Numerology",
    "RATE_EPS",
    "RateMatrix",
    "RateModelParams",
    "ResourceBlock",
    "Scenario",
    "ScenarioError",
    "ServiceClass",
    "SolveResult",
    "SolveStatus",
    "SweepRow",
    "SweepSpec",
    "TIME_EPS",
    "UrllcOutcome",
    "User",
    "VerificationError",
    "Violation",
    "achievable_rate",
    "build_grid",
    "build_p0",
    "build_p1",
    "build_rate_matrix",
    "emit_csv",
    "emit_plot_data",
    "format_lp",
    "latency_mask",
    "load_scenario",
    "load_sweep_spec",
    "parse_csv",
    "parse_scenario",
    "parse_sweep_spec",
    "run_heuristic",
    "run_scenario",
    "run_sweep",
    "score_candidates",
    "solve_exact",
    "verify_allocation",
    "__version__",
]
