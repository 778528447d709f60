"""Command-line entry points: solve, sweep, validate, compare.

``solve`` runs one method on a scenario and prints its metrics row, optionally
writing it as CSV; ``sweep`` runs the demand x latency cartesian product of a
sweep spec and writes the metrics CSV plus per-demand plot-data files;
``validate`` checks a scenario file (schema, grid, rate model, formulation
build) without solving; ``compare`` runs every method on one scenario and
prints a side-by-side table.

Scenario and spec arguments accept either a filesystem path or the name of a
packaged preset (``desk_scenario``, ``desk_sweep``, ``tight_scenario``,
``tiny_scenario``).

Exit codes: 0 success, 1 usage or configuration error, 2 allocation
verification failure.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from importlib import resources
from pathlib import Path
from typing import Callable

from .demand_rate import ServiceClass, build_rate_matrix
from .grid import build_grid
from .harness import (
    METHODS,
    MethodOutcome,
    ScenarioError,
    VerificationError,
    emit_csv,
    emit_plot_data,
    load_scenario,
    load_sweep_spec,
    run_scenario,
    run_sweep,
    scenario_rows,
)
from .ilp import DEFAULT_NODE_LIMIT, build_p0, build_p1

SWEEP_CSV_NAME = "sweep.csv"


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors; the contract reserves 2 for
    # verification failures and uses 1 for anything usage/config-shaped.
    def error(self, message: str):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _preset_names() -> list[str]:
    root = resources.files("flexsched").joinpath("presets")
    return sorted(entry.name[:-5] for entry in root.iterdir() if entry.name.endswith(".json"))


def _load_config(value: str, loader: Callable, kind: str):
    """Loads from a filesystem path, falling back to packaged preset names."""
    path = Path(value)
    if path.exists():
        return loader(path)
    name = value if value.endswith(".json") else f"{value}.json"
    ref = resources.files("flexsched").joinpath("presets").joinpath(name)
    if ref.is_file():
        with resources.as_file(ref) as concrete:
            return loader(concrete)
    raise ScenarioError(
        f"{kind} {value!r} is neither a file nor a packaged preset"
        f" (available presets: {', '.join(_preset_names())})"
    )


def _print_table(outcomes: list[MethodOutcome]) -> None:
    header = (
        "method",
        "status",
        "embb_sum_kbps",
        "urllc_coverage",
        "fully_covered",
        "wall_time_s",
        "nodes",
    )
    table = [header]
    for outcome in outcomes:
        m = outcome.metrics
        table.append(
            (
                m.method,
                m.status,
                "-" if m.embb_sum_kbps is None else f"{m.embb_sum_kbps:.3f}",
                "-" if m.urllc_coverage_ratio is None else f"{m.urllc_coverage_ratio:.4f}",
                "-" if m.fully_covered_urllc_count is None else str(m.fully_covered_urllc_count),
                f"{m.solve_wall_time_s:.3f}",
                "-" if m.nodes is None else str(m.nodes),
            )
        )
    widths = [max(len(row[i]) for row in table) for i in range(len(header))]
    for row in table:
        print("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip())


def cmd_solve(args: argparse.Namespace) -> int:
    scenario = _load_config(args.scenario, load_scenario, "scenario")
    scenario = replace(scenario, methods=(args.method,))
    outcomes = run_scenario(scenario, node_limit=args.node_limit)
    _print_table(outcomes)
    if args.out is not None:
        emit_csv(scenario_rows(scenario, outcomes), args.out)
        print(f"wrote {args.out}")
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    spec = _load_config(args.spec, load_sweep_spec, "sweep spec")
    rows = run_sweep(spec)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / SWEEP_CSV_NAME
    emit_csv(rows, csv_path, blank_timing=True)
    for path in [csv_path] + emit_plot_data(rows, out_dir):
        print(f"wrote {path}")
    return 0


def cmd_validate(args: argparse.Namespace) -> int:
    scenario = _load_config(args.scenario, load_scenario, "scenario")
    grid = build_grid(scenario.grid_config)
    rates = build_rate_matrix(grid, scenario.users, scenario.rate_params)
    p0 = build_p0(grid, scenario.users, rates)
    p1 = build_p1(grid, scenario.users, rates)
    urllc = sum(1 for u in scenario.users if u.service_class is ServiceClass.URLLC)
    print(
        f"ok: grid {grid.config.freq_units}x{grid.config.time_units}"
        f" mu_max={grid.config.mu_max}, {len(grid.blocks)} blocks,"
        f" {len(scenario.users)} users ({urllc} urllc),"
        f" {len(p0.variables)} p0 vars, {len(p1.variables)} p1 vars"
    )
    return 0


def cmd_compare(args: argparse.Namespace) -> int:
    scenario = _load_config(args.scenario, load_scenario, "scenario")
    scenario = replace(scenario, methods=METHODS)
    _print_table(run_scenario(scenario))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="flexsched", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", help="run one method on a scenario")
    solve.add_argument("--scenario", required=True, help="scenario file or preset name")
    solve.add_argument("--method", required=True, choices=METHODS)
    solve.add_argument("--out", default=None, help="write the metrics row as CSV")
    solve.add_argument(
        "--node-limit",
        type=int,
        default=DEFAULT_NODE_LIMIT,
        help="search node budget for exact methods (default %(default)s)",
    )
    solve.set_defaults(func=cmd_solve)

    sweep = sub.add_parser("sweep", help="run a demand x latency sweep")
    sweep.add_argument("--spec", required=True, help="sweep spec file or preset name")
    sweep.add_argument("--out-dir", required=True, help="directory for CSV and plot data")
    sweep.set_defaults(func=cmd_sweep)

    validate = sub.add_parser("validate", help="check a scenario without solving")
    validate.add_argument("--scenario", required=True, help="scenario file or preset name")
    validate.set_defaults(func=cmd_validate)

    compare = sub.add_parser("compare", help="run every method and print a table")
    compare.add_argument("--scenario", required=True, help="scenario file or preset name")
    compare.set_defaults(func=cmd_compare)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except VerificationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
