"""Scenario files, method runs, latency/demand sweeps, CSV and plot emission.

A scenario is a JSON document with a strict schema (unknown fields and
duplicate keys are rejected at every level):

    {
      "grid": {
        "freq_units": 60, "time_units": 8, "mu_max": 2,
        "base_freq_hz": 180000.0,          # optional
        "base_time_s": 0.00025,            # optional
        "precompute_conflicts": false,     # optional
        "numerologies": [{"mu": 0, "cp_overhead": 0.03}, ...]
      },
      "users": [
        {"id": 0, "service_class": "urllc", "spectral_efficiency": 5.6,
         "demand_q_kbps": 64.0, "latency_tau_ms": 2.0, "slack_u_kbps": 136.0},
        {"id": 5, "service_class": "embb", "spectral_efficiency": 1.1}
      ],
      "rate_params": {"ctrl_overhead": 0.08, "frame_duration_ms": 2.0},
      "methods": ["p0", "p1", "heuristic"],   # optional, default all
      "seed": 0                                # optional, reserved
    }

A sweep spec wraps a base scenario with demand/latency value lists and a
slack table assigning the per-URLLC grant slack u_k to each (demand, latency)
cell; every cell of the cartesian product must have an entry.  Each cell
overrides all URLLC users' demand, deadline, and slack uniformly.

CSV rows use the fixed header ``demand_kbps,latency_ms,method,status,
embb_sum_kbps,urllc_coverage,fully_covered,wall_time_s,nodes`` with float
cells at 6 decimal places; Infeasible rows leave throughput cells empty.
Plot data comes out as one gnuplot-style file per demand with a two-column
(latency, eMBB sum) series per method and gaps where a method has no value.
"""

from __future__ import annotations

import csv
import json
import math
import time
from dataclasses import dataclass, replace
from pathlib import Path

from .demand_rate import RateModelParams, ServiceClass, User, build_rate_matrix
from .grid import GridConfig, Numerology, build_grid
from .heuristic import run_heuristic
from .ilp import (
    Allocation,
    DEFAULT_NODE_LIMIT,
    build_p0,
    build_p1,
    solve_exact,
    verify_allocation,
)

METHODS = ("heuristic", "p0", "p1")
STATUS_BEST_EFFORT = "BestEffort"

DEFAULT_LATENCIES_MS = (0.25, 0.5, 1.0, 1.5, 2.0)
DEFAULT_DEMANDS_KBPS = (16.0, 32.0, 64.0, 128.0, 256.0, 512.0, 1024.0)

# Per-(demand, latency) grant slack u_k in kbps.  The 16 and 32 kbps rows
# reuse the 64 kbps values, whose published results they track closely.
_SLACK_BY_DEMAND = {
    16.0: {0.25: 136.0, 0.5: 116.0, 1.0: 136.0, 1.5: 96.0, 2.0: 96.0},
    32.0: {0.25: 136.0, 0.5: 116.0, 1.0: 136.0, 1.5: 96.0, 2.0: 96.0},
    64.0: {0.25: 136.0, 0.5: 116.0, 1.0: 136.0, 1.5: 96.0, 2.0: 96.0},
    128.0: {0.25: 136.0, 0.5: 116.0, 1.0: 136.0, 1.5: 96.0, 2.0: 96.0},
    256.0: {0.25: 244.0, 0.5: 244.0, 1.0: 244.0, 1.5: 124.0, 2.0: 124.0},
    512.0: {0.25: 158.0, 0.5: 158.0, 1.0: 158.0, 1.5: 158.0, 2.0: 138.0},
    1024.0: {0.25: 176.0, 0.5: 176.0, 1.0: 176.0, 1.5: 176.0, 2.0: 176.0},
}
DEFAULT_SLACK_TABLE = tuple(
    (demand, latency, u)
    for demand in DEFAULT_DEMANDS_KBPS
    for latency, u in sorted(_SLACK_BY_DEMAND[demand].items())
)

CSV_HEADER = (
    "demand_kbps",
    "latency_ms",
    "method",
    "status",
    "embb_sum_kbps",
    "urllc_coverage",
    "fully_covered",
    "wall_time_s",
    "nodes",
)


class ScenarioError(ValueError):
    """Raised for malformed or inconsistent scenario/sweep configuration."""


class VerificationError(RuntimeError):
    """Raised when a produced allocation fails independent verification."""


@dataclass(frozen=True)
class Scenario:
    grid_config: GridConfig
    users: tuple[User, ...]
    rate_params: RateModelParams
    methods: tuple[str, ...]
    seed: int


@dataclass(frozen=True)
class Metrics:
    """One method's result row; None fields render as empty CSV cells."""

    method: str
    status: str
    embb_sum_kbps: float | None
    urllc_coverage_ratio: float | None
    fully_covered_urllc_count: int | None
    solve_wall_time_s: float
    nodes: int | None


@dataclass(frozen=True)
class MethodOutcome:
    metrics: Metrics
    allocation: Allocation | None


@dataclass(frozen=True)
class SweepSpec:
    base_scenario: Scenario
    latency_values_ms: tuple[float, ...]
    demand_values_kbps: tuple[float, ...]
    slack_table: dict[tuple[float, float], float]


@dataclass(frozen=True)
class SweepRow:
    demand_kbps: float | None
    latency_ms: float | None
    metrics: Metrics


# -- JSON parsing -----------------------------------------------------------


def _reject_duplicate_keys(pairs):
    out = {}
    for key, value in pairs:
        if key in out:
            raise ScenarioError(f"duplicate key {key!r} in JSON object")
        out[key] = value
    return out


def _load_json(path: str | Path) -> dict:
    with open(path, encoding="utf-8") as handle:
        data = json.load(handle, object_pairs_hook=_reject_duplicate_keys)
    if not isinstance(data, dict):
        raise ScenarioError(f"{path}: top-level JSON value must be an object")
    return data


def _check_fields(obj: dict, required: set[str], optional: set[str], where: str) -> None:
    if not isinstance(obj, dict):
        raise ScenarioError(f"{where} must be a JSON object")
    unknown = set(obj) - required - optional
    if unknown:
        raise ScenarioError(f"unknown field(s) {sorted(unknown)} in {where}")
    missing = required - set(obj)
    if missing:
        raise ScenarioError(f"missing required field(s) {sorted(missing)} in {where}")


def _number(obj: dict, key: str, where: str) -> float:
    value = obj[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError(f"{where}.{key} must be a number")
    return float(value)


def _integer(obj: dict, key: str, where: str) -> int:
    value = obj[key]
    if isinstance(value, bool) or not isinstance(value, int):
        raise ScenarioError(f"{where}.{key} must be an integer")
    return value


def parse_grid_config(obj: dict, where: str = "grid") -> GridConfig:
    _check_fields(
        obj,
        required={"freq_units", "time_units", "mu_max", "numerologies"},
        optional={"base_freq_hz", "base_time_s", "precompute_conflicts"},
        where=where,
    )
    mu_max = _integer(obj, "mu_max", where)
    numerologies = []
    raw_numerologies = obj["numerologies"]
    if not isinstance(raw_numerologies, list) or not raw_numerologies:
        raise ScenarioError(f"{where}.numerologies must be a nonempty list")
    for i, entry in enumerate(raw_numerologies):
        entry_where = f"{where}.numerologies[{i}]"
        _check_fields(entry, required={"mu"}, optional={"cp_overhead"}, where=entry_where)
        mu = _integer(entry, "mu", entry_where)
        cp = _number(entry, "cp_overhead", entry_where) if "cp_overhead" in entry else 0.0
        try:
            numerologies.append(Numerology.for_mu(mu, mu_max, cp_overhead=cp))
        except ValueError as exc:
            raise ScenarioError(f"{entry_where}: {exc}") from exc
    kwargs = {}
    if "base_freq_hz" in obj:
        kwargs["base_freq_hz"] = _number(obj, "base_freq_hz", where)
    if "base_time_s" in obj:
        kwargs["base_time_s"] = _number(obj, "base_time_s", where)
    if "precompute_conflicts" in obj:
        flag = obj["precompute_conflicts"]
        if not isinstance(flag, bool):
            raise ScenarioError(f"{where}.precompute_conflicts must be a boolean")
        kwargs["precompute_conflicts"] = flag
    try:
        return GridConfig(
            freq_units=_integer(obj, "freq_units", where),
            time_units=_integer(obj, "time_units", where),
            mu_max=mu_max,
            numerologies=tuple(numerologies),
            **kwargs,
        )
    except ValueError as exc:
        raise ScenarioError(f"{where}: {exc}") from exc


def parse_user(obj: dict, where: str) -> User:
    _check_fields(
        obj,
        required={"id", "service_class", "spectral_efficiency"},
        optional={"demand_q_kbps", "latency_tau_ms", "slack_u_kbps"},
        where=where,
    )
    raw_class = obj["service_class"]
    try:
        service_class = ServiceClass(raw_class)
    except ValueError as exc:
        raise ScenarioError(
            f"{where}.service_class must be 'embb' or 'urllc', got {raw_class!r}"
        ) from exc
    kwargs = {}
    if "demand_q_kbps" in obj:
        kwargs["demand_q_kbps"] = _number(obj, "demand_q_kbps", where)
    if "latency_tau_ms" in obj:
        kwargs["latency_tau_ms"] = _number(obj, "latency_tau_ms", where)
    if "slack_u_kbps" in obj:
        kwargs["slack_u_kbps"] = _number(obj, "slack_u_kbps", where)
    try:
        return User(
            id=_integer(obj, "id", where),
            service_class=service_class,
            spectral_efficiency=_number(obj, "spectral_efficiency", where),
            **kwargs,
        )
    except ValueError as exc:
        raise ScenarioError(f"{where}: {exc}") from exc


def parse_scenario(data: dict, where: str = "scenario") -> Scenario:
    _check_fields(
        data,
        required={"grid", "users"},
        optional={"rate_params", "methods", "seed"},
        where=where,
    )
    grid_config = parse_grid_config(data["grid"], f"{where}.grid")
    raw_users = data["users"]
    if not isinstance(raw_users, list) or not raw_users:
        raise ScenarioError(f"{where}.users must be a nonempty list")
    users = tuple(
        parse_user(entry, f"{where}.users[{i}]") for i, entry in enumerate(raw_users)
    )
    if [u.id for u in users] != list(range(len(users))):
        raise ScenarioError(
            f"{where}.users must carry dense ids 0..{len(users) - 1} in order"
        )
    rate_params = RateModelParams()
    if "rate_params" in data:
        rp = data["rate_params"]
        rp_where = f"{where}.rate_params"
        _check_fields(
            rp, required=set(), optional={"ctrl_overhead", "frame_duration_ms"}, where=rp_where
        )
        kwargs = {}
        if "ctrl_overhead" in rp:
            kwargs["ctrl_overhead"] = _number(rp, "ctrl_overhead", rp_where)
        if "frame_duration_ms" in rp:
            kwargs["frame_duration_ms"] = _number(rp, "frame_duration_ms", rp_where)
        try:
            rate_params = RateModelParams(**kwargs)
        except ValueError as exc:
            raise ScenarioError(f"{rp_where}: {exc}") from exc
    methods = METHODS
    if "methods" in data:
        raw_methods = data["methods"]
        if not isinstance(raw_methods, list) or not raw_methods:
            raise ScenarioError(f"{where}.methods must be a nonempty list")
        for m in raw_methods:
            if m not in METHODS:
                raise ScenarioError(
                    f"{where}.methods entries must be among {sorted(METHODS)}, got {m!r}"
                )
        if len(set(raw_methods)) != len(raw_methods):
            raise ScenarioError(f"{where}.methods must not repeat entries")
        methods = tuple(sorted(raw_methods))
    seed = 0
    if "seed" in data:
        seed = _integer(data, "seed", where)
        if seed < 0:
            raise ScenarioError(f"{where}.seed must be non-negative")
    return Scenario(
        grid_config=grid_config,
        users=users,
        rate_params=rate_params,
        methods=methods,
        seed=seed,
    )


def load_scenario(path: str | Path) -> Scenario:
    return parse_scenario(_load_json(path), where=str(path))


def parse_sweep_spec(data: dict, where: str = "sweep") -> SweepSpec:
    _check_fields(
        data,
        required={"base_scenario"},
        optional={"latency_values_ms", "demand_values_kbps", "slack_table"},
        where=where,
    )
    base = parse_scenario(data["base_scenario"], f"{where}.base_scenario")

    def _value_list(key: str, defaults: tuple[float, ...]) -> tuple[float, ...]:
        if key not in data:
            return defaults
        raw = data[key]
        if not isinstance(raw, list) or not raw:
            raise ScenarioError(f"{where}.{key} must be a nonempty list")
        values = []
        for i, value in enumerate(raw):
            if isinstance(value, bool) or not isinstance(value, (int, float)) or value <= 0:
                raise ScenarioError(f"{where}.{key}[{i}] must be a positive number")
            values.append(float(value))
        if len(set(values)) != len(values):
            raise ScenarioError(f"{where}.{key} must not repeat values")
        return tuple(values)

    latencies = _value_list("latency_values_ms", DEFAULT_LATENCIES_MS)
    demands = _value_list("demand_values_kbps", DEFAULT_DEMANDS_KBPS)
    slack: dict[tuple[float, float], float] = {}
    if "slack_table" in data:
        raw_table = data["slack_table"]
        if not isinstance(raw_table, list) or not raw_table:
            raise ScenarioError(f"{where}.slack_table must be a nonempty list")
        for i, entry in enumerate(raw_table):
            entry_where = f"{where}.slack_table[{i}]"
            _check_fields(
                entry,
                required={"demand_kbps", "latency_ms", "u_kbps"},
                optional=set(),
                where=entry_where,
            )
            key = (
                _number(entry, "demand_kbps", entry_where),
                _number(entry, "latency_ms", entry_where),
            )
            if key in slack:
                raise ScenarioError(f"{entry_where} repeats pair {key}")
            u = _number(entry, "u_kbps", entry_where)
            if u < 0:
                raise ScenarioError(f"{entry_where}.u_kbps must be non-negative")
            slack[key] = u
    else:
        slack = {(d, l): u for d, l, u in DEFAULT_SLACK_TABLE}
    return SweepSpec(
        base_scenario=base,
        latency_values_ms=latencies,
        demand_values_kbps=demands,
        slack_table=slack,
    )


def load_sweep_spec(path: str | Path) -> SweepSpec:
    return parse_sweep_spec(_load_json(path), where=str(path))


# -- running ------------------------------------------------------------------


def _coverage(users: tuple[User, ...], allocation: Allocation) -> tuple[float | None, int]:
    total_demand = 0.0
    covered = 0.0
    fully = 0
    for user in users:
        if user.service_class != ServiceClass.URLLC:
            continue
        served = allocation.per_user_served_kbps[user.id]
        total_demand += user.demand_q_kbps
        covered += min(served, user.demand_q_kbps)
        if served >= user.demand_q_kbps - 1e-9:
            fully += 1
    if total_demand == 0.0:
        return None, fully
    return covered / total_demand, fully


def _embb_sum(users: tuple[User, ...], allocation: Allocation) -> float:
    return sum(
        allocation.per_user_served_kbps[u.id]
        for u in users
        if u.service_class == ServiceClass.EMBB
    )


HEURISTIC_TOLERATED_KINDS = frozenset({"demand_shortfall"})


def run_scenario(
    scenario: Scenario, *, node_limit: int = DEFAULT_NODE_LIMIT
) -> list[MethodOutcome]:
    """Runs each requested method and verifies every returned allocation.

    Methods run in sorted name order.  A verification failure is an internal
    error (VerificationError), never a reported result: exact Optimal (or
    NodeLimit incumbent) allocations must verify cleanly against their own
    formulation, and heuristic allocations must verify against the
    demand-constrained formulation up to URLLC demand shortfalls, which are
    the expected best-effort outcome.
    """
    grid = build_grid(scenario.grid_config)
    rates = build_rate_matrix(grid, scenario.users, scenario.rate_params)
    outcomes = []
    for method in sorted(scenario.methods):
        if method == "heuristic":
            start = time.perf_counter()
            result = run_heuristic(grid, scenario.users, rates)
            wall = time.perf_counter() - start
            reference = build_p0(grid, scenario.users, rates)
            violations = [
                v
                for v in verify_allocation(reference, result.allocation)
                if v.kind not in HEURISTIC_TOLERATED_KINDS
            ]
            if violations:
                raise VerificationError(
                    f"heuristic allocation failed verification: {violations}"
                )
            coverage, fully = _coverage(scenario.users, result.allocation)
            metrics = Metrics(
                method=method,
                status=STATUS_BEST_EFFORT,
                embb_sum_kbps=_embb_sum(scenario.users, result.allocation),
                urllc_coverage_ratio=coverage,
                fully_covered_urllc_count=fully,
                solve_wall_time_s=wall,
                nodes=None,
            )
            outcomes.append(MethodOutcome(metrics=metrics, allocation=result.allocation))
            continue
        builder = build_p0 if method == "p0" else build_p1
        instance = builder(grid, scenario.users, rates)
        result = solve_exact(instance, node_limit=node_limit)
        if result.allocation is not None:
            violations = verify_allocation(instance, result.allocation)
            if violations:
                raise VerificationError(
                    f"{method} allocation failed verification: {violations}"
                )
            coverage, fully = _coverage(scenario.users, result.allocation)
            metrics = Metrics(
                method=method,
                status=result.status.value,
                embb_sum_kbps=_embb_sum(scenario.users, result.allocation),
                urllc_coverage_ratio=coverage,
                fully_covered_urllc_count=fully,
                solve_wall_time_s=result.wall_time_s,
                nodes=result.nodes_explored,
            )
        else:
            metrics = Metrics(
                method=method,
                status=result.status.value,
                embb_sum_kbps=None,
                urllc_coverage_ratio=None,
                fully_covered_urllc_count=None,
                solve_wall_time_s=result.wall_time_s,
                nodes=result.nodes_explored,
            )
        outcomes.append(MethodOutcome(metrics=metrics, allocation=result.allocation))
    return outcomes


def _override_urllc(
    users: tuple[User, ...], demand: float, latency: float, slack: float
) -> tuple[User, ...]:
    out = []
    for user in users:
        if user.service_class == ServiceClass.URLLC:
            try:
                user = replace(
                    user,
                    demand_q_kbps=demand,
                    latency_tau_ms=latency,
                    slack_u_kbps=slack,
                )
            except ValueError as exc:
                raise ScenarioError(
                    f"sweep cell (demand={demand}, latency={latency}) is invalid"
                    f" for user {user.id}: {exc}"
                ) from exc
        out.append(user)
    return tuple(out)


def run_sweep(
    spec: SweepSpec, *, node_limit: int = DEFAULT_NODE_LIMIT
) -> list[SweepRow]:
    """Runs the (demand, latency) cartesian product over the base scenario."""
    rows = []
    for demand in sorted(spec.demand_values_kbps):
        for latency in sorted(spec.latency_values_ms):
            key = (demand, latency)
            if key not in spec.slack_table:
                raise ScenarioError(
                    f"slack table has no u_kbps entry for demand {demand:g} kbps"
                    f" at latency {latency:g} ms"
                )
            users = _override_urllc(
                spec.base_scenario.users, demand, latency, spec.slack_table[key]
            )
            scenario = replace(spec.base_scenario, users=users)
            for outcome in run_scenario(scenario, node_limit=node_limit):
                rows.append(
                    SweepRow(demand_kbps=demand, latency_ms=latency, metrics=outcome.metrics)
                )
    return rows


def scenario_rows(scenario: Scenario, outcomes: list[MethodOutcome]) -> list[SweepRow]:
    """Rows for a single-scenario run; demand/latency cells require uniform
    URLLC parameters and stay empty otherwise."""
    demands = {
        u.demand_q_kbps for u in scenario.users if u.service_class == ServiceClass.URLLC
    }
    latencies = {
        u.latency_tau_ms for u in scenario.users if u.service_class == ServiceClass.URLLC
    }
    demand = demands.pop() if len(demands) == 1 else None
    latency = latencies.pop() if len(latencies) == 1 else None
    if latency is not None and math.isinf(latency):
        latency = None
    return [
        SweepRow(demand_kbps=demand, latency_ms=latency, metrics=o.metrics)
        for o in outcomes
    ]


# -- emission -----------------------------------------------------------------


def _fmt_float(value: float | None) -> str:
    return "" if value is None else f"{value:.6f}"


def _fmt_int(value: int | None) -> str:
    return "" if value is None else str(value)


def _row_sort_key(row: SweepRow):
    return (
        row.demand_kbps is not None,
        row.demand_kbps if row.demand_kbps is not None else 0.0,
        row.latency_ms is not None,
        row.latency_ms if row.latency_ms is not None else 0.0,
        row.metrics.method,
    )


def emit_csv(rows: list[SweepRow], path: str | Path, *, blank_timing: bool = False) -> None:
    """Writes the metrics table; blank_timing empties wall-clock cells so
    repeated runs of the same sweep produce byte-identical files."""
    if not rows:
        raise ValueError("emit_csv needs at least one row")
    path = Path(path)
    try:
        with open(path, "w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(CSV_HEADER)
            for row in sorted(rows, key=_row_sort_key):
                m = row.metrics
                writer.writerow(
                    [
                        _fmt_float(row.demand_kbps),
                        _fmt_float(row.latency_ms),
                        m.method,
                        m.status,
                        _fmt_float(m.embb_sum_kbps),
                        _fmt_float(m.urllc_coverage_ratio),
                        _fmt_int(m.fully_covered_urllc_count),
                        "" if blank_timing else _fmt_float(m.solve_wall_time_s),
                        _fmt_int(m.nodes),
                    ]
                )
    except OSError as exc:
        raise OSError(f"cannot write CSV to {path}: {exc}") from exc


def parse_csv(path: str | Path) -> list[SweepRow]:
    """Reads a file produced by emit_csv back into rows.

    Cells hold 6-decimal fixed-point renderings, so a round trip is exact
    whenever the emitted values were representable at that precision (blank
    timing cells come back as a 0.0 wall time).
    """
    rows = []
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        header = next(reader)
        if tuple(header) != CSV_HEADER:
            raise ValueError(f"{path}: unexpected CSV header {header}")
        for record in reader:
            (
                demand,
                latency,
                method,
                status,
                embb,
                coverage,
                fully,
                wall,
                nodes,
            ) = record
            rows.append(
                SweepRow(
                    demand_kbps=float(demand) if demand else None,
                    latency_ms=float(latency) if latency else None,
                    metrics=Metrics(
                        method=method,
                        status=status,
                        embb_sum_kbps=float(embb) if embb else None,
                        urllc_coverage_ratio=float(coverage) if coverage else None,
                        fully_covered_urllc_count=int(fully) if fully else None,
                        solve_wall_time_s=float(wall) if wall else 0.0,
                        nodes=int(nodes) if nodes else None,
                    ),
                )
            )
    return rows


def emit_plot_data(rows: list[SweepRow], out_dir: str | Path) -> list[Path]:
    """One two-column series file per demand: latency vs eMBB sum per method.

    Rows without a value (e.g. Infeasible) leave a gap rather than a zero.
    """
    if not rows:
        raise ValueError("emit_plot_data needs at least one row")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    by_demand: dict[float, list[SweepRow]] = {}
    for row in rows:
        if row.demand_kbps is None or row.latency_ms is None:
            raise ValueError("emit_plot_data needs sweep rows with demand and latency")
        by_demand.setdefault(row.demand_kbps, []).append(row)
    written = []
    for demand in sorted(by_demand):
        path = out_dir / f"embb_vs_latency_demand_{demand:g}kbps.dat"
        methods = sorted({r.metrics.method for r in by_demand[demand]})
        chunks = []
        for method in methods:
            lines = [f"# method: {method}"]
            series = sorted(
                (r for r in by_demand[demand] if r.metrics.method == method),
                key=lambda r: r.latency_ms,
            )
            for row in series:
                if row.metrics.embb_sum_kbps is None:
                    continue
                lines.append(f"{row.latency_ms:g} {row.metrics.embb_sum_kbps:.6f}")
            chunks.append("\n".join(lines))
        try:
            path.write_text("\n\n".join(chunks) + "\n", encoding="utf-8")
        except OSError as exc:
            raise OSError(f"cannot write plot data to {path}: {exc}") from exc
        written.append(path)
    return written
