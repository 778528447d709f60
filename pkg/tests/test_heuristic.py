"""URLLC placement scoring, eMBB fill order, and no-overlap guarantees."""

import random

import numpy as np
import pytest

from conftest import brute_force_optimum, make_tiny_grid, random_instance
from flexsched.demand_rate import (
    RateMatrix,
    RateModelParams,
    ServiceClass,
    User,
    build_rate_matrix,
)
from flexsched.grid import GridConfig, Numerology, build_grid
from flexsched.heuristic import (
    DROPPED,
    FULLY,
    PARTIALLY,
    run_heuristic,
    score_candidates,
)
from flexsched.ilp import Formulation, build_p0, solve_exact, verify_allocation

HARD_KINDS = {
    "overlap",
    "duplicate",
    "unknown_block",
    "unknown_user",
    "unknown_variable",
    "served_mismatch",
    "objective_mismatch",
}


def cross_grid():
    """2x2 grid whose mu-0 rows all overlap its mu-1 columns."""
    config = GridConfig(
        freq_units=2,
        time_units=2,
        mu_max=1,
        numerologies=(Numerology.for_mu(0, 1), Numerology.for_mu(1, 1)),
    )
    return build_grid(config)


def test_urllc_pick_avoids_embb_valuable_conflicts():
    grid = cross_grid()
    users = (
        User(
            id=0,
            service_class=ServiceClass.URLLC,
            spectral_efficiency=1.0,
            demand_q_kbps=8.0,
            latency_tau_ms=1.0,
        ),
        User(id=1, service_class=ServiceClass.EMBB, spectral_efficiency=1.0),
    )
    # Blocks 0/1 are the mu-0 rows, 2/3 the mu-1 columns.  Equal-rate URLLC
    # choices 0 and 2 differ only in the eMBB value they would destroy.
    values = np.array(
        [
            [10.0, 0.0],
            [0.0, 50.0],
            [10.0, 0.0],
            [0.0, 5.0],
        ]
    )
    rates = RateMatrix(values=values, users=users)

    scored = {
        c.block_id: c for c in score_candidates(grid, rates, users[0], 0, [0.0, 50.0, 0.0, 5.0])
    }
    assert scored[0].conflict_cost == pytest.approx(5.0)  # kills blocks 2 and 3
    assert scored[2].conflict_cost == pytest.approx(50.0)  # kills blocks 0 and 1
    assert scored[0].score > scored[2].score

    result = run_heuristic(grid, users, rates)
    assert result.allocation.assignments == ((0, 0), (1, 1))
    assert result.embb_sum_kbps == pytest.approx(50.0)
    assert result.urllc_outcomes[0].outcome == FULLY


def test_urllc_users_served_in_deadline_order():
    config = GridConfig(
        freq_units=1,
        time_units=2,
        mu_max=0,
        numerologies=(Numerology.for_mu(0, 0),),
    )
    grid = build_grid(config)
    users = (
        User(
            id=0,
            service_class=ServiceClass.URLLC,
            spectral_efficiency=1.0,
            demand_q_kbps=10.0,
            latency_tau_ms=2.0,
        ),
        User(
            id=1,
            service_class=ServiceClass.URLLC,
            spectral_efficiency=1.0,
            demand_q_kbps=10.0,
            latency_tau_ms=1.0,
        ),
    )
    values = np.array([[10.0, 10.0], [10.0, 0.0]])
    rates = RateMatrix(values=values, users=users)
    result = run_heuristic(grid, users, rates)
    # The tight-deadline user must get block 0 (its only option), leaving
    # block 1 for the relaxed one; serving id order instead would strand u1.
    assert result.allocation.assignments == ((0, 1), (1, 0))
    assert all(o.outcome == FULLY for o in result.urllc_outcomes)


def test_partial_and_dropped_outcomes():
    config = GridConfig(
        freq_units=1,
        time_units=2,
        mu_max=0,
        numerologies=(Numerology.for_mu(0, 0),),
    )
    grid = build_grid(config)
    users = (
        User(
            id=0,
            service_class=ServiceClass.URLLC,
            spectral_efficiency=1.0,
            demand_q_kbps=500.0,
            latency_tau_ms=1.0,
        ),
        User(
            id=1,
            service_class=ServiceClass.URLLC,
            spectral_efficiency=1.0,
            demand_q_kbps=10.0,
            latency_tau_ms=0.25,  # shorter than any block: fully masked
        ),
    )
    rates = build_rate_matrix(grid, users, RateModelParams(ctrl_overhead=0.0))
    result = run_heuristic(grid, users, rates)
    by_user = {o.user_id: o for o in result.urllc_outcomes}
    assert by_user[0].outcome == PARTIALLY
    assert by_user[0].served_kbps == pytest.approx(90.0)  # one 90 kbps block fits
    assert by_user[1].outcome == DROPPED
    assert by_user[1].served_kbps == 0.0
    # Partial grants are kept: block 0 stays with user 0.
    assert (0, 0) in result.allocation.assignments


def test_embb_fill_prefers_rate_then_block_then_user():
    grid = cross_grid()
    users = (
        User(id=0, service_class=ServiceClass.EMBB, spectral_efficiency=1.0),
        User(id=1, service_class=ServiceClass.EMBB, spectral_efficiency=1.0),
    )
    # Both columns (blocks 2, 3) carry 9.0; both rows carry 8.0.  The fill
    # takes block 2 first (rate), assigns it to user 0 (user tie), then
    # block 3; the rows are blocked.
    values = np.array([[8.0, 8.0], [8.0, 8.0], [9.0, 9.0], [9.0, 9.0]])
    rates = RateMatrix(values=values, users=users)
    result = run_heuristic(grid, users, rates)
    assert result.allocation.assignments == ((2, 0), (3, 0))
    assert result.embb_sum_kbps == pytest.approx(18.0)


def test_heuristic_never_overlaps_and_stays_under_p0_optimum():
    rng = random.Random(20250819)
    compared = 0
    for _ in range(60):
        grid, users, rates = random_instance(rng)
        result = run_heuristic(grid, users, rates)
        mask = 0
        for block_id, _ in result.allocation.assignments:
            bitmask = grid.blocks[block_id].bitmask
            assert mask & bitmask == 0
            mask |= bitmask
        p0_value = brute_force_optimum(grid, users, rates, Formulation.P0)
        if p0_value is not None:
            assert result.embb_sum_kbps <= p0_value + 1e-9
            compared += 1
    assert compared > 10


def test_heuristic_allocation_verifies_against_p0_instance():
    rng = random.Random(90)
    for _ in range(20):
        grid, users, rates = random_instance(rng)
        result = run_heuristic(grid, users, rates)
        inst = build_p0(grid, users, rates)
        violations = verify_allocation(inst, result.allocation)
        hard = [v for v in violations if v.kind in HARD_KINDS]
        assert hard == []  # only demand shortfalls are acceptable
        for v in violations:
            assert v.kind == "demand_shortfall"


def test_heuristic_is_deterministic():
    rng = random.Random(101)
    grid, users, rates = random_instance(rng)
    first = run_heuristic(grid, users, rates)
    second = run_heuristic(grid, users, rates)
    assert first == second


def test_full_coverage_with_ample_capacity():
    grid = make_tiny_grid((3, 4, 0, (0,)))
    users = (
        User(
            id=0,
            service_class=ServiceClass.URLLC,
            spectral_efficiency=1.0,
            demand_q_kbps=100.0,
            latency_tau_ms=4.0,
        ),
        User(id=1, service_class=ServiceClass.EMBB, spectral_efficiency=1.0),
    )
    rates = build_rate_matrix(grid, users, RateModelParams(ctrl_overhead=0.0))
    result = run_heuristic(grid, users, rates)
    assert result.urllc_outcomes[0].outcome == FULLY
    assert result.urllc_outcomes[0].served_kbps >= 100.0
    assert result.embb_sum_kbps > 0.0
    exact = solve_exact(build_p0(grid, users, rates))
    assert result.embb_sum_kbps <= exact.allocation.objective_kbps + 1e-9
