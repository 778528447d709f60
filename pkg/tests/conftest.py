"""Shared fixtures: tiny grid pool, random instances, brute-force oracle."""

import math
import random

import pytest

from flexsched.demand_rate import (
    RateMatrix,
    RateModelParams,
    ServiceClass,
    User,
    latency_mask,
)
from flexsched.grid import Grid, GridConfig, Numerology, build_grid
from flexsched.ilp import Formulation

# (freq_units, time_units, mu_max, numerologies) with at most 12 blocks each.
TINY_GRID_DIMS = [
    (3, 4, 0, (0,)),
    (2, 4, 1, (0, 1)),
    (3, 3, 1, (0, 1)),
    (4, 2, 1, (0, 1)),
    (2, 4, 2, (0, 1)),
    (2, 6, 2, (0, 1)),
    (4, 2, 2, (1, 2)),
]

# Dims used for oracle comparisons; the all-singleton 12-block grid has no
# conflicts, which makes exhaustive enumeration disproportionately slow, so
# it appears here with a reduced user count (see random_instance).
ORACLE_GRID_DIMS = TINY_GRID_DIMS


def make_tiny_grid(dims: tuple[int, int, int, tuple[int, ...]]) -> Grid:
    freq_units, time_units, mu_max, mus = dims
    config = GridConfig(
        freq_units=freq_units,
        time_units=time_units,
        mu_max=mu_max,
        numerologies=tuple(Numerology.for_mu(mu, mu_max) for mu in mus),
    )
    return build_grid(config)


def make_random_users(rng: random.Random, grid: Grid, num_users: int) -> tuple[User, ...]:
    base_time_s = grid.config.base_time_s
    users = []
    for uid in range(num_users):
        if rng.random() < 0.45:
            window = rng.randint(1, grid.config.time_units)
            users.append(
                User(
                    id=uid,
                    service_class=ServiceClass.URLLC,
                    spectral_efficiency=1.0,
                    demand_q_kbps=float(rng.randint(4, 60)),
                    latency_tau_ms=window * base_time_s * 1000.0,
                    slack_u_kbps=float(rng.choice([0, rng.randint(5, 40)])),
                )
            )
        else:
            users.append(
                User(id=uid, service_class=ServiceClass.EMBB, spectral_efficiency=1.0)
            )
    return tuple(users)


def fabricate_rates(
    rng: random.Random, grid: Grid, users: tuple[User, ...]
) -> RateMatrix:
    """Integer-valued random rates with deadline masking applied."""
    import numpy as np

    values = np.zeros((grid.num_blocks, len(users)), dtype=np.float64)
    for block in grid.blocks:
        for user in users:
            raw = 0.0 if rng.random() < 0.3 else float(rng.randint(1, 30))
            values[block.id, user.id] = latency_mask(block, user, raw)
    return RateMatrix(values=values, users=users)


def random_instance(rng: random.Random):
    """One random (grid, users, rates) triple sized for exhaustive search."""
    dims = rng.choice(ORACLE_GRID_DIMS)
    grid = make_tiny_grid(dims)
    max_users = 2 if dims[2] == 0 else 3
    users = make_random_users(rng, grid, rng.randint(1, max_users))
    rates = fabricate_rates(rng, grid, users)
    return grid, users, rates


def brute_force_optimum(
    grid: Grid,
    users: tuple[User, ...],
    rates: RateMatrix,
    formulation: Formulation,
) -> float | None:
    """Exhaustive optimum by per-block enumeration; None when infeasible.

    Each block is either skipped or granted to one user, rejecting grants on
    already-covered mini-slots and (P1) grants that break a cap; P0 demands
    are checked at the leaves.  The only shortcut is an obviously-sound one:
    abandon a prefix once even the sum of per-block best coefficients cannot
    beat the best value found so far.
    """
    blocks = grid.blocks
    n = len(blocks)
    num_users = len(users)
    p0 = formulation is Formulation.P0
    urllc = [u.service_class == ServiceClass.URLLC for u in users]
    demand = [u.demand_q_kbps for u in users]
    cap = [u.demand_cap_kbps for u in users]

    def coeff(block_id: int, k: int) -> float:
        rate = rates.rate(block_id, k)
        if p0 and urllc[k]:
            return 0.0
        return rate

    suffix = [0.0] * (n + 1)
    for i in range(n - 1, -1, -1):
        best_here = max((coeff(blocks[i].id, k) for k in range(num_users)), default=0.0)
        suffix[i] = suffix[i + 1] + best_here

    best = -math.inf
    served = [0.0] * num_users

    def rec(i: int, used_mask: int, value: float) -> None:
        nonlocal best
        if value + suffix[i] <= best:
            return
        if i == n:
            if p0:
                for k in range(num_users):
                    if urllc[k] and served[k] < demand[k] - 1e-9:
                        return
            best = value
            return
        block = blocks[i]
        if not used_mask & block.bitmask:
            for k in range(num_users):
                rate = rates.rate(block.id, k)
                if rate <= 1e-9:
                    continue
                if not p0 and urllc[k] and served[k] + rate > cap[k] + 1e-9:
                    continue
                served[k] += rate
                rec(i + 1, used_mask | block.bitmask, value + coeff(block.id, k))
                served[k] -= rate
        rec(i + 1, used_mask, value)

    rec(0, 0, 0.0)
    return None if math.isinf(best) else best


@pytest.fixture
def default_rate_params() -> RateModelParams:
    return RateModelParams()
