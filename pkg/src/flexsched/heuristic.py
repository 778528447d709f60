"""Two-phase best-effort scheduler: URLLC placement, then greedy eMBB fill.

URLLC users are processed in increasing (deadline, id) order.  Each pick
re-scores every free unmasked block for the current user: a block's score is
its rate discounted by the eMBB value it would destroy (the sum of the best
eMBB rates of the still-free blocks it overlaps), and the highest score wins
with ties broken toward the lowest block id.  Picks stop once the demand is
met or no positive-rate placement remains; partial grants are kept, never
rolled back.  The eMBB phase then fills the remaining space greedily by
(rate, block id, user id).

The result's allocation scores eMBB throughput only, matching the objective
of the demand-constrained formulation it is compared against.
"""

from __future__ import annotations

from dataclasses import dataclass

from .demand_rate import RATE_EPS, RateMatrix, ServiceClass, User
from .grid import Grid
from .ilp import Allocation

FULLY = "fully"
PARTIALLY = "partially"
DROPPED = "dropped"


@dataclass(frozen=True)
class PlacementCandidate:
    """One scored (block, user) placement considered by the URLLC phase."""

    block_id: int
    user_id: int
    rate_kbps: float
    conflict_cost: float
    score: float


@dataclass(frozen=True)
class UrllcOutcome:
    """Coverage outcome for one URLLC user.

    ``dropped`` means no block was granted at all; ``partially`` means some
    rate was granted but less than the demand.
    """

    user_id: int
    served_kbps: float
    outcome: str


@dataclass(frozen=True)
class HeuristicResult:
    allocation: Allocation
    urllc_outcomes: tuple[UrllcOutcome, ...]

    @property
    def embb_sum_kbps(self) -> float:
        return self.allocation.objective_kbps


def score_candidates(
    grid: Grid,
    rates: RateMatrix,
    user: User,
    used_mask: int,
    best_embb_rate: list[float],
) -> list[PlacementCandidate]:
    """Scores every free positive-rate block for one URLLC user."""
    candidates = []
    for block in grid.blocks:
        if used_mask & block.bitmask:
            continue
        rate = rates.rate(block.id, user.id)
        if rate <= RATE_EPS:
            continue
        cost = 0.0
        for other_id in grid.conflict_set(block.id):
            other = grid.blocks[other_id]
            if used_mask & other.bitmask:
                continue
            cost += best_embb_rate[other_id]
        score = rate / (1.0 + cost)
        candidates.append(
            PlacementCandidate(
                block_id=block.id,
                user_id=user.id,
                rate_kbps=rate,
                conflict_cost=cost,
                score=score,
            )
        )
    return candidates


def run_heuristic(
    grid: Grid, users: tuple[User, ...] | list[User], rates: RateMatrix
) -> HeuristicResult:
    users = tuple(users)
    if users != rates.users:
        raise ValueError("users do not match the rate matrix's users")
    best_embb_rate = [0.0] * grid.num_blocks
    for block in grid.blocks:
        best = 0.0
        for user in users:
            if user.service_class != ServiceClass.EMBB:
                continue
            rate = rates.rate(block.id, user.id)
            if rate > best:
                best = rate
        best_embb_rate[block.id] = best

    used_mask = 0
    assignments: list[tuple[int, int]] = []
    served = [0.0] * len(users)
    blocks_granted = [0] * len(users)

    urllc_users = sorted(
        (u for u in users if u.service_class == ServiceClass.URLLC),
        key=lambda u: (u.latency_tau_ms, u.id),
    )
    for user in urllc_users:
        while served[user.id] < user.demand_q_kbps - 1e-9:
            candidates = score_candidates(grid, rates, user, used_mask, best_embb_rate)
            if not candidates:
                break
            pick = candidates[0]
            for cand in candidates[1:]:
                if cand.score > pick.score:
                    pick = cand
            block = grid.blocks[pick.block_id]
            used_mask |= block.bitmask
            assignments.append((pick.block_id, user.id))
            served[user.id] += pick.rate_kbps
            blocks_granted[user.id] += 1

    embb_pairs = []
    for block in grid.blocks:
        for user in users:
            if user.service_class != ServiceClass.EMBB:
                continue
            rate = rates.rate(block.id, user.id)
            if rate > RATE_EPS:
                embb_pairs.append((-rate, block.id, user.id))
    embb_pairs.sort()
    embb_sum = 0.0
    for neg_rate, block_id, user_id in embb_pairs:
        block = grid.blocks[block_id]
        if used_mask & block.bitmask:
            continue
        used_mask |= block.bitmask
        assignments.append((block_id, user_id))
        served[user_id] += -neg_rate
        blocks_granted[user_id] += 1
        embb_sum += -neg_rate

    outcomes = []
    for user in users:
        if user.service_class != ServiceClass.URLLC:
            continue
        if served[user.id] >= user.demand_q_kbps - 1e-9:
            outcome = FULLY
        elif blocks_granted[user.id] == 0:
            outcome = DROPPED
        else:
            outcome = PARTIALLY
        outcomes.append(
            UrllcOutcome(user_id=user.id, served_kbps=served[user.id], outcome=outcome)
        )

    allocation = Allocation(
        assignments=tuple(sorted(assignments)),
        objective_kbps=embb_sum,
        per_user_served_kbps=tuple(served),
    )
    return HeuristicResult(allocation=allocation, urllc_outcomes=tuple(outcomes))
