"""Binary ILP formulations and an exact branch-and-bound solver.

Two formulations over assignment variables x[b, k] (block b granted to user k):

* P0 maximizes total eMBB throughput subject to a hard per-URLLC demand
  (sum of granted rates >= q_k) and per-mini-slot non-overlap.  P0 may be
  infeasible.
* P1 maximizes throughput over all users subject to a per-URLLC grant cap
  (sum of granted rates <= q_k + u_k) and non-overlap.  P1 always admits the
  empty assignment, so it is never infeasible.

The solver is a depth-first branch and bound over variables in (block id,
user id) order, exploring x=1 before x=0.  Admissible upper bounds come from
a greedy knapsack over "alive" block classes (placements sharing a numerology
and start column), refined per formulation with demand reservations, a
deadline staircase check (P0) and cap-truncated URLLC marginal curves (P1).
Ties between equal-objective leaves are broken toward the lexicographically
smallest assignment tuple among the leaves the search explores.
"""

from __future__ import annotations

import enum
import math
import time
from dataclasses import dataclass, field

from .demand_rate import RATE_EPS, TIME_EPS, RateMatrix, ServiceClass, User
from .grid import Grid

DEFAULT_NODE_LIMIT = 10_000_000
TIE_EPS = 1e-9


class Formulation(enum.Enum):
    P0 = "p0"
    P1 = "p1"


class SolveStatus(str, enum.Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    NODE_LIMIT = "NodeLimit"


@dataclass(frozen=True)
class Allocation:
    """A conflict-free assignment of blocks to users.

    ``assignments`` is sorted by (block id, user id); ``per_user_served_kbps``
    follows user ids 0..K-1.  ``objective_kbps`` is the formulation objective
    (eMBB-only for P0, all users for P1, eMBB-only for heuristic output).
    """

    assignments: tuple[tuple[int, int], ...]
    objective_kbps: float
    per_user_served_kbps: tuple[float, ...]


@dataclass(frozen=True)
class SolveResult:
    status: SolveStatus
    allocation: Allocation | None
    nodes_explored: int
    wall_time_s: float


@dataclass(frozen=True)
class Violation:
    """One verification failure: what rule broke, where, and by how much."""

    kind: str
    subject: str
    margin: float
    message: str


@dataclass(frozen=True)
class IlpInstance:
    """One concrete problem: variables, coefficients, and constraint data.

    ``variables`` holds (block id, user id) pairs in ascending order; by
    default pairs whose masked rate is zero are pruned (an URLLC pair masked
    by its deadline is unusable, and a zero-rate eMBB pair is dominated).
    ``slot_vars`` maps each mini-slot index to the variable indices whose
    block covers it, i.e. the non-overlap constraints.
    """

    formulation: Formulation
    grid: Grid
    users: tuple[User, ...]
    rates: RateMatrix
    prune_zero: bool
    variables: tuple[tuple[int, int], ...] = field(repr=False)
    objective_coeffs: tuple[float, ...] = field(repr=False)
    slot_vars: tuple[tuple[int, ...], ...] = field(repr=False)

    @property
    def demands(self) -> tuple[float, ...]:
        return tuple(u.demand_q_kbps for u in self.users)

    @property
    def caps(self) -> tuple[float, ...]:
        return tuple(
            u.demand_cap_kbps if u.service_class == ServiceClass.URLLC else math.inf
            for u in self.users
        )

    def rate_of(self, block_id: int, user_id: int) -> float:
        return self.rates.rate(block_id, user_id)


def _build_instance(
    formulation: Formulation,
    grid: Grid,
    users: tuple[User, ...] | list[User],
    rates: RateMatrix,
    prune_zero: bool,
) -> IlpInstance:
    users = tuple(users)
    if users != rates.users:
        raise ValueError("users do not match the rate matrix's users")
    if rates.num_blocks != grid.num_blocks:
        raise ValueError(
            f"rate matrix has {rates.num_blocks} rows for {grid.num_blocks} blocks"
        )
    # Input contract: rates must already respect deadline masking (as
    # build_rate_matrix produces them).  The solver's deadline reasoning
    # relies on blocks past an URLLC deadline carrying zero rate.
    for user in users:
        if user.service_class != ServiceClass.URLLC:
            continue
        tau_s = user.latency_tau_ms * 1e-3
        for block in grid.blocks:
            if (
                block.end_time_s > tau_s + TIME_EPS
                and rates.rate(block.id, user.id) > RATE_EPS
            ):
                raise ValueError(
                    f"rate matrix grants user {user.id} a positive rate on block"
                    f" {block.id}, which ends after the user's deadline"
                )
    variables: list[tuple[int, int]] = []
    coeffs: list[float] = []
    for block in grid.blocks:
        for user in users:
            rate = rates.rate(block.id, user.id)
            if prune_zero and rate <= RATE_EPS:
                continue
            variables.append((block.id, user.id))
            if formulation == Formulation.P1:
                coeffs.append(rate)
            else:
                coeffs.append(rate if user.service_class == ServiceClass.EMBB else 0.0)
    slot_vars: list[list[int]] = [[] for _ in range(grid.num_slots)]
    for idx, (block_id, _) in enumerate(variables):
        for slot in grid.blocks[block_id].covered:
            slot_vars[grid.slot_index(*slot)].append(idx)
    return IlpInstance(
        formulation=formulation,
        grid=grid,
        users=users,
        rates=rates,
        prune_zero=prune_zero,
        variables=tuple(variables),
        objective_coeffs=tuple(coeffs),
        slot_vars=tuple(tuple(v) for v in slot_vars),
    )


def build_p0(
    grid: Grid,
    users: tuple[User, ...] | list[User],
    rates: RateMatrix,
    *,
    prune_zero: bool = True,
) -> IlpInstance:
    """eMBB-throughput maximization with hard URLLC demands."""
    return _build_instance(Formulation.P0, grid, users, rates, prune_zero)


def build_p1(
    grid: Grid,
    users: tuple[User, ...] | list[User],
    rates: RateMatrix,
    *,
    prune_zero: bool = True,
) -> IlpInstance:
    """Total-throughput maximization with per-URLLC grant caps."""
    return _build_instance(Formulation.P1, grid, users, rates, prune_zero)


class _Search:
    """Mutable branch-and-bound state over one instance."""

    def __init__(self, instance: IlpInstance, tie_eps: float) -> None:
        self.instance = instance
        self.tie_eps = tie_eps
        grid = instance.grid
        self.grid = grid
        self.p0 = instance.formulation == Formulation.P0
        self.num_vars = len(instance.variables)
        self.var_block = [b for b, _ in instance.variables]
        self.var_user = [k for _, k in instance.variables]
        self.var_rate = [instance.rates.rate(b, k) for b, k in instance.variables]
        self.var_coeff = list(instance.objective_coeffs)
        # Jump table: from var i, the index of the first var of the next block.
        self.jump = [0] * self.num_vars
        nxt = self.num_vars
        for i in range(self.num_vars - 1, -1, -1):
            if i + 1 == self.num_vars or self.var_block[i + 1] != self.var_block[i]:
                nxt = i + 1
            self.jump[i] = nxt

        users = instance.users
        self.num_users = len(users)
        self.is_urllc = [u.service_class == ServiceClass.URLLC for u in users]
        self.demand = [u.demand_q_kbps if s else 0.0 for u, s in zip(users, self.is_urllc)]
        self.cap = [
            u.demand_cap_kbps if s else math.inf for u, s in zip(users, self.is_urllc)
        ]
        self.served = [0.0] * self.num_users
        self.value = 0.0

        cfg = grid.config
        self.area = cfg.block_area
        self.T = cfg.time_units
        self.F = cfg.freq_units
        self.free_slots = grid.num_slots
        self.col_occ = [0] * self.T

        # Placement classes: blocks sharing (numerology, start column) have the
        # same footprint and end time; their per-user best rate drives bounds.
        blocks_with_vars = sorted({b for b in self.var_block})
        class_key_to_id: dict[tuple[int, int], int] = {}
        self.class_of_block: dict[int, int] = {}
        for b in blocks_with_vars:
            block = grid.blocks[b]
            key = (block.numerology_mu, block.t0)
            cid = class_key_to_id.setdefault(key, len(class_key_to_id))
            self.class_of_block[b] = cid
        self.num_classes = len(class_key_to_id)
        self.alive = [0] * self.num_classes
        for b in blocks_with_vars:
            self.alive[self.class_of_block[b]] += 1
        rates = instance.rates
        best_embb = [0.0] * self.num_classes
        class_user_rate = [[0.0] * self.num_users for _ in range(self.num_classes)]
        class_user_min = [[math.inf] * self.num_users for _ in range(self.num_classes)]
        for b in blocks_with_vars:
            cid = self.class_of_block[b]
            for k in range(self.num_users):
                r = rates.rate(b, k)
                if r > class_user_rate[cid][k]:
                    class_user_rate[cid][k] = r
                if RATE_EPS < r < class_user_min[cid][k]:
                    class_user_min[cid][k] = r
                if not self.is_urllc[k] and r > best_embb[cid]:
                    best_embb[cid] = r
        self.embb_runs = sorted(
            ((v, c) for c, v in enumerate(best_embb) if v > RATE_EPS), reverse=True
        )
        self.user_runs: list[list[tuple[float, int]]] = []
        self.user_min_runs: list[list[tuple[float, int]]] = []
        for k in range(self.num_users):
            if self.is_urllc[k]:
                usable = [
                    c for c in range(self.num_classes) if class_user_rate[c][k] > RATE_EPS
                ]
                runs = sorted(((class_user_rate[c][k], c) for c in usable), reverse=True)
                min_runs = sorted((class_user_min[c][k], c) for c in usable)
            else:
                runs = []
                min_runs = []
            self.user_runs.append(runs)
            self.user_min_runs.append(min_runs)

        # Deadline windows: user k's blocks must sit inside columns < window[k].
        base_time = cfg.base_time_s
        self.window = []
        for u in users:
            if math.isinf(u.latency_tau_ms):
                self.window.append(self.T)
            else:
                w = int(u.latency_tau_ms * 1e-3 / base_time + 1e-9)
                self.window.append(min(w, self.T))
        self.urllc_by_window = sorted(
            (k for k in range(self.num_users) if self.is_urllc[k]),
            key=lambda k: (self.window[k], k),
        )

        self.dead = [0] * grid.num_blocks
        self.block_cols: list[tuple[tuple[int, int], ...]] = []
        for block in grid.blocks:
            cols = tuple(
                (t, block.freq_width)
                for t in range(block.t0, block.t0 + block.time_len)
            )
            self.block_cols.append(cols)
        self._conflicts: list[tuple[int, ...] | None] = [None] * grid.num_blocks
        self.trail: list[int] = []

    # -- state transitions -------------------------------------------------

    def _conflict_ids(self, block_id: int) -> tuple[int, ...]:
        cached = self._conflicts[block_id]
        if cached is None:
            cached = tuple(self.grid.conflict_set(block_id))
            self._conflicts[block_id] = cached
        return cached

    def _kill(self, block_id: int) -> None:
        if self.dead[block_id] == 0:
            cid = self.class_of_block.get(block_id)
            if cid is not None:
                self.alive[cid] -= 1
        self.dead[block_id] += 1

    def _revive(self, block_id: int) -> None:
        self.dead[block_id] -= 1
        if self.dead[block_id] == 0:
            cid = self.class_of_block.get(block_id)
            if cid is not None:
                self.alive[cid] += 1

    def apply(self, v: int) -> None:
        b = self.var_block[v]
        self.trail.append(v)
        self._kill(b)
        for other in self._conflict_ids(b):
            self._kill(other)
        self.free_slots -= self.area
        for t, cnt in self.block_cols[b]:
            self.col_occ[t] += cnt
        self.served[self.var_user[v]] += self.var_rate[v]
        self.value += self.var_coeff[v]

    def undo(self, v: int) -> None:
        b = self.var_block[v]
        popped = self.trail.pop()
        assert popped == v
        self._revive(b)
        for other in self._conflict_ids(b):
            self._revive(other)
        self.free_slots += self.area
        for t, cnt in self.block_cols[b]:
            self.col_occ[t] -= cnt
        self.served[self.var_user[v]] -= self.var_rate[v]
        self.value -= self.var_coeff[v]

    # -- branching ----------------------------------------------------------

    def next_viable(self, i: int) -> int | None:
        n = self.num_vars
        eps = self.tie_eps
        while i < n:
            b = self.var_block[i]
            if self.dead[b] > 0:
                i = self.jump[i]
                continue
            r = self.var_rate[i]
            if r <= RATE_EPS:
                i += 1
                continue
            k = self.var_user[i]
            if self.is_urllc[k]:
                if self.p0:
                    # Demand met: extra grants are dominated (they occupy a
                    # block without improving the eMBB objective).
                    if self.demand[k] - self.served[k] <= eps:
                        i += 1
                        continue
                else:
                    if self.served[k] + r > self.cap[k] + eps:
                        i += 1
                        continue
            return i
        return None

    # -- bounds --------------------------------------------------------------

    def _embb_greedy(self, m: int) -> float:
        total = 0.0
        got = 0
        for value, cid in self.embb_runs:
            if got >= m:
                break
            take = self.alive[cid]
            if take <= 0:
                continue
            if got + take > m:
                take = m - got
            total += take * value
            got += take
        return total

    def _min_blocks_for(self, k: int, remaining: float) -> int | None:
        """Fewest alive blocks that could still cover ``remaining`` kbps."""
        count = 0
        for rate, cid in self.user_runs[k]:
            n = self.alive[cid]
            if n <= 0:
                continue
            chunk = n * rate
            if remaining <= chunk + self.tie_eps:
                return count + max(1, math.ceil((remaining - self.tie_eps) / rate))
            remaining -= chunk
            count += n
        return None

    def _urllc_marginals(self, k: int) -> list[tuple[float, int]]:
        """Concave marginal-value runs for granting extra blocks to URLLC k.

        Valid upper envelope: the n-block prefix sum is at least the value of
        any feasible n-block grant to k that respects the remaining cap room.
        The total count is truncated at the largest n whose cheapest-n sum
        still fits under the cap, which keeps single-rate users exact.
        """
        caproom = self.cap[k] - self.served[k]
        if caproom <= self.tie_eps:
            return []
        runs = [(rate, self.alive[cid]) for rate, cid in self.user_runs[k] if self.alive[cid] > 0]
        if not runs:
            return []
        # Largest block count any cap-respecting grant could use: fill with
        # the cheapest per-class rates first.  Class minima are static (dead
        # blocks included), which can only overestimate the count.
        n_join = 0
        acc = 0.0
        for rate, cid in self.user_min_runs[k]:
            count = self.alive[cid]
            if count <= 0:
                continue
            if acc + rate > caproom + self.tie_eps:
                break
            fit = int((caproom - acc + self.tie_eps) / rate)
            if fit >= count:
                n_join += count
                acc += count * rate
            else:
                n_join += fit
                acc += fit * rate
                break
        if n_join == 0:
            return []
        out: list[tuple[float, int]] = []
        emitted = 0
        acc = 0.0
        for rate, count in runs:
            if emitted >= n_join:
                break
            take = min(count, n_join - emitted)
            whole = int((caproom - acc + self.tie_eps) / rate)
            if whole >= take:
                out.append((rate, take))
                acc += take * rate
                emitted += take
                continue
            if whole > 0:
                out.append((rate, whole))
                acc += whole * rate
                emitted += whole
            partial = caproom - acc
            if partial > self.tie_eps and emitted < n_join:
                out.append((partial, 1))
                acc = caproom
                emitted += 1
            break
        return out

    def bound(self) -> float:
        if self.p0:
            return self._bound_p0()
        return self._bound_p1()

    def _bound_p0(self) -> float:
        total_reserve_slots = 0
        cum_area = 0
        free_before = 0
        col = 0
        for k in self.urllc_by_window:
            remaining = self.demand[k] - self.served[k]
            if remaining <= self.tie_eps:
                continue
            blocks = self._min_blocks_for(k, remaining)
            if blocks is None:
                return -math.inf
            reserve = blocks * self.area
            total_reserve_slots += reserve
            cum_area += reserve
            w = self.window[k]
            while col < w:
                free_before += self.F - self.col_occ[col]
                col += 1
            if cum_area > free_before:
                return -math.inf
        m = (self.free_slots - total_reserve_slots) // self.area
        if m < 0:
            return -math.inf
        return self.value + self._embb_greedy(m)

    def _bound_p1(self) -> float:
        m = self.free_slots // self.area
        if m <= 0:
            return self.value
        entries: list[tuple[float, int]] = []
        for k in range(self.num_users):
            if self.is_urllc[k]:
                entries.extend(self._urllc_marginals(k))
        entries.sort(reverse=True)
        # Two-list greedy merge: both marginal sequences are non-increasing,
        # so taking the larger head value is an optimal split of m blocks.
        total = 0.0
        got = 0
        ei = 0
        embb = self.embb_runs
        embb_idx = 0
        embb_taken_in_run = 0
        while got < m:
            u_val = entries[ei][0] if ei < len(entries) else None
            e_val = None
            while embb_idx < len(embb):
                value, cid = embb[embb_idx]
                if self.alive[cid] - embb_taken_in_run > 0:
                    e_val = value
                    break
                embb_idx += 1
                embb_taken_in_run = 0
            if u_val is None and e_val is None:
                break
            if e_val is None or (u_val is not None and u_val >= e_val):
                rate, count = entries[ei]
                take = min(count, m - got)
                total += take * rate
                got += take
                ei += 1
            else:
                value, cid = embb[embb_idx]
                avail = self.alive[cid] - embb_taken_in_run
                take = min(avail, m - got)
                total += take * value
                got += take
                embb_taken_in_run += take
        return self.value + total


def solve_exact(
    instance: IlpInstance,
    *,
    node_limit: int = DEFAULT_NODE_LIMIT,
    tie_eps: float = TIE_EPS,
) -> SolveResult:
    """Solves the instance to proven optimality by branch and bound.

    Returns Optimal with the lexicographically smallest optimal assignment
    among explored ties, Infeasible when no assignment satisfies a P0 demand,
    or NodeLimit (with the incumbent, if any) once ``node_limit`` nodes have
    been processed.  ``node_limit`` must be positive.
    """
    if node_limit <= 0:
        raise ValueError(f"node_limit must be positive, got {node_limit}")
    start = time.perf_counter()
    search = _Search(instance, tie_eps)

    best_value = -math.inf
    best_assignment: tuple[tuple[int, int], ...] | None = None

    p0 = instance.formulation == Formulation.P0
    urllc_ids = [u.id for u in instance.users if u.service_class == ServiceClass.URLLC]
    if p0:
        # Conflict-free relaxation: if even the sum of every rate cannot cover
        # a demand, the instance is infeasible outright.
        for k in urllc_ids:
            attainable = float(instance.rates.values[:, k].sum())
            if attainable < instance.users[k].demand_q_kbps - tie_eps:
                return SolveResult(
                    status=SolveStatus.INFEASIBLE,
                    allocation=None,
                    nodes_explored=0,
                    wall_time_s=time.perf_counter() - start,
                )
        if not urllc_ids:
            best_value = 0.0
            best_assignment = ()
    else:
        best_value = 0.0
        best_assignment = ()

    nodes = 0
    hit_limit = False
    # Stack entries: ("enter", scan_start) explores the subtree at the current
    # state; ("undo", var) rolls back an x=1 decision before its x=0 sibling.
    stack: list[tuple[str, int]] = [("enter", 0)]
    while stack:
        action, arg = stack.pop()
        if action == "undo":
            search.undo(arg)
            stack.append(("enter", arg + 1))
            continue
        if nodes >= node_limit:
            hit_limit = True
            break
        nodes += 1
        # With no incumbent yet, best_value is -inf and only the -inf bound
        # (a proven-infeasible subtree) trips this prune.
        if search.bound() <= best_value + tie_eps:
            continue
        v = search.next_viable(arg)
        if v is None:
            feasible = True
            if p0:
                for k in urllc_ids:
                    if search.served[k] < search.demand[k] - tie_eps:
                        feasible = False
                        break
            if feasible:
                value = search.value
                assignment = tuple(
                    (search.var_block[t], search.var_user[t]) for t in search.trail
                )
                if value > best_value + tie_eps:
                    best_value = value
                    best_assignment = assignment
                elif (
                    best_assignment is not None
                    and abs(value - best_value) <= tie_eps
                    and assignment < best_assignment
                ):
                    best_assignment = assignment
            continue
        stack.append(("undo", v))
        search.apply(v)
        stack.append(("enter", v + 1))

    wall = time.perf_counter() - start
    if best_assignment is None:
        status = SolveStatus.NODE_LIMIT if hit_limit else SolveStatus.INFEASIBLE
        return SolveResult(
            status=status, allocation=None, nodes_explored=nodes, wall_time_s=wall
        )
    status = SolveStatus.NODE_LIMIT if hit_limit else SolveStatus.OPTIMAL
    allocation = _materialize(instance, best_assignment)
    return SolveResult(
        status=status, allocation=allocation, nodes_explored=nodes, wall_time_s=wall
    )


def _materialize(
    instance: IlpInstance, assignment: tuple[tuple[int, int], ...]
) -> Allocation:
    ordered = tuple(sorted(assignment))
    served = [0.0] * len(instance.users)
    objective = 0.0
    p1 = instance.formulation == Formulation.P1
    for block_id, user_id in ordered:
        rate = instance.rates.rate(block_id, user_id)
        served[user_id] += rate
        user = instance.users[user_id]
        if p1 or user.service_class == ServiceClass.EMBB:
            objective += rate
    return Allocation(
        assignments=ordered,
        objective_kbps=objective,
        per_user_served_kbps=tuple(served),
    )


def verify_allocation(instance: IlpInstance, allocation: Allocation) -> list[Violation]:
    """Independently re-checks an allocation against the instance.

    Returns an empty list when the allocation is valid.  Reported kinds:
    ``unknown_block``, ``unknown_user``, ``unknown_variable``, ``duplicate``,
    ``overlap``, ``served_mismatch``, ``objective_mismatch``,
    ``demand_shortfall`` (P0), ``cap_excess`` (P1).
    """
    violations: list[Violation] = []
    grid = instance.grid
    num_users = len(instance.users)
    var_set = set(instance.variables)
    seen: set[tuple[int, int]] = set()
    slot_load: dict[int, int] = {}
    served = [0.0] * num_users
    objective = 0.0
    p1 = instance.formulation == Formulation.P1
    for block_id, user_id in allocation.assignments:
        if not 0 <= block_id < grid.num_blocks:
            violations.append(
                Violation(
                    kind="unknown_block",
                    subject=f"block {block_id}",
                    margin=0.0,
                    message=f"assignment references unknown block {block_id}",
                )
            )
            continue
        if not 0 <= user_id < num_users:
            violations.append(
                Violation(
                    kind="unknown_user",
                    subject=f"user {user_id}",
                    margin=0.0,
                    message=f"assignment references unknown user {user_id}",
                )
            )
            continue
        if (block_id, user_id) in seen:
            violations.append(
                Violation(
                    kind="duplicate",
                    subject=f"x_{block_id}_{user_id}",
                    margin=0.0,
                    message=f"assignment (block {block_id}, user {user_id}) repeats",
                )
            )
            continue
        seen.add((block_id, user_id))
        if (block_id, user_id) not in var_set:
            violations.append(
                Violation(
                    kind="unknown_variable",
                    subject=f"x_{block_id}_{user_id}",
                    margin=0.0,
                    message=(
                        f"(block {block_id}, user {user_id}) is not a variable of"
                        " this instance"
                    ),
                )
            )
            continue
        rate = instance.rates.rate(block_id, user_id)
        served[user_id] += rate
        user = instance.users[user_id]
        if p1 or user.service_class == ServiceClass.EMBB:
            objective += rate
        for slot in grid.blocks[block_id].covered:
            idx = grid.slot_index(*slot)
            slot_load[idx] = slot_load.get(idx, 0) + 1
    for idx in sorted(slot_load):
        load = slot_load[idx]
        if load > 1:
            f, t = divmod(idx, grid.config.time_units)
            violations.append(
                Violation(
                    kind="overlap",
                    subject=f"slot ({f}, {t})",
                    margin=float(load - 1),
                    message=f"mini-slot ({f}, {t}) is covered by {load} granted blocks",
                )
            )
    for user in instance.users:
        stated = allocation.per_user_served_kbps[user.id]
        actual = served[user.id]
        if abs(stated - actual) > 1e-6:
            violations.append(
                Violation(
                    kind="served_mismatch",
                    subject=f"user {user.id}",
                    margin=abs(stated - actual),
                    message=(
                        f"user {user.id} states {stated} kbps served but"
                        f" assignments sum to {actual}"
                    ),
                )
            )
    if abs(allocation.objective_kbps - objective) > 1e-6:
        violations.append(
            Violation(
                kind="objective_mismatch",
                subject="objective",
                margin=abs(allocation.objective_kbps - objective),
                message=(
                    f"stated objective {allocation.objective_kbps} differs from"
                    f" recomputed {objective}"
                ),
            )
        )
    for user in instance.users:
        if user.service_class != ServiceClass.URLLC:
            continue
        if instance.formulation == Formulation.P0:
            shortfall = user.demand_q_kbps - served[user.id]
            if shortfall > 1e-9:
                violations.append(
                    Violation(
                        kind="demand_shortfall",
                        subject=f"user {user.id}",
                        margin=shortfall,
                        message=(
                            f"URLLC user {user.id} served {served[user.id]} kbps,"
                            f" short of demand {user.demand_q_kbps}"
                        ),
                    )
                )
        else:
            excess = served[user.id] - user.demand_cap_kbps
            if excess > 1e-9:
                violations.append(
                    Violation(
                        kind="cap_excess",
                        subject=f"user {user.id}",
                        margin=excess,
                        message=(
                            f"URLLC user {user.id} served {served[user.id]} kbps,"
                            f" above cap {user.demand_cap_kbps}"
                        ),
                    )
                )
    return violations


def format_lp(instance: IlpInstance) -> str:
    """Plain-text LP-style dump with deterministic field ordering.

    Variables appear as ``x_<block>_<user>`` in (block, user) order; demand or
    cap rows follow ascending user ids, then one non-overlap row per covered
    mini-slot in index order.  An URLLC user left with no variables is noted
    in a comment since an empty sum cannot be expressed as an LP row.
    """
    lines: list[str] = []
    terms = [
        f"{coeff!r} x_{b}_{k}"
        for (b, k), coeff in zip(instance.variables, instance.objective_coeffs)
    ]
    lines.append("Maximize")
    lines.append(" obj: " + (" + ".join(terms) if terms else "0"))
    lines.append("Subject To")
    per_user: dict[int, list[str]] = {u.id: [] for u in instance.users}
    for (b, k), _ in zip(instance.variables, instance.objective_coeffs):
        per_user[k].append(f"{instance.rates.rate(b, k)!r} x_{b}_{k}")
    for user in instance.users:
        if user.service_class != ServiceClass.URLLC:
            continue
        terms = per_user[user.id]
        if instance.formulation == Formulation.P0:
            if not terms:
                lines.append(
                    f"\\ demand_u{user.id} has no admissible variables: infeasible"
                )
                continue
            lines.append(
                f" demand_u{user.id}: "
                + " + ".join(terms)
                + f" >= {user.demand_q_kbps!r}"
            )
        else:
            if not terms:
                continue
            lines.append(
                f" cap_u{user.id}: "
                + " + ".join(terms)
                + f" <= {user.demand_cap_kbps!r}"
            )
    T = instance.grid.config.time_units
    for idx, var_ids in enumerate(instance.slot_vars):
        if not var_ids:
            continue
        f, t = divmod(idx, T)
        names = " + ".join(
            f"x_{instance.variables[v][0]}_{instance.variables[v][1]}" for v in var_ids
        )
        lines.append(f" slot_{f}_{t}: {names} <= 1")
    lines.append("Binaries")
    lines.append(" " + " ".join(f"x_{b}_{k}" for b, k in instance.variables))
    lines.append("End")
    return "\n".join(lines) + "\n"
