"""Per-(block, user) achievable rates and latency masking.

A block delivers ``bandwidth * duration * spectral_efficiency`` bits, reduced
by the numerology's cyclic-prefix style overhead and a flat control-plane
overhead, and is reported as a rate over one scheduling frame:

    rate_kbps = freq_width * base_freq_hz * time_len * base_time_s
                * spectral_efficiency * (1 - cp_overhead) * (1 - ctrl_overhead)
                / frame_duration_ms

Bits per millisecond equal kilobits per second, so dividing bits by the frame
duration in ms directly yields kbps.  Latency masking zeroes the rate of any
(block, URLLC user) pair whose block ends after the user's deadline; a block
ending exactly at the deadline is allowed.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .grid import Grid, ResourceBlock

# Rates closer to zero than this are treated as zero everywhere.
RATE_EPS = 1e-9
# Slack for end-time vs deadline comparisons, in seconds.
TIME_EPS = 1e-12


class ServiceClass(str, enum.Enum):
    EMBB = "embb"
    URLLC = "urllc"


@dataclass(frozen=True)
class User:
    """One service request.

    eMBB users carry no demand, no deadline (infinite latency tolerance), and
    no slack; URLLC users need ``demand_q_kbps`` within ``latency_tau_ms`` and
    may be granted up to ``demand_q_kbps + slack_u_kbps`` when overprovisioning
    is allowed.
    """

    id: int
    service_class: ServiceClass
    spectral_efficiency: float
    demand_q_kbps: float = 0.0
    latency_tau_ms: float = math.inf
    slack_u_kbps: float = 0.0

    def __post_init__(self) -> None:
        if self.id < 0:
            raise ValueError(f"user id must be >= 0, got {self.id}")
        if self.spectral_efficiency <= 0:
            raise ValueError(
                f"spectral_efficiency must be positive, got {self.spectral_efficiency}"
            )
        if self.service_class == ServiceClass.URLLC:
            if not self.demand_q_kbps > 0:
                raise ValueError(
                    f"URLLC user {self.id} needs a positive demand,"
                    f" got {self.demand_q_kbps}"
                )
            if not (0 < self.latency_tau_ms < math.inf):
                raise ValueError(
                    f"URLLC user {self.id} needs a finite positive latency"
                    f" tolerance, got {self.latency_tau_ms}"
                )
            if self.slack_u_kbps < 0:
                raise ValueError(
                    f"URLLC user {self.id} slack must be >= 0,"
                    f" got {self.slack_u_kbps}"
                )
        else:
            if self.demand_q_kbps != 0.0:
                raise ValueError(
                    f"eMBB user {self.id} must not carry a demand,"
                    f" got {self.demand_q_kbps}"
                )
            if not math.isinf(self.latency_tau_ms):
                raise ValueError(
                    f"eMBB user {self.id} must not carry a latency tolerance,"
                    f" got {self.latency_tau_ms}"
                )
            if self.slack_u_kbps != 0.0:
                raise ValueError(
                    f"eMBB user {self.id} must not carry slack,"
                    f" got {self.slack_u_kbps}"
                )

    @property
    def demand_cap_kbps(self) -> float:
        """Demand plus slack: the hard per-user grant ceiling."""
        return self.demand_q_kbps + self.slack_u_kbps


@dataclass(frozen=True)
class RateModelParams:
    """Shared rate-model knobs.

    The frame duration defaults to 2 ms, long enough to cover the largest
    deadline in the default parameter sweeps.  Per-numerology overhead plus
    control overhead must leave positive capacity.
    """

    ctrl_overhead: float = 0.0
    frame_duration_ms: float = 2.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.ctrl_overhead < 1.0:
            raise ValueError(
                f"ctrl_overhead must be in [0, 1), got {self.ctrl_overhead}"
            )
        if self.frame_duration_ms <= 0:
            raise ValueError(
                f"frame_duration_ms must be positive, got {self.frame_duration_ms}"
            )


def achievable_rate(
    grid: Grid,
    block: ResourceBlock | int,
    user: User,
    params: RateModelParams,
) -> float:
    """Unmasked rate of one block for one user, in kbps."""
    if isinstance(block, int):
        block = grid.block(block)
    config = grid.config
    numerology = config.numerology_for(block.numerology_mu)
    if numerology.cp_overhead + params.ctrl_overhead >= 1.0:
        raise ValueError(
            f"combined overhead for mu={numerology.mu} is"
            f" {numerology.cp_overhead + params.ctrl_overhead}, must be < 1"
        )
    bits = (
        block.freq_width
        * config.base_freq_hz
        * block.time_len
        * config.base_time_s
        * user.spectral_efficiency
        * (1.0 - numerology.cp_overhead)
        * (1.0 - params.ctrl_overhead)
    )
    return bits / params.frame_duration_ms


def latency_mask(block: ResourceBlock, user: User, rate_kbps: float) -> float:
    """Zeroes the rate when an URLLC block finishes past the user's deadline.

    A block whose end time equals the deadline (within TIME_EPS) still counts.
    Idempotent: masking an already-masked value returns 0.
    """
    if user.service_class != ServiceClass.URLLC:
        return rate_kbps
    if math.isinf(user.latency_tau_ms):
        return rate_kbps
    deadline_s = user.latency_tau_ms * 1e-3
    if block.end_time_s > deadline_s + TIME_EPS:
        return 0.0
    return rate_kbps


@dataclass(frozen=True)
class RateMatrix:
    """Dense |B| x |K| matrix of masked achievable rates in kbps.

    Rows follow block ids, columns follow user ids; user ids must be exactly
    0..K-1.  Masked entries are exactly 0.0.
    """

    values: np.ndarray
    users: tuple[User, ...]

    def __post_init__(self) -> None:
        if self.values.ndim != 2:
            raise ValueError(f"rate matrix must be 2-D, got {self.values.ndim}-D")
        if self.values.shape[1] != len(self.users):
            raise ValueError(
                f"rate matrix has {self.values.shape[1]} columns for"
                f" {len(self.users)} users"
            )
        ids = [u.id for u in self.users]
        if ids != list(range(len(self.users))):
            raise ValueError(
                f"user ids must be dense 0..{len(self.users) - 1}, got {ids}"
            )
        if not np.all(np.isfinite(self.values)):
            raise ValueError("rate matrix contains non-finite entries")
        if np.any(self.values < 0):
            raise ValueError("rate matrix contains negative entries")

    @property
    def num_blocks(self) -> int:
        return self.values.shape[0]

    @property
    def num_users(self) -> int:
        return self.values.shape[1]

    def rate(self, block_id: int, user_id: int) -> float:
        return float(self.values[block_id, user_id])


def build_rate_matrix(
    grid: Grid,
    users: list[User] | tuple[User, ...],
    params: RateModelParams,
) -> RateMatrix:
    """Computes masked rates for every (block, user) pair.

    Entries below RATE_EPS are clamped to exactly zero so that downstream
    variable pruning and "masked means zero" checks are exact.
    """
    users = tuple(users)
    values = np.zeros((grid.num_blocks, len(users)), dtype=np.float64)
    for block in grid.blocks:
        for col, user in enumerate(users):
            rate = achievable_rate(grid, block, user, params)
            rate = latency_mask(block, user, rate)
            values[block.id, col] = rate if rate > RATE_EPS else 0.0
    return RateMatrix(values=values, users=users)
