"""Time-frequency resource grid with flexible-numerology block enumeration.

The base grid is an F x T lattice of mini-slots: F frequency units by T time
units, where one frequency unit is one PRB-width (180 kHz by default) and one
time unit is the mini-slot of the finest configured numerology.  A numerology
``mu`` occupies a rectangular footprint of ``2**mu`` frequency units by
``2**(mu_max - mu)`` time units, so every block covers the same number of
mini-slots (``2**mu_max``) regardless of numerology.

Mini-slot indices are row-major with time fastest: ``index = f * T + t``.
Block ids are dense and assigned in (mu, f0, t0) order.  All downstream tie
breaking relies on these two orderings, so they must not change.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple


class MiniSlot(NamedTuple):
    """A single base grid cell at frequency row ``f`` and time column ``t``."""

    f: int
    t: int


@dataclass(frozen=True)
class Numerology:
    """One configured numerology and its rectangular block footprint.

    Args:
        mu: numerology index (0 = narrowest frequency, longest time).
        freq_width: footprint height in frequency units, must equal 2**mu.
        time_len: footprint length in time units, must equal 2**(mu_max - mu)
            for the enclosing grid's mu_max.
        cp_overhead: fraction of the block's capacity lost to cyclic-prefix
            style per-numerology overhead, in [0, 1).
    """

    mu: int
    freq_width: int
    time_len: int
    cp_overhead: float = 0.0

    def __post_init__(self) -> None:
        if self.mu < 0:
            raise ValueError(f"numerology index must be >= 0, got {self.mu}")
        if self.freq_width != 2 ** self.mu:
            raise ValueError(
                f"freq_width {self.freq_width} inconsistent with mu={self.mu}"
                f" (expected {2 ** self.mu})"
            )
        if self.time_len < 1:
            raise ValueError(f"time_len must be >= 1, got {self.time_len}")
        if not 0.0 <= self.cp_overhead < 1.0:
            raise ValueError(
                f"cp_overhead must be in [0, 1), got {self.cp_overhead}"
            )

    @classmethod
    def for_mu(cls, mu: int, mu_max: int, cp_overhead: float = 0.0) -> "Numerology":
        """Builds the numerology with the footprint implied by ``mu_max``."""
        if mu > mu_max:
            raise ValueError(f"mu={mu} exceeds mu_max={mu_max}")
        return cls(
            mu=mu,
            freq_width=2 ** mu,
            time_len=2 ** (mu_max - mu),
            cp_overhead=cp_overhead,
        )


@dataclass(frozen=True)
class GridConfig:
    """Immutable description of the base grid and its numerology set.

    ``base_time_s`` defaults to ``1e-3 / 2**mu_max`` so that the finest
    numerology's mini-slot tiles a 1 ms reference slot exactly.
    """

    freq_units: int
    time_units: int
    mu_max: int
    numerologies: tuple[Numerology, ...]
    base_freq_hz: float = 180e3
    base_time_s: float | None = None
    precompute_conflicts: bool = False

    def __post_init__(self) -> None:
        if self.freq_units <= 0:
            raise ValueError(f"freq_units must be positive, got {self.freq_units}")
        if self.time_units <= 0:
            raise ValueError(f"time_units must be positive, got {self.time_units}")
        if self.mu_max < 0:
            raise ValueError(f"mu_max must be >= 0, got {self.mu_max}")
        if not self.numerologies:
            raise ValueError("at least one numerology is required")
        object.__setattr__(self, "numerologies", tuple(self.numerologies))
        seen: set[int] = set()
        for num in self.numerologies:
            if not isinstance(num, Numerology):
                raise TypeError(f"expected Numerology, got {type(num).__name__}")
            if num.mu > self.mu_max:
                raise ValueError(f"mu={num.mu} exceeds mu_max={self.mu_max}")
            if num.time_len != 2 ** (self.mu_max - num.mu):
                raise ValueError(
                    f"time_len {num.time_len} inconsistent with mu={num.mu},"
                    f" mu_max={self.mu_max}"
                )
            if num.mu in seen:
                raise ValueError(f"duplicate numerology mu={num.mu}")
            seen.add(num.mu)
        # Keep a canonical mu-ascending order; block ids depend on it.
        object.__setattr__(
            self, "numerologies", tuple(sorted(self.numerologies, key=lambda n: n.mu))
        )
        if self.base_freq_hz <= 0:
            raise ValueError(f"base_freq_hz must be positive, got {self.base_freq_hz}")
        if self.base_time_s is None:
            object.__setattr__(self, "base_time_s", 1e-3 / 2 ** self.mu_max)
        if self.base_time_s <= 0:
            raise ValueError(f"base_time_s must be positive, got {self.base_time_s}")

    @property
    def block_area(self) -> int:
        """Mini-slots covered by any block: constant across numerologies."""
        return 2 ** self.mu_max

    def numerology_for(self, mu: int) -> Numerology:
        for num in self.numerologies:
            if num.mu == mu:
                return num
        raise ValueError(f"no numerology with mu={mu} configured")


@dataclass(frozen=True)
class ResourceBlock:
    """One candidate rectangular placement of a numerology footprint.

    ``covered`` is the full rectangle [f0, f0+freq_width) x [t0, t0+time_len)
    and ``bitmask`` is the same set encoded over mini-slot indices, used for
    fast intersection tests.
    """

    id: int
    numerology_mu: int
    f0: int
    t0: int
    freq_width: int
    time_len: int
    end_time_s: float
    covered: frozenset[MiniSlot] = field(repr=False)
    bitmask: int = field(repr=False)

    @property
    def area(self) -> int:
        return self.freq_width * self.time_len

    def covers(self, slot: MiniSlot) -> bool:
        """True iff ``slot`` lies inside this block's rectangle."""
        return (
            self.f0 <= slot.f < self.f0 + self.freq_width
            and self.t0 <= slot.t < self.t0 + self.time_len
        )


class Grid:
    """Immutable enumeration of all block placements over a grid config.

    Blocks are ordered by (mu, f0, t0) and carry dense ids 0..num_blocks-1.
    Conflict sets (blocks sharing at least one mini-slot) are computed lazily
    per block and memoized; set ``precompute_conflicts`` on the config to pay
    the full cost up front.
    """

    def __init__(self, config: GridConfig) -> None:
        self.config = config
        self._blocks = tuple(self._enumerate(config))
        self._slot_blocks = self._index_slots()
        self._conflicts: dict[int, frozenset[int]] = {}
        if config.precompute_conflicts:
            for block in self._blocks:
                self.conflict_set(block.id)

    @staticmethod
    def _enumerate(config: GridConfig) -> Iterable[ResourceBlock]:
        F, T = config.freq_units, config.time_units
        next_id = 0
        for num in config.numerologies:
            w, l = num.freq_width, num.time_len
            if w > F or l > T:
                warnings.warn(
                    f"numerology mu={num.mu} (footprint {w}x{l}) yields no"
                    f" placements on a {F}x{T} grid",
                    stacklevel=3,
                )
                continue
            for f0 in range(F - w + 1):
                for t0 in range(T - l + 1):
                    covered = frozenset(
                        MiniSlot(f, t)
                        for f in range(f0, f0 + w)
                        for t in range(t0, t0 + l)
                    )
                    bitmask = 0
                    for f in range(f0, f0 + w):
                        for t in range(t0, t0 + l):
                            bitmask |= 1 << (f * T + t)
                    yield ResourceBlock(
                        id=next_id,
                        numerology_mu=num.mu,
                        f0=f0,
                        t0=t0,
                        freq_width=w,
                        time_len=l,
                        end_time_s=(t0 + l) * config.base_time_s,
                        covered=covered,
                        bitmask=bitmask,
                    )
                    next_id += 1

    def _index_slots(self) -> tuple[tuple[int, ...], ...]:
        per_slot: list[list[int]] = [[] for _ in range(self.num_slots)]
        for block in self._blocks:
            for slot in sorted(block.covered):
                per_slot[self.slot_index(*slot)].append(block.id)
        return tuple(tuple(ids) for ids in per_slot)

    @property
    def blocks(self) -> tuple[ResourceBlock, ...]:
        return self._blocks

    @property
    def num_blocks(self) -> int:
        return len(self._blocks)

    @property
    def num_slots(self) -> int:
        return self.config.freq_units * self.config.time_units

    def slot_index(self, f: int, t: int) -> int:
        """Row-major mini-slot index (time fastest): ``f * T + t``."""
        if not 0 <= f < self.config.freq_units:
            raise ValueError(f"frequency index {f} outside [0, {self.config.freq_units})")
        if not 0 <= t < self.config.time_units:
            raise ValueError(f"time index {t} outside [0, {self.config.time_units})")
        return f * self.config.time_units + t

    def block(self, block_id: int) -> ResourceBlock:
        if not 0 <= block_id < len(self._blocks):
            raise ValueError(f"unknown block id {block_id}")
        return self._blocks[block_id]

    def blocks_covering(self, f: int, t: int) -> tuple[int, ...]:
        """Ids of every block whose rectangle contains mini-slot (f, t)."""
        return self._slot_blocks[self.slot_index(f, t)]

    def covers(self, block_id: int, f: int, t: int) -> bool:
        """True iff the block covers the (validated) grid slot (f, t)."""
        slot = MiniSlot(f, t)
        self.slot_index(f, t)  # bounds check
        return self.block(block_id).covers(slot)

    def conflict_set(self, block_or_id: ResourceBlock | int) -> frozenset[int]:
        """All other block ids sharing at least one mini-slot with this one.

        Symmetric and irreflexive: a block never conflicts with itself.
        """
        block_id = block_or_id.id if isinstance(block_or_id, ResourceBlock) else block_or_id
        block = self.block(block_id)
        cached = self._conflicts.get(block_id)
        if cached is not None:
            return cached
        others: set[int] = set()
        for slot in block.covered:
            others.update(self._slot_blocks[self.slot_index(*slot)])
        others.discard(block_id)
        result = frozenset(others)
        self._conflicts[block_id] = result
        return result


def build_grid(config: GridConfig) -> Grid:
    """Builds the immutable grid, warning on numerologies with no placements.

    The block count is ``sum over mu of (F - 2**mu + 1) * (T - 2**(mu_max-mu) + 1)``
    with negative factors clamped to zero.
    """
    return Grid(config)
