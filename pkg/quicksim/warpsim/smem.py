"""
Shared-memory bank model and conflict accounting.

32 banks of 4-byte words; a word address maps to bank ``(address / 4) mod 32``.
32-bit per-lane accesses form one 32-lane phase, 128-bit accesses are split
into four phases of eight lanes. Lanes touching the same word broadcast.
"""

from dataclasses import dataclass
from enum import Enum, IntEnum

import numpy as np

from quicksim.errors import BoundsError
from quicksim.models import ConflictReport

BANK_COUNT = 32
BANK_WIDTH = 4
LANES = 32


class AccessKind(IntEnum):
    STORE = 0
    LOAD = 1


class ConflictMetric(str, Enum):
    # Σ over banks of (distinct words - 1)
    BANK_SUM = "bank_sum"
    # max over banks of distinct words, minus 1 (extra wavefronts)
    WAVEFRONT = "wavefront"


def bank_of(address):
    return (np.asarray(address) // BANK_WIDTH) % BANK_COUNT


def phase_lanes(width: int) -> int:
    """Lanes served per phase for a per-lane access of ``width`` bytes."""
    return {4: 32, 8: 16, 16: 8}[width]


class SharedMemoryModel:
    """Byte-addressed buffer standing in for one block's shared memory.

    Mutable by nature; each pipeline run owns its own instance.
    """

    bank_count = BANK_COUNT
    bank_width = BANK_WIDTH

    def __init__(self, size: int):
        if size <= 0 or size % BANK_WIDTH:
            raise BoundsError(f"shared memory size must be a positive multiple of 4, got {size}")
        self.size = size
        self.data = np.zeros(size, dtype=np.uint8)

    def _check(self, addresses: np.ndarray, width: int) -> None:
        if np.any(addresses < 0) or np.any(addresses + width > self.size):
            raise BoundsError(f"access of {width} bytes outside shared memory of {self.size} bytes")
        if np.any(addresses % BANK_WIDTH):
            raise BoundsError("shared-memory accesses must be 4-byte aligned")

    def store_half(self, addresses, values) -> None:
        """Stores rows of contiguous half values; ``values`` is (lanes, count)."""
        addresses = np.asarray(addresses, dtype=np.int64)
        values = np.ascontiguousarray(values, dtype=np.float16)
        width = values.shape[-1] * 2
        self._check(addresses, width)
        raw = values.view(np.uint8).reshape(len(addresses), width)
        offsets = addresses[:, None] + np.arange(width)
        self.data[offsets] = raw

    def load_half(self, addresses) -> np.ndarray:
        """Loads one half value per address (any shape)."""
        addresses = np.asarray(addresses, dtype=np.int64)
        if np.any(addresses < 0) or np.any(addresses + 2 > self.size):
            raise BoundsError(f"load outside shared memory of {self.size} bytes")
        lo = self.data[addresses].astype(np.uint16)
        hi = self.data[addresses + 1].astype(np.uint16)
        return (lo | (hi << 8)).view(np.float16)


@dataclass(frozen=True)
class BankTrace:
    """Column arrays of (phase, lane, address, width, kind), one row per access."""

    phase: np.ndarray
    lane: np.ndarray
    address: np.ndarray
    width: np.ndarray
    kind: np.ndarray

    def __len__(self) -> int:
        return len(self.phase)

    def count(self, kind: AccessKind) -> int:
        return int(np.count_nonzero(self.kind == kind))


class TraceRecorder:
    """Accumulates warp accesses phase by phase."""

    def __init__(self):
        self._chunks: list[tuple[np.ndarray, ...]] = []
        self._next_phase = 0

    def record(self, lanes, addresses, width: int, kind: AccessKind) -> None:
        """Records one warp instruction, splitting it into hardware phases."""
        lanes = np.asarray(lanes, dtype=np.int64)
        addresses = np.asarray(addresses, dtype=np.int64)
        per_phase = phase_lanes(width)
        phases = self._next_phase + lanes // per_phase
        self._next_phase = int(phases.max()) + 1 if len(phases) else self._next_phase
        self._chunks.append(
            (phases, lanes, addresses, np.full(len(lanes), width), np.full(len(lanes), int(kind)))
        )

    def record_phase(self, lanes, addresses, width: int, kind: AccessKind) -> None:
        """Records accesses that the hardware serves in a single phase."""
        lanes = np.asarray(lanes, dtype=np.int64)
        phase = np.full(len(lanes), self._next_phase)
        self._next_phase += 1
        self._chunks.append(
            (phase, lanes, np.asarray(addresses, dtype=np.int64), np.full(len(lanes), width), np.full(len(lanes), int(kind)))
        )

    def trace(self) -> BankTrace:
        if not self._chunks:
            columns = [np.zeros(0, dtype=np.int64) for _ in range(5)]
        else:
            columns = [np.concatenate(parts).astype(np.int64) for parts in zip(*self._chunks)]
        return BankTrace(*columns)


def conflict_count(trace: BankTrace, metric: ConflictMetric | str = ConflictMetric.BANK_SUM) -> ConflictReport:
    """Bank conflicts per access kind.

    Every access is expanded into the 4-byte words it covers; within a phase,
    repeated words broadcast, and each bank holding ``d`` distinct words
    costs ``d - 1`` (bank_sum) or the phase costs ``max d - 1`` (wavefront).
    """
    metric = ConflictMetric(metric)
    if not len(trace):
        return ConflictReport(metric=metric.value)

    granules = trace.width // BANK_WIDTH
    phase = np.repeat(trace.phase, granules)
    starts = np.repeat(trace.address, granules)
    offsets = np.arange(len(phase)) - np.repeat(np.cumsum(granules) - granules, granules)
    address = starts + offsets * BANK_WIDTH
    word = address // BANK_WIDTH

    # distinct (phase, word) pairs, then distinct words per (phase, bank)
    pairs = np.unique(np.stack([phase, word], axis=1), axis=0)
    bank_keys = pairs[:, 0] * BANK_COUNT + bank_of(pairs[:, 1] * BANK_WIDTH)
    keys, per_bank = np.unique(bank_keys, return_counts=True)
    key_phase = keys // BANK_COUNT

    phase_ids, first = np.unique(trace.phase, return_index=True)
    kind_of_phase = np.zeros(int(phase_ids.max()) + 1, dtype=np.int64)
    kind_of_phase[phase_ids] = trace.kind[first]

    if metric is ConflictMetric.BANK_SUM:
        cost_phase, cost = key_phase, per_bank - 1
    else:
        cost_phase, starts_at = np.unique(key_phase, return_index=True)
        cost = np.maximum.reduceat(per_bank, starts_at) - 1

    conflicts = np.bincount(kind_of_phase[cost_phase], weights=cost, minlength=2)
    phases = np.bincount(kind_of_phase[phase_ids], minlength=2)

    return ConflictReport(
        metric=metric.value,
        writeback_store_conflicts=int(conflicts[AccessKind.STORE]),
        ldmatrix_load_conflicts=int(conflicts[AccessKind.LOAD]),
        writeback_store_phases=int(phases[AccessKind.STORE]),
        ldmatrix_load_phases=int(phases[AccessKind.LOAD]),
    )
