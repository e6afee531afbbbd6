"""
Per-lane register fragments and the warp-level ``ldmatrix`` / ``mma`` emulation.
"""

from dataclasses import dataclass

import numpy as np

from quicksim.errors import BoundsError, FragmentContractError, LayoutError, ShapeError
from quicksim.layout import LANES, fragment_table
from quicksim.warpsim.smem import AccessKind, BankTrace, SharedMemoryModel, TraceRecorder

MMA_SHAPE = (16, 8, 16)
_SLOTS = {"a": 8, "b": 4, "c": 4}
_DTYPES = {"a": np.float16, "b": np.float16, "c": np.float32}


@dataclass(frozen=True)
class Fragment:
    """Register contents of one operand across the warp: ``values[lane, slot]``."""

    operand: str
    values: np.ndarray
    populated: np.ndarray

    def __post_init__(self):
        shape = (LANES, _SLOTS[self.operand])
        values = np.asarray(self.values, dtype=_DTYPES[self.operand])
        populated = np.asarray(self.populated, dtype=bool)
        if values.shape != shape or populated.shape != shape:
            raise ShapeError(f"{self.operand} fragment must be {shape}, got {values.shape}")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "populated", populated)

    @classmethod
    def full(cls, operand: str, values) -> "Fragment":
        return cls(operand, values, np.ones((LANES, _SLOTS[operand]), dtype=bool))

    @classmethod
    def from_tile(cls, operand: str, tile: np.ndarray) -> "Fragment":
        """Gathers a fragment straight from a tile through the operand's map."""
        rows, cols = fragment_table(operand)
        return cls.full(operand, np.asarray(tile)[rows, cols])

    def to_tile(self) -> np.ndarray:
        """Scatters the lanes back into the operand tile; requires every slot populated."""
        if not self.populated.all():
            lane, slot = np.argwhere(~self.populated)[0]
            raise FragmentContractError(f"{self.operand} fragment slot {slot} of lane {lane} is not populated")
        rows, cols = fragment_table(self.operand)
        tile = np.zeros((rows.max() + 1, cols.max() + 1), dtype=self.values.dtype)
        tile[rows, cols] = self.values
        return tile

    def equals(self, other: "Fragment") -> bool:
        """Bit-identical register contents."""
        return bool(
            self.operand == other.operand
            and np.array_equal(self.populated, other.populated)
            and self.values.tobytes() == other.values.tobytes()
        )


@dataclass(frozen=True)
class FragmentSet:
    """Operands of one 16×8×16 mma step: A (8/lane), B (4/lane), C/D (4/lane)."""

    a: Fragment
    b: Fragment
    c: Fragment

    def __post_init__(self):
        for name in ("a", "b", "c"):
            if getattr(self, name).operand != name:
                raise FragmentContractError(f"operand {name} holds a {getattr(self, name).operand} fragment")

    def step(self) -> Fragment:
        """Issues the mma; returns the D fragment."""
        return emulate_mma_16x8x16(self.a, self.b, self.c)


def emulate_mma_16x8x16(a: Fragment, b: Fragment, c: Fragment) -> Fragment:
    """``d = c + a · b`` at warp level.

    Products of half inputs are exact in single precision; accumulation is
    single precision in ascending k.
    """
    a_tile = a.to_tile().astype(np.float32)
    b_tile = b.to_tile().astype(np.float32)
    acc = c.to_tile().astype(np.float32)
    for k in range(MMA_SHAPE[2]):
        acc = acc + a_tile[:, k, None] * b_tile[None, k, :]
    return Fragment.from_tile("c", acc)


def ldmatrix_addresses(row_addresses, blocks: int) -> np.ndarray:
    rows = np.asarray(row_addresses, dtype=np.int64)
    if rows.shape != (8 * blocks,):
        raise ShapeError(f"expected {8 * blocks} row addresses for {blocks} block(s), got {rows.shape}")
    if blocks not in (1, 2, 4):
        raise ShapeError(f"ldmatrix loads 1, 2 or 4 matrices, got {blocks}")
    return rows.reshape(blocks, 8)


def emulate_ldmatrix(
    shared: SharedMemoryModel,
    row_addresses,
    blocks: int,
    trans: bool = False,
    recorder: TraceRecorder | None = None,
    alignment: int = 16,
) -> tuple[np.ndarray, BankTrace]:
    """Loads ``blocks`` 8×8 b16 matrices into per-lane registers.

    ``row_addresses`` lists eight 16-byte row addresses per block. Without
    ``trans`` lane l receives row l/4, columns 2·(l mod 4) and +1 of each
    block; with ``trans`` it receives column l/4, rows 2·(l mod 4) and +1.
    Row addresses must be multiples of ``alignment`` bytes; hardware needs 16,
    model layouts with a padded stride relax it to their stride alignment.
    Returns ``(values[32, 2·blocks], trace)``; each block is one phase.
    """
    rows = ldmatrix_addresses(row_addresses, blocks)
    if np.any(rows < 0) or np.any(rows + 16 > shared.size):
        raise BoundsError(f"ldmatrix row outside shared memory of {shared.size} bytes")
    if alignment not in (4, 8, 16):
        raise ShapeError(f"ldmatrix row alignment must be 4, 8 or 16 bytes, got {alignment}")
    if np.any(rows % alignment):
        raise LayoutError(f"ldmatrix row addresses must be {alignment}-byte aligned")

    lanes = np.arange(LANES)
    quad, pair = lanes // 4, 2 * (lanes % 4)
    local = TraceRecorder()
    recorders = [local] if recorder is None else [local, recorder]
    values = np.empty((LANES, 2 * blocks), dtype=np.float16)
    for block in range(blocks):
        for half in range(2):
            if trans:
                address = rows[block][pair + half] + 2 * quad
            else:
                address = rows[block][quad] + 2 * (pair + half)
            values[:, 2 * block + half] = shared.load_half(address)
        # The phase reads the block's eight rows; attribute granule l mod 4 of row l/4 to lane l.
        for target in recorders:
            target.record_phase(lanes, rows[block][quad] + 4 * (lanes % 4), 4, AccessKind.LOAD)
    return values, local.trace()
