"""
Tensor-core fragment coordinate maps and the offline QUICK weight permutations.

The B operand of ``mma.m16n8k16`` is K×N. Lane l holds four half values:
slots 0,1 at k = 2·(l mod 4) + {0, 1}, n = l / 4, and slots 2,3 at k + 8.
One QUICK word feeds two consecutive K-tiles of a lane, so after the
dequantization kernel's extraction order is undone the word's eight
values land directly in slot order [tile 2p slots 0-3, tile 2p+1 slots 0-3].
"""

from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from quicksim.errors import BoundsError, LayoutError, ShapeError
from quicksim.logger import logger, tracer
from quicksim.models.schedule import MMA_K, MMA_N, KernelSchedule
from quicksim.quantcore import NIBBLES_PER_WORD, Layout, PackedWeights, QuantParams, pack_codes, unpack_words

LANES = 32
DEQUANT_ORDER = (0, 2, 4, 6, 1, 3, 5, 7)


class FragmentCoord(NamedTuple):
    """One B-operand register slot and the (k, n) tile cell it holds."""

    lane: int
    slot: int
    k: int
    n: int


class OperandCoord(NamedTuple):
    """One A or C/D register slot and the (row, col) tile cell it holds."""

    lane: int
    slot: int
    row: int
    col: int


@dataclass(frozen=True)
class Permutation:
    """A bijection on [0, size) in gather form: ``apply(x)[j] == x[forward[j]]``."""

    forward: tuple[int, ...]

    def __post_init__(self):
        forward = tuple(int(i) for i in self.forward)
        if sorted(forward) != list(range(len(forward))):
            raise ValueError("permutation indices must be a bijection on [0, size)")
        object.__setattr__(self, "forward", forward)

    @property
    def size(self) -> int:
        return len(self.forward)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.forward, dtype=np.int64)

    def apply(self, values):
        return np.asarray(values)[..., self.as_array()]

    def inverse(self) -> "Permutation":
        return Permutation(tuple(np.argsort(self.as_array())))

    def compose(self, other: "Permutation") -> "Permutation":
        """The permutation equal to applying ``self`` and then ``other``."""
        return Permutation(tuple(self.as_array()[other.as_array()]))

    def to_text(self) -> str:
        lines = [f"size={self.size}"] + [str(i) for i in self.forward]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "Permutation":
        header, *body = text.strip().splitlines()
        size = int(header.removeprefix("size="))
        if len(body) != size:
            raise ValueError(f"permutation text declares {size} entries, found {len(body)}")
        return cls(tuple(int(line) for line in body))


def _check_lane(lane: int) -> None:
    if not 0 <= lane < LANES:
        raise BoundsError(f"lane must be in [0, 32), got {lane}")


def ldmatrix_map_8x8(lane: int) -> tuple[tuple[int, int], tuple[int, int]]:
    """Destination cells of one lane for a single 8×8 b16 ``ldmatrix`` load."""
    _check_lane(lane)
    row, col = lane // 4, 2 * (lane % 4)
    return (row, col), (row, col + 1)


def mma_b_map_16x8(lane: int) -> list[FragmentCoord]:
    """The two 8×8 ``ldmatrix`` blocks stacked along K, as the B fragment."""
    _check_lane(lane)
    k0, n = 2 * (lane % 4), lane // 4
    return [FragmentCoord(lane, slot, k0 + (slot % 2) + 8 * (slot // 2), n) for slot in range(4)]


def mma_a_map_16x16(lane: int) -> list[OperandCoord]:
    _check_lane(lane)
    row, col = lane // 4, 2 * (lane % 4)
    return [
        OperandCoord(lane, slot, row + 8 * ((slot // 2) % 2), col + (slot % 2) + 8 * (slot // 4))
        for slot in range(8)
    ]


def mma_c_map_16x8(lane: int) -> list[OperandCoord]:
    _check_lane(lane)
    row, col = lane // 4, 2 * (lane % 4)
    return [OperandCoord(lane, slot, row + 8 * (slot // 2), col + (slot % 2)) for slot in range(4)]


@lru_cache(maxsize=None)
def fragment_table(operand: str) -> tuple[np.ndarray, np.ndarray]:
    """(rows, cols) index arrays of shape (32, slots) for operand ``a``, ``b`` or ``c``.

    For ``b`` rows are k and cols are n.
    """
    maps = {"a": mma_a_map_16x16, "b": mma_b_map_16x8, "c": mma_c_map_16x8}
    coords = [maps[operand](lane) for lane in range(LANES)]
    rows = np.array([[c[2] for c in lane] for lane in coords], dtype=np.int64)
    cols = np.array([[c[3] for c in lane] for lane in coords], dtype=np.int64)
    rows.setflags(write=False)
    cols.setflags(write=False)
    return rows, cols


def dequant_order_permutation() -> Permutation:
    """Nibble extraction order of the parallel i4→f16 dequantization kernel.

    Even nibbles first, then odd ones: output slot j holds nibble forward[j].
    """
    return Permutation(DEQUANT_ORDER)


def dequant_nibble_permutation() -> Permutation:
    """Per-word nibble placement that the dequantizer undoes (σ_deq inverse)."""
    return dequant_order_permutation().inverse()


def check_quick_shape(shape: tuple[int, int], schedule: KernelSchedule) -> None:
    rows_k, cols_n = shape
    if rows_k % schedule.k_rows_per_load:
        raise ShapeError(
            f"rows_k={rows_k} must be a multiple of {schedule.k_rows_per_load} "
            f"({schedule.load_vector_words} word(s) of two K-tiles per lane load)"
        )
    if cols_n % MMA_N:
        raise ShapeError(f"cols_n={cols_n} must be a multiple of {MMA_N}")


def quick_word_index(shape: tuple[int, int], schedule: KernelSchedule, n_block, k_pair, lane):
    """Stream position of the word lane ``lane`` loads for (n_block, k_pair)."""
    rows_k, _ = shape
    vector = schedule.load_vector_words
    pairs = rows_k // schedule.k_rows_per_word
    chunk, within = np.divmod(k_pair, vector)
    return n_block * pairs * LANES + chunk * LANES * vector + np.asarray(lane) * vector + within


def _index_dtype(size: int):
    return np.int32 if size < 2**31 else np.int64


@lru_cache(maxsize=4)
def _fragment_gather(shape: tuple[int, int], schedule: KernelSchedule) -> np.ndarray:
    rows_k, cols_n = shape
    dtype = _index_dtype(rows_k * cols_n)
    pairs = rows_k // schedule.k_rows_per_word
    b_rows, b_cols = fragment_table("b")

    # Open grids over (n_block, k_pair, lane); only the results are full size.
    blocks, k_pairs, lanes = np.ogrid[: cols_n // MMA_N, :pairs, :LANES]
    blocks, k_pairs, lanes = blocks.astype(dtype), k_pairs.astype(dtype), lanes.astype(dtype)
    words = quick_word_index(shape, schedule, blocks, k_pairs, lanes)

    # Slot order inside a word: tile 2p slots 0-3, then tile 2p+1 slots 0-3.
    tile = np.repeat([0, 1], 4)
    slot = np.tile(np.arange(4), 2)
    k_offset = (tile * MMA_K + b_rows[:, slot]).astype(dtype)
    n_offset = b_cols[:, slot].astype(dtype)
    k = k_pairs[..., None] * schedule.k_rows_per_word + k_offset[lanes]
    n = blocks[..., None] * MMA_N + n_offset[lanes]

    # Source position of each code in the natural nibble stream.
    natural = ((n // NIBBLES_PER_WORD) * rows_k + k) * NIBBLES_PER_WORD + n % NIBBLES_PER_WORD
    del k, n
    gather = np.empty(rows_k * cols_n, dtype=dtype)
    positions = words[..., None] * NIBBLES_PER_WORD + np.arange(NIBBLES_PER_WORD, dtype=dtype)
    gather[positions.reshape(-1)] = natural.reshape(-1)
    gather.setflags(write=False)
    return gather


def fragment_gather_permutation(shape: tuple[int, int], schedule: KernelSchedule) -> Permutation:
    """Nibble-level gather placing each lane's fragment codes into its words in slot order."""
    check_quick_shape(shape, schedule)
    return Permutation(tuple(_fragment_gather(tuple(shape), schedule)))


@lru_cache(maxsize=4)
def _quick_gather(shape: tuple[int, int], schedule: KernelSchedule) -> np.ndarray:
    fragment = _fragment_gather(shape, schedule).reshape(-1, NIBBLES_PER_WORD)
    combined = fragment[:, dequant_nibble_permutation().as_array()].reshape(-1)
    combined.setflags(write=False)
    return combined


def quick_permutation(shape: tuple[int, int], schedule: KernelSchedule) -> Permutation:
    """Fragment gather followed by the per-word σ_deq inverse."""
    check_quick_shape(shape, schedule)
    return Permutation(tuple(_quick_gather(tuple(shape), schedule)))


def interleave_quick(packed: PackedWeights, schedule: KernelSchedule | None = None) -> PackedWeights:
    """Offline reorder of natural packed weights into the QUICK stream."""
    schedule = schedule or KernelSchedule()
    if packed.layout != Layout.NATURAL:
        raise LayoutError("weights are already QUICK-interleaved")
    check_quick_shape(packed.shape, schedule)
    with tracer.start_as_current_span("layout.interleave_quick"):
        nibbles = unpack_words(packed.words).reshape(-1)
        quick = nibbles[_quick_gather(packed.shape, schedule)]
        logger.debug(f"Interleaved {packed.words.size} words of shape {packed.shape}")
        return PackedWeights(packed.shape, Layout.QUICK, pack_codes(quick.reshape(-1, NIBBLES_PER_WORD)))


def deinterleave_quick(packed: PackedWeights, schedule: KernelSchedule | None = None) -> PackedWeights:
    """Exact inverse of :func:`interleave_quick`."""
    schedule = schedule or KernelSchedule()
    if packed.layout != Layout.QUICK:
        raise LayoutError("weights are in natural layout already")
    check_quick_shape(packed.shape, schedule)
    with tracer.start_as_current_span("layout.deinterleave_quick"):
        nibbles = unpack_words(packed.words).reshape(-1)
        natural = np.empty_like(nibbles)
        natural[_quick_gather(packed.shape, schedule)] = nibbles
        return PackedWeights(packed.shape, Layout.NATURAL, pack_codes(natural.reshape(-1, NIBBLES_PER_WORD)))


def reorder_quant_params(params: QuantParams, cols_n: int) -> QuantParams:
    """Scales and zeros stay in natural column order; kernels index them by fragment n.

    Kept as an explicit step so a packed-zero layout can replace it.
    """
    if params.scales.shape[1] != cols_n:
        raise ShapeError(f"params cover {params.scales.shape[1]} columns, expected {cols_n}")
    return params
