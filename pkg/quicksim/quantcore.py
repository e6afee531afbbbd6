"""
Group-wise 4-bit weight-only quantization.

Weights are K×N (K is the reduction dimension). Each group of ``group_size``
consecutive K-rows shares one (scale, zero) pair per column, and
dequantization is ``(code - zero) * scale`` rounded to half precision.

Natural packing is column-block-major: the word holding row k of columns
8b..8b+7 sits at index ``b * K + k`` and nibble i is column offset i.
Any kernel-facing reordering lives in :mod:`quicksim.layout`.
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from quicksim.errors import DomainError, LayoutError, ShapeError

NIBBLES_PER_WORD = 8
CODE_MAX = 15
MIN_SCALE = 2.0**-10
CONSTANT_GROUP_ZERO = 8
DEFAULT_GROUP_SIZE = 128

_SHIFTS = (4 * np.arange(NIBBLES_PER_WORD)).astype(np.uint32)


class Layout(str, Enum):
    NATURAL = "natural"
    QUICK = "quick"


def check_weight_shape(rows_k: int, cols_n: int) -> None:
    if rows_k <= 0 or rows_k % 16:
        raise ShapeError(f"rows_k must be a positive multiple of 16, got {rows_k}")
    if cols_n <= 0 or cols_n % 8:
        raise ShapeError(f"cols_n must be a positive multiple of 8, got {cols_n}")


@dataclass(frozen=True)
class WeightMatrix:
    """Dense K×N real weights, row-major."""

    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values)
        if values.ndim != 2:
            raise ShapeError(f"weights must be 2-D, got shape {values.shape}")
        check_weight_shape(*values.shape)
        object.__setattr__(self, "values", values)

    @property
    def rows_k(self) -> int:
        return self.values.shape[0]

    @property
    def cols_n(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class QuantParams:
    """Per-(group, column) scales (half precision) and integer zero points."""

    group_size: int
    scales: np.ndarray
    zeros: np.ndarray

    def __post_init__(self):
        scales = np.asarray(self.scales, dtype=np.float16)
        zeros = np.asarray(self.zeros, dtype=np.uint8)
        if self.group_size < 16:
            raise ShapeError(f"group_size must be at least 16, got {self.group_size}")
        if scales.ndim != 2 or scales.shape != zeros.shape:
            raise ShapeError(f"scales {scales.shape} and zeros {zeros.shape} must be matching 2-D arrays")
        if not np.all(scales > 0):
            raise DomainError("every scale must be positive")
        if np.any(zeros > CODE_MAX):
            raise DomainError("zero points must lie in [0, 15]")
        object.__setattr__(self, "scales", scales)
        object.__setattr__(self, "zeros", zeros)

    @property
    def groups(self) -> int:
        return self.scales.shape[0]

    def lookup(self, k, n):
        """Scale and zero for weight row(s) ``k`` and column(s) ``n``."""
        g = np.asarray(k) // self.group_size
        return self.scales[g, n], self.zeros[g, n]


@dataclass(frozen=True)
class QuantizedMatrix:
    codes: np.ndarray
    params: QuantParams

    def __post_init__(self):
        codes = np.asarray(self.codes)
        if codes.ndim != 2:
            raise ShapeError(f"codes must be 2-D, got shape {codes.shape}")
        check_weight_shape(*codes.shape)
        if np.any(codes < 0) or np.any(codes > CODE_MAX):
            raise DomainError("codes must lie in [0, 15]")
        codes = codes.astype(np.uint8)
        rows_k, cols_n = codes.shape
        if rows_k % self.params.group_size:
            raise ShapeError(f"group_size {self.params.group_size} does not divide rows_k {rows_k}")
        if self.params.scales.shape != (rows_k // self.params.group_size, cols_n):
            raise ShapeError(
                f"params cover {self.params.scales.shape} groups×columns, "
                f"expected {(rows_k // self.params.group_size, cols_n)}"
            )
        object.__setattr__(self, "codes", codes)

    @property
    def shape(self) -> tuple[int, int]:
        return self.codes.shape


@dataclass(frozen=True)
class PackedWeights:
    """32-bit words of eight 4-bit codes (nibble 0 least significant)."""

    shape: tuple[int, int]
    layout: Layout
    words: np.ndarray

    def __post_init__(self):
        words = np.asarray(self.words, dtype=np.uint32)
        rows_k, cols_n = self.shape
        check_weight_shape(rows_k, cols_n)
        if words.shape != (rows_k * cols_n // NIBBLES_PER_WORD,):
            raise ShapeError(f"expected {rows_k * cols_n // NIBBLES_PER_WORD} words for {self.shape}, got {words.shape}")
        object.__setattr__(self, "shape", (int(rows_k), int(cols_n)))
        object.__setattr__(self, "layout", Layout(self.layout))
        object.__setattr__(self, "words", words)

    def require(self, layout: Layout) -> None:
        if self.layout != layout:
            raise LayoutError(f"expected {Layout(layout).value} layout, got {self.layout.value}")


def _round_up_half(values: np.ndarray) -> np.ndarray:
    half = values.astype(np.float16)
    low = half.astype(np.float64) < values
    half[low] = np.nextafter(half[low], np.float16(np.inf))
    return half


def quantize(weights: WeightMatrix, group_size: int = DEFAULT_GROUP_SIZE) -> QuantizedMatrix:
    """Asymmetric min/max quantization to codes in [0, 15].

    The group range is widened to include zero, so with lo = min(min, 0)
    and hi = max(max, 0):
    scale = (hi - lo) / 15 rounded up to half precision,
    zero = clamp(round(-lo / scale), 0, 15),
    code = clamp(round(w / scale) + zero, 0, 15).
    A constant group c gets zero 8 and scale max(|c| / 7, 2**-10).
    """
    values = np.asarray(weights.values, dtype=np.float64)
    rows_k, cols_n = values.shape
    if group_size < 16 or rows_k % group_size:
        raise ShapeError(f"group_size {group_size} must be >= 16 and divide rows_k {rows_k}")
    if not np.all(np.isfinite(values)):
        raise DomainError("weights must be finite")

    grouped = values.reshape(rows_k // group_size, group_size, cols_n)
    low = grouped.min(axis=1)
    high = grouped.max(axis=1)
    constant = high == low
    low = np.minimum(low, 0.0)
    high = np.maximum(high, 0.0)

    span_scale = (high - low) / CODE_MAX
    constant_scale = np.maximum(np.abs(grouped[:, 0, :]) / 7, MIN_SCALE)
    scales = _round_up_half(np.where(constant, constant_scale, np.maximum(span_scale, MIN_SCALE)))
    if not np.all(np.isfinite(scales)):
        raise DomainError("group range exceeds half precision")
    scale64 = scales.astype(np.float64)

    zeros = np.clip(np.round(-low / scale64), 0, CODE_MAX)
    zeros = np.where(constant, CONSTANT_GROUP_ZERO, zeros).astype(np.uint8)

    codes = np.round(grouped / scale64[:, None, :]) + zeros[:, None, :]
    codes = np.clip(codes, 0, CODE_MAX).astype(np.uint8).reshape(rows_k, cols_n)
    return QuantizedMatrix(codes=codes, params=QuantParams(group_size, scales, zeros))


def dequantize_codes(codes: np.ndarray, scales, zeros) -> np.ndarray:
    """Elementwise ``(code - zero) * scale`` with one rounding to half precision.

    The product of a small integer and a half value is exact in single
    precision, so the only rounding is the final conversion.
    """
    diff = np.asarray(codes, dtype=np.float32) - np.asarray(zeros, dtype=np.float32)
    return (diff * np.asarray(scales, dtype=np.float32)).astype(np.float16)


def dequantize_reference(quantized: QuantizedMatrix) -> np.ndarray:
    """Sequential reference dequantization; returns K×N half precision."""
    params = quantized.params
    expand = np.repeat(np.arange(params.groups), params.group_size)
    return dequantize_codes(quantized.codes, params.scales[expand], params.zeros[expand])


def quantization_error(weights: WeightMatrix, quantized: QuantizedMatrix) -> tuple[float, float]:
    """Max and mean absolute reconstruction error."""
    error = np.abs(np.asarray(weights.values, dtype=np.float64) - dequantize_reference(quantized).astype(np.float64))
    return float(error.max()), float(error.mean())


def pack_codes(codes: np.ndarray) -> np.ndarray:
    """Packs (..., 8) nibble groups into uint32 words."""
    return np.bitwise_or.reduce(np.asarray(codes, dtype=np.uint32) << _SHIFTS, axis=-1).astype(np.uint32)


def unpack_words(words: np.ndarray) -> np.ndarray:
    """Splits uint32 words into (..., 8) nibbles, nibble 0 first."""
    return ((np.asarray(words, dtype=np.uint32)[..., None] >> _SHIFTS) & 0xF).astype(np.uint8)


def pack_natural(quantized: QuantizedMatrix) -> PackedWeights:
    rows_k, cols_n = quantized.shape
    blocks = quantized.codes.reshape(rows_k, cols_n // NIBBLES_PER_WORD, NIBBLES_PER_WORD).transpose(1, 0, 2)
    return PackedWeights(shape=(rows_k, cols_n), layout=Layout.NATURAL, words=pack_codes(blocks).reshape(-1))


def unpack_natural(packed: PackedWeights) -> np.ndarray:
    """Inverse of :func:`pack_natural`; returns the K×N code matrix."""
    if packed.layout != Layout.NATURAL:
        raise LayoutError("packed weights are QUICK-interleaved; deinterleave before unpacking")
    rows_k, cols_n = packed.shape
    nibbles = unpack_words(packed.words).reshape(cols_n // NIBBLES_PER_WORD, rows_k, NIBBLES_PER_WORD)
    return nibbles.transpose(1, 0, 2).reshape(rows_k, cols_n)


def dequant_words_parallel(words, scales, zeros, order=None) -> np.ndarray:
    """Vectorized emulation of the parallel i4→f16 dequantization kernel.

    Output slot j of each word holds ``(nibble[order[j]] - zero_j) * scale_j``.
    ``scales``/``zeros`` broadcast against (..., 8) and are given in output
    (extraction) order.
    """
    if order is None:
        from quicksim.layout import dequant_order_permutation

        order = dequant_order_permutation().forward
    nibbles = unpack_words(words)[..., np.asarray(order)]
    return dequantize_codes(nibbles, scales, zeros)


def dequant_word_parallel(word: int, scale, zero) -> np.ndarray:
    """Dequantizes one 32-bit word into 8 half values in extraction order.

    ``scale`` and ``zero`` are scalars or eight per-slot values.
    """
    if not 0 <= int(word) < 2**32:
        raise DomainError(f"word must fit in 32 bits, got {int(word)}")
    scales = np.broadcast_to(np.asarray(scale, dtype=np.float32), (NIBBLES_PER_WORD,))
    zeros = np.broadcast_to(np.asarray(zero), (NIBBLES_PER_WORD,))
    if np.any(scales <= 0):
        raise DomainError("scale must be positive")
    if np.any(zeros < 0) or np.any(zeros > CODE_MAX):
        raise DomainError("zero point must lie in [0, 15]")
    return dequant_words_parallel(np.uint32(word), scales, zeros)
