import numpy as np
import pytest

from quicksim.errors import DomainError, LayoutError, ShapeError
from quicksim.layout import dequant_order_permutation
from quicksim.quantcore import (
    MIN_SCALE,
    Layout,
    PackedWeights,
    QuantizedMatrix,
    QuantParams,
    WeightMatrix,
    dequant_word_parallel,
    dequant_words_parallel,
    dequantize_codes,
    dequantize_reference,
    pack_natural,
    quantization_error,
    quantize,
    unpack_natural,
    unpack_words,
)


def _params(group_size, scales, zeros):
    return QuantParams(group_size, np.atleast_2d(scales), np.atleast_2d(zeros))


def test_constant_zero_group_dequantizes_to_zero():
    quantized = quantize(WeightMatrix(np.zeros((16, 8))), group_size=16)
    assert np.all(quantized.codes == quantized.params.zeros[0])
    assert np.all(quantized.params.zeros == 8)
    assert np.all(quantized.params.scales == np.float16(MIN_SCALE))
    assert np.all(dequantize_reference(quantized) == 0.0)


def test_evenly_spaced_group_round_trips_exactly():
    column = -1.0 + 0.125 * np.arange(16)
    weights = WeightMatrix(np.tile(column[:, None], (1, 8)))
    quantized = quantize(weights, group_size=16)

    assert np.all(quantized.params.scales == np.float16(0.125))
    assert np.all(quantized.params.zeros == 8)
    assert np.array_equal(quantized.codes[:, 0], np.arange(16))
    assert np.array_equal(dequantize_reference(quantized).astype(np.float64), weights.values)


def test_constant_nonzero_group_is_representable():
    quantized = quantize(WeightMatrix(np.full((32, 8), 0.875)), group_size=16)
    assert np.all(quantized.params.scales == np.float16(0.125))
    assert quantization_error(WeightMatrix(np.full((32, 8), 0.875)), quantized) == (0.0, 0.0)


@pytest.mark.parametrize("seed", range(10))
def test_error_bound_half_scale(random_weights, seed):
    weights = random_weights(128, 80, seed)
    quantized = quantize(weights, group_size=128)
    restored = dequantize_reference(quantized)
    scale = np.repeat(quantized.params.scales.astype(np.float64), 128, axis=0)

    # scale/2 is exact before the final rounding to half precision.
    slack = np.spacing(np.abs(restored)).astype(np.float64) / 2
    assert np.all(np.abs(weights.values - restored.astype(np.float64)) <= scale / 2 + slack)


def test_codes_stay_in_range(random_weights):
    quantized = quantize(random_weights(64, 16, seed=3), group_size=32)
    assert quantized.codes.dtype == np.uint8
    assert quantized.codes.max() <= 15


def test_quantize_rejects_bad_group_size(random_weights):
    with pytest.raises(ShapeError):
        quantize(random_weights(48, 8), group_size=32)
    with pytest.raises(ShapeError):
        quantize(random_weights(32, 8), group_size=8)


def test_quantize_rejects_non_finite():
    values = np.zeros((16, 8))
    values[3, 4] = np.inf
    with pytest.raises(DomainError):
        quantize(WeightMatrix(values), group_size=16)


@pytest.mark.parametrize("shape", [(15, 8), (16, 12), (0, 8)])
def test_weight_matrix_shape_invariants(shape):
    with pytest.raises(ShapeError):
        WeightMatrix(np.zeros(shape))


@pytest.mark.parametrize(
    "code, zero, scale, expected",
    [(3, 3, 0.7, 0.0), (5, 3, 0.5, 1.0), (15, 0, 1.0, 15.0)],
)
def test_dequantize_examples(code, zero, scale, expected):
    assert dequantize_codes(np.array([code]), scale, zero)[0] == np.float16(expected)


def test_dequantize_rounds_to_half():
    value = dequantize_codes(np.array([1]), np.float16(0.1), 0)
    assert value.dtype == np.float16
    assert value[0] == np.float16(0.1)


def test_quant_params_invariants():
    with pytest.raises(DomainError):
        _params(16, [0.0], [1])
    with pytest.raises(DomainError):
        _params(16, [1.0], [16])
    with pytest.raises(ShapeError):
        _params(8, [1.0], [1])


def test_pack_natural_word_value():
    codes = np.zeros((16, 8), dtype=np.uint8)
    codes[0] = [1, 2, 3, 4, 5, 6, 7, 8]
    quantized = QuantizedMatrix(codes, _params(16, np.ones((1, 8)), np.zeros((1, 8))))
    packed = pack_natural(quantized)

    assert packed.layout == Layout.NATURAL
    assert packed.words[0] == 0x87654321
    assert np.all(packed.words[1:] == 0)


def test_natural_word_index_is_column_block_major(random_codes):
    codes = random_codes(32, 24, seed=5)
    quantized = QuantizedMatrix(codes, _params(32, np.ones((1, 24)), np.zeros((1, 24))))
    words = pack_natural(quantized).words
    for k, n in [(0, 0), (7, 9), (31, 23), (16, 15)]:
        assert unpack_words(words[(n // 8) * 32 + k])[n % 8] == codes[k, n]


@pytest.mark.parametrize("shape", [(16, 8), (32, 64), (128, 256)])
def test_pack_unpack_round_trip(random_codes, shape):
    codes = random_codes(*shape, seed=sum(shape))
    params = _params(16, np.ones((shape[0] // 16, shape[1])), np.zeros((shape[0] // 16, shape[1])))
    assert np.array_equal(unpack_natural(pack_natural(QuantizedMatrix(codes, params))), codes)


def test_unpack_rejects_quick_layout():
    packed = PackedWeights((32, 8), Layout.QUICK, np.zeros(32, dtype=np.uint32))
    with pytest.raises(LayoutError):
        unpack_natural(packed)


def test_dequant_word_parallel_extraction_order():
    result = dequant_word_parallel(0x87654321, 1.0, 0)
    assert result.tolist() == [1, 3, 5, 7, 2, 4, 6, 8]


def test_dequant_word_parallel_zero_point_word():
    assert np.all(dequant_word_parallel(0x33333333, 0.25, 3) == 0.0)


def test_dequant_word_parallel_per_slot_params():
    scales = [1.0, 1.0, 1.0, 1.0, 2.0, 2.0, 2.0, 2.0]
    result = dequant_word_parallel(0x11111111, scales, 0)
    assert result.tolist() == [1, 1, 1, 1, 2, 2, 2, 2]


def test_dequant_word_parallel_rejects_bad_params():
    with pytest.raises(DomainError):
        dequant_word_parallel(0, 0.0, 0)
    with pytest.raises(DomainError):
        dequant_word_parallel(0, 1.0, 16)


def test_parallel_dequant_is_sigma_permutation_of_sequential():
    rng = np.random.default_rng(11)
    words = rng.integers(0, 2**32, size=100_000, dtype=np.uint64).astype(np.uint32)
    scales = rng.uniform(0.01, 1.0, size=(100_000, 1)).astype(np.float16)
    zeros = rng.integers(0, 16, size=(100_000, 1))

    parallel = dequant_words_parallel(words, scales, zeros)
    sequential = dequantize_codes(unpack_words(words), scales, zeros)
    assert np.array_equal(parallel.view(np.uint16), dequant_order_permutation().apply(sequential).view(np.uint16))


@pytest.mark.parametrize("low, high, expected_zero", [(10.0, 11.0, 0), (-11.0, -10.0, 15)])
def test_one_signed_group_keeps_half_scale_error(low, high, expected_zero):
    weights = WeightMatrix(np.tile(np.linspace(low, high, 128)[:, None], (1, 8)))
    quantized = quantize(weights, group_size=128)
    scale = float(quantized.params.scales[0, 0])

    assert np.all(quantized.params.zeros == expected_zero)
    assert scale == pytest.approx(11.0 / 15, rel=1e-3)
    max_error, _ = quantization_error(weights, quantized)
    assert max_error <= scale / 2 + 0.01


def test_dequant_word_parallel_rejects_words_outside_32_bits():
    with pytest.raises(DomainError):
        dequant_word_parallel(-1, 1.0, 0)
    with pytest.raises(DomainError):
        dequant_word_parallel(2**32, 1.0, 0)
    assert dequant_word_parallel(2**32 - 1, 1.0, 0).tolist() == [15] * 8
