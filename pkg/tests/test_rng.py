import numpy as np

from quicksim.rng import SplitMix64


def test_known_sequence_for_seed_zero():
    outputs = SplitMix64(0).next_u64(3)
    assert [int(v) for v in outputs] == [0xE220A8397B1DCDAF, 0x6E789E6AA1B965F4, 0x06C45D188009454F]


def test_stream_continues_across_calls():
    whole = SplitMix64(42).next_u64(6)
    rng = SplitMix64(42)
    split = np.concatenate([rng.next_u64(2), rng.next_u64(4)])
    assert np.array_equal(whole, split)


def test_half_matrix_range_and_determinism():
    first = SplitMix64(7).half_matrix(16, 32)
    second = SplitMix64(7).half_matrix(16, 32)
    assert first.dtype == np.float16
    assert first.shape == (16, 32)
    assert first.tobytes() == second.tobytes()
    assert first.min() >= -1.0 and first.max() <= 1.0


def test_integers_below_bound():
    values = SplitMix64(3).integers(1000, 16)
    assert values.min() >= 0 and values.max() < 16
