"""
Config for pytest: shared fixtures for the quicksim test suite.
"""

import numpy as np
import pytest

from quicksim import create_app
from quicksim.quantcore import WeightMatrix, pack_natural, quantize
from quicksim.settings import Settings


@pytest.fixture
def app():
    """Create a fresh app instance, isolated from local .env files."""
    return create_app(Settings(_env_file=None))


@pytest.fixture
def random_weights():
    """Factory for seeded K×N weight matrices uniform in [-1, 1)."""

    def make(rows_k: int, cols_n: int, seed: int = 0) -> WeightMatrix:
        rng = np.random.default_rng(seed)
        return WeightMatrix(rng.uniform(-1.0, 1.0, size=(rows_k, cols_n)))

    return make


@pytest.fixture
def random_codes():
    """Factory for seeded K×N 4-bit code matrices."""

    def make(rows_k: int, cols_n: int, seed: int = 0) -> np.ndarray:
        return np.random.default_rng(seed).integers(0, 16, size=(rows_k, cols_n), dtype=np.uint8)

    return make


@pytest.fixture
def quantized_case(random_weights):
    """Factory returning (quantized matrix, natural packed weights)."""

    def make(rows_k: int, cols_n: int, group_size: int = 32, seed: int = 0):
        quantized = quantize(random_weights(rows_k, cols_n, seed), group_size)
        return quantized, pack_natural(quantized)

    return make


@pytest.fixture
def random_activations():
    def make(rows_m: int, cols_k: int, seed: int = 0) -> np.ndarray:
        rng = np.random.default_rng(seed + 1000)
        return rng.uniform(-1.0, 1.0, size=(rows_m, cols_k)).astype(np.float16)

    return make
