import math
from typing import Literal

from pydantic import Field, field_validator, model_validator

from quicksim.models.base_model import Model

MMA_M, MMA_N, MMA_K = 16, 8, 16


class KernelSchedule(Model):
    """Per-warp tile geometry of the mixed-precision GEMM inner loop."""

    tile_m: int = Field(MMA_M, gt=0)
    tile_n: int = Field(MMA_N, gt=0)
    tile_k: int = Field(MMA_K, gt=0)
    k_tiles_per_load: int = 2
    load_vector_words: Literal[1, 2, 4] = 1
    loop_order: Literal["k_innermost"] = "k_innermost"

    @model_validator(mode="after")
    def check_mma_multiples(self) -> "KernelSchedule":
        for name, size, unit in (("tile_m", self.tile_m, MMA_M), ("tile_n", self.tile_n, MMA_N), ("tile_k", self.tile_k, MMA_K)):
            if size % unit:
                raise ValueError(f"{name}={size} must be a multiple of the mma extent {unit}")
        return self

    @field_validator("k_tiles_per_load")
    @classmethod
    def check_k_tiles_per_load(cls, value: int) -> int:
        # Eight nibbles per word, four B-fragment slots per K-tile.
        if value != 2:
            raise ValueError("each 32-bit word carries exactly two K-tiles (k_tiles_per_load=2)")
        return value

    @property
    def k_rows_per_word(self) -> int:
        return self.k_tiles_per_load * MMA_K

    @property
    def k_rows_per_load(self) -> int:
        return self.k_rows_per_word * self.load_vector_words


class BaselineSmemLayout(Model):
    """Row-major placement of the dequantized weight tile for the write-back path."""

    name: str = "unpadded"
    tile_n: int = Field(64, gt=0)
    padding_bytes: int = Field(0, ge=0)

    @field_validator("tile_n")
    @classmethod
    def check_tile_n(cls, value: int) -> int:
        if value % MMA_N:
            raise ValueError(f"tile_n={value} must be a multiple of {MMA_N}")
        return value

    @field_validator("padding_bytes")
    @classmethod
    def check_padding(cls, value: int) -> int:
        if value % 4:
            raise ValueError("padding must keep 4-byte granule alignment")
        return value

    @property
    def row_stride_bytes(self) -> int:
        return self.tile_n * 2 + self.padding_bytes

    @property
    def row_alignment(self) -> int:
        """Largest alignment, up to 16 bytes, shared by every row address."""
        return math.gcd(self.row_stride_bytes, 16)

    def address(self, row, col):
        """Byte address of half element (row, col) of the tile."""
        return row * self.row_stride_bytes + col * 2
