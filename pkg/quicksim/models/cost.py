from typing import ClassVar, Literal

from pydantic import Field, model_validator

from quicksim.models.base_model import Model
from quicksim.models.schedule import MMA_K, MMA_M, MMA_N

Variant = Literal["baseline", "quick"]


class TileConfig(Model):
    """Thread-block tile geometry of one kernel variant."""

    block_tile_m: int = Field(64, gt=0)
    block_tile_n: int = Field(64, gt=0)
    block_tile_k: int = Field(64, gt=0)
    warps_per_block: int = Field(4, gt=0)
    pipeline_stages: int = Field(1, ge=1)
    regs_per_thread: int = Field(128, gt=0)
    variant: Variant = "baseline"

    @model_validator(mode="after")
    def check_warp_tile_multiples(self) -> "TileConfig":
        for name, size, unit in (
            ("block_tile_m", self.block_tile_m, MMA_M),
            ("block_tile_n", self.block_tile_n, MMA_N),
            ("block_tile_k", self.block_tile_k, MMA_K),
        ):
            if size % unit:
                raise ValueError(f"{name}={size} must be a multiple of the warp tile extent {unit}")
        return self

    @property
    def tiles(self) -> str:
        return f"{self.block_tile_m}x{self.block_tile_n}x{self.block_tile_k}"


class HardwareProfile(Model):
    """Per-multiprocessor budgets. Values are model parameters, not device claims."""

    name: str = "custom"
    smem_per_sm: int = Field(..., gt=0)
    regs_per_sm: int = Field(..., gt=0)
    max_warps_per_sm: int = Field(..., gt=0)
    max_blocks_per_sm: int | None = Field(None, gt=0)
    lanes_per_warp: Literal[32] = 32


class GemmProblem(Model):
    """C[m×n] = A[m×k] · W[k×n]; m is the batch size."""

    m: int = Field(..., gt=0)
    n: int = Field(..., gt=0)
    k: int = Field(..., gt=0)

    @property
    def shape(self) -> str:
        return f"{self.m}x{self.n}x{self.k}"


class DramTraffic(Model):
    activations: int = Field(..., ge=0)
    weights: int = Field(..., ge=0)
    quant_params: int = Field(..., ge=0)
    output: int = Field(..., ge=0)

    @property
    def total(self) -> int:
        return self.activations + self.weights + self.quant_params + self.output


class Occupancy(Model):
    active_warps: int = Field(..., ge=0)
    blocks_per_sm: int = Field(..., ge=0)
    limiter: Literal["smem", "registers", "warp_cap", "block_cap", "infeasible"]
    diagnostic: str = ""


class CostReport(Model):
    record_fields: ClassVar[tuple[str, ...]] = (
        "variant",
        "problem",
        "tiles",
        "stages",
        "warps_per_block",
        "regs_per_thread",
        "smem_bytes_per_block",
        "theoretical_active_warps",
        "limiter",
        "dram_activations",
        "dram_weights",
        "dram_quant_params",
        "dram_output",
        "dram_total",
        "diagnostic",
    )

    config: TileConfig
    problem: str
    smem_bytes_per_block: int = Field(..., ge=0)
    occupancy: Occupancy
    dram_bytes: DramTraffic

    @property
    def variant(self) -> str:
        return self.config.variant

    @property
    def tiles(self) -> str:
        return self.config.tiles

    @property
    def stages(self) -> int:
        return self.config.pipeline_stages

    @property
    def warps_per_block(self) -> int:
        return self.config.warps_per_block

    @property
    def regs_per_thread(self) -> int:
        return self.config.regs_per_thread

    @property
    def theoretical_active_warps(self) -> int:
        return self.occupancy.active_warps

    @property
    def limiter(self) -> str:
        return self.occupancy.limiter

    @property
    def dram_activations(self) -> int:
        return self.dram_bytes.activations

    @property
    def dram_weights(self) -> int:
        return self.dram_bytes.weights

    @property
    def dram_quant_params(self) -> int:
        return self.dram_bytes.quant_params

    @property
    def dram_output(self) -> int:
        return self.dram_bytes.output

    @property
    def dram_total(self) -> int:
        return self.dram_bytes.total

    @property
    def diagnostic(self) -> str | None:
        return self.occupancy.diagnostic or None


class TradeoffReport(Model):
    """Baseline at its tile against QUICK at the same and at doubled block_tile_n."""

    baseline: CostReport
    quick_same_tile: CostReport
    quick_wide_tile: CostReport

    @property
    def holds(self) -> bool:
        return (
            self.baseline.theoretical_active_warps > 0
            and self.quick_wide_tile.theoretical_active_warps >= self.baseline.theoretical_active_warps
            and self.quick_wide_tile.dram_activations < self.baseline.dram_activations
        )


class BatchPoint(Model):
    """The tile trade-off evaluated at one batch size M."""

    record_fields: ClassVar[tuple[str, ...]] = (
        "batch",
        "baseline_tiles",
        "wide_tiles",
        "baseline_active_warps",
        "wide_active_warps",
        "baseline_dram_total",
        "wide_dram_total",
        "dram_saving_pct",
        "activation_bound",
        "tradeoff_holds",
    )

    batch: int = Field(..., gt=0)
    tradeoff: TradeoffReport

    @property
    def baseline_tiles(self) -> str:
        return self.tradeoff.baseline.tiles

    @property
    def wide_tiles(self) -> str:
        return self.tradeoff.quick_wide_tile.tiles

    @property
    def baseline_active_warps(self) -> int:
        return self.tradeoff.baseline.theoretical_active_warps

    @property
    def wide_active_warps(self) -> int:
        return self.tradeoff.quick_wide_tile.theoretical_active_warps

    @property
    def baseline_dram_total(self) -> int:
        return self.tradeoff.baseline.dram_total

    @property
    def wide_dram_total(self) -> int:
        return self.tradeoff.quick_wide_tile.dram_total

    @property
    def dram_saving_pct(self) -> float:
        saved = self.baseline_dram_total - self.wide_dram_total
        return round(100.0 * saved / self.baseline_dram_total, 2)

    @property
    def activation_bound(self) -> bool:
        """Baseline re-reads of A move at least as many bytes as the weights."""
        baseline = self.tradeoff.baseline
        return baseline.dram_activations >= baseline.dram_weights

    @property
    def tradeoff_holds(self) -> bool:
        return self.tradeoff.holds
