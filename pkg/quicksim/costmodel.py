"""
First-order analytical model of the tile-size trade-off.

Cache-less, perfect reuse inside a tile: every thread block streams its
A slab and its W slab from DRAM once. Dropping the weight tile from shared
memory lets the same occupancy admit a wider block tile, which cuts how
often activations are re-read.
"""

import itertools

from quicksim import util
from quicksim.logger import logger
from quicksim.errors import ProblemError
from quicksim.models import (
    BatchPoint,
    CostReport,
    DramTraffic,
    GemmProblem,
    HardwareProfile,
    Occupancy,
    TileConfig,
    TradeoffReport,
)
from quicksim.quantcore import DEFAULT_GROUP_SIZE

HALF_BYTES = 2
# fp16 scale + uint8 zero per (group, column)
QUANT_PARAM_BYTES = 3


def smem_bytes(cfg: TileConfig) -> int:
    activation_tile = cfg.block_tile_m * cfg.block_tile_k
    weight_tile = cfg.block_tile_k * cfg.block_tile_n if cfg.variant == "baseline" else 0
    return cfg.pipeline_stages * (activation_tile + weight_tile) * HALF_BYTES


def occupancy(cfg: TileConfig, hw: HardwareProfile) -> Occupancy:
    """Resident warps per multiprocessor and the budget that binds.

    Blocks are limited by shared memory and by registers; the warp total is
    then capped at ``max_warps_per_sm``. A block that does not fit at all is
    infeasible (zero warps).
    """
    smem = smem_bytes(cfg)
    regs_per_block = cfg.regs_per_thread * hw.lanes_per_warp * cfg.warps_per_block

    if smem > hw.smem_per_sm:
        return Occupancy(
            active_warps=0,
            blocks_per_sm=0,
            limiter="infeasible",
            diagnostic=f"block needs {smem} B of shared memory, {hw.name} has {hw.smem_per_sm} B",
        )
    if regs_per_block > hw.regs_per_sm:
        return Occupancy(
            active_warps=0,
            blocks_per_sm=0,
            limiter="infeasible",
            diagnostic=f"block needs {regs_per_block} registers, {hw.name} has {hw.regs_per_sm}",
        )

    limits = {"smem": hw.smem_per_sm // smem, "registers": hw.regs_per_sm // regs_per_block}
    if hw.max_blocks_per_sm is not None:
        limits["block_cap"] = hw.max_blocks_per_sm
    limiter = min(limits, key=limits.get)
    blocks = limits[limiter]

    warps = blocks * cfg.warps_per_block
    if warps > hw.max_warps_per_sm:
        warps, limiter = hw.max_warps_per_sm, "warp_cap"
    return Occupancy(active_warps=warps, blocks_per_sm=blocks, limiter=limiter)


def active_warps(cfg: TileConfig, hw: HardwareProfile) -> int:
    return occupancy(cfg, hw).active_warps


def dram_traffic(problem: GemmProblem, cfg: TileConfig, group_size: int = DEFAULT_GROUP_SIZE) -> DramTraffic:
    """Bytes moved per operand. Identical for both variants: interleaving keeps the weight volume."""
    m_blocks = util.ceil_div(problem.m, cfg.block_tile_m)
    n_blocks = util.ceil_div(problem.n, cfg.block_tile_n)
    return DramTraffic(
        activations=n_blocks * problem.m * problem.k * HALF_BYTES,
        weights=m_blocks * problem.k * problem.n // 2,
        quant_params=m_blocks * util.ceil_div(problem.k, group_size) * problem.n * QUANT_PARAM_BYTES,
        output=problem.m * problem.n * HALF_BYTES,
    )


def cost_report(
    problem: GemmProblem, cfg: TileConfig, hw: HardwareProfile, group_size: int = DEFAULT_GROUP_SIZE
) -> CostReport:
    report = CostReport(
        config=cfg,
        problem=problem.shape,
        smem_bytes_per_block=smem_bytes(cfg),
        occupancy=occupancy(cfg, hw),
        dram_bytes=dram_traffic(problem, cfg, group_size),
    )
    if report.limiter == "infeasible":
        logger.info(f"{cfg.variant} {cfg.tiles} on {hw.name}: {report.occupancy.diagnostic}")
    return report


def tile_tradeoff(
    problem: GemmProblem, cfg: TileConfig, hw: HardwareProfile, group_size: int = DEFAULT_GROUP_SIZE
) -> TradeoffReport:
    """Baseline at ``cfg`` against QUICK at the same tile and at doubled ``block_tile_n``."""
    return TradeoffReport(
        baseline=cost_report(problem, cfg.model_copy(update={"variant": "baseline"}), hw, group_size),
        quick_same_tile=cost_report(problem, cfg.model_copy(update={"variant": "quick"}), hw, group_size),
        quick_wide_tile=cost_report(
            problem,
            cfg.model_copy(update={"variant": "quick", "block_tile_n": 2 * cfg.block_tile_n}),
            hw,
            group_size,
        ),
    )


def find_tradeoff_config(
    hw: HardwareProfile, problem: GemmProblem | None = None, group_size: int = DEFAULT_GROUP_SIZE
) -> TradeoffReport | None:
    """First config on a small grid where QUICK at a doubled tile keeps occupancy and cuts activation reads."""
    problem = problem or GemmProblem(m=64, n=8192, k=8192)
    grid = itertools.product((32, 64, 128), (32, 64, 128), (32, 64), (1, 2, 3), (4, 8), (64, 128, 255))
    for tile_m, tile_n, tile_k, stages, warps, regs in grid:
        cfg = TileConfig(
            block_tile_m=tile_m,
            block_tile_n=tile_n,
            block_tile_k=tile_k,
            warps_per_block=warps,
            pipeline_stages=stages,
            regs_per_thread=regs,
        )
        report = tile_tradeoff(problem, cfg, hw, group_size)
        if report.holds:
            return report
    return None


def batch_sweep(
    problem: GemmProblem,
    cfg: TileConfig,
    hw: HardwareProfile,
    batches,
    group_size: int = DEFAULT_GROUP_SIZE,
) -> list[BatchPoint]:
    """The tile trade-off at each batch size, smallest first. ``problem.m`` is replaced."""
    batches = sorted(set(int(m) for m in batches))
    if not batches or batches[0] <= 0:
        raise ProblemError(f"batch sizes must be positive, got {batches}")
    return [
        BatchPoint(batch=m, tradeoff=tile_tradeoff(problem.model_copy(update={"m": m}), cfg, hw, group_size))
        for m in batches
    ]


def traffic_crossover(points: list[BatchPoint]) -> int | None:
    """Smallest swept batch at which activation re-reads dominate the baseline's DRAM traffic."""
    return next((point.batch for point in points if point.activation_bound), None)
