import sys

import numpy as np

from quicksim import costmodel, util
from quicksim.container import WeightContainer, corrupted_tiles, read_container
from quicksim.errors import ProblemError, VerificationFailure
from quicksim.layout import deinterleave_quick, interleave_quick
from quicksim.logger import logger, tracer
from quicksim.models import GemmProblem, TileConfig
from quicksim.quantcore import Layout, PackedWeights, QuantizedMatrix, dequantize_reference, unpack_natural
from quicksim.rng import SplitMix64
from quicksim.warpsim.pipelines import first_fragment_mismatch, reference_gemm, run_baseline_pipeline, run_quick_pipeline


def _problem_for(container: WeightContainer, problem: str) -> GemmProblem:
    m, n, k = util.parse_dims(problem)
    if m <= 0 or n <= 0 or k <= 0:
        raise ProblemError(f"problem {problem} must have positive M, N and K")
    rows_k, cols_n = container.packed.shape
    if (k, n) != (rows_k, cols_n):
        raise ProblemError(f"problem {problem} needs a {k}x{n} weight matrix, container holds {rows_k}x{cols_n}")
    return GemmProblem(m=m, n=n, k=k)


def _both_layouts(container: WeightContainer) -> tuple[PackedWeights, PackedWeights]:
    """(natural, quick) forms of the container's word stream."""
    schedule = container.schedule
    if container.layout == Layout.NATURAL:
        return container.packed, interleave_quick(container.packed, schedule)
    return deinterleave_quick(container.packed, schedule), container.packed


def _activations(problem: GemmProblem, seed: int) -> np.ndarray:
    return SplitMix64(seed).half_matrix(problem.m, problem.k)


def _first_difference(expected: np.ndarray, actual: np.ndarray, stage: str) -> dict | None:
    diff = np.argwhere(expected.view(np.uint32) != actual.view(np.uint32))
    if not len(diff):
        return None
    m, n = diff[0]
    return {"stage": stage, "m": int(m), "n": int(n), "expected": float(expected[m, n]), "actual": float(actual[m, n])}


def cmd_verify(app, container_path, problem, seed=None, smem_layout=None, out=sys.stdout):
    """Check that the baseline and QUICK data paths agree bit for bit.

    Stages, first failure wins: tile checksums, B-fragment equivalence per
    tile, baseline C against QUICK C, both against the reference GEMM.

    :param problem: ``MxNxK``; N and K must match the container
    :type problem: str
    :param seed: SplitMix64 seed for the activations
    :type seed: int

    :rtype: int
    """
    seed = app.settings.DEFAULT_SEED if seed is None else seed
    container = read_container(container_path)
    gemm = _problem_for(container, problem)
    layout = app.presets.get_smem_layout(smem_layout)
    record = {
        "command": "verify",
        "container": container_path,
        "layout": container.layout.value,
        "problem": gemm.shape,
        "seed": seed,
    }

    with tracer.start_as_current_span("command.verify"):
        try:
            bad = corrupted_tiles(container)
            if bad:
                raise VerificationFailure(f"{len(bad)} tile(s) fail their checksum", bad[0])

            natural, quick = _both_layouts(container)
            schedule = container.schedule
            mismatch = first_fragment_mismatch(natural, quick, container.params, schedule, layout)
            if mismatch:
                raise VerificationFailure("directly loaded fragment differs from ldmatrix fragment", mismatch)

            a = _activations(gemm, seed)
            baseline, _ = run_baseline_pipeline(a, natural, container.params, schedule, layout)
            direct, _ = run_quick_pipeline(a, quick, container.params, schedule)
            mismatch = _first_difference(baseline, direct, "C")
            if mismatch:
                raise VerificationFailure("baseline and QUICK accumulators differ", mismatch)

            weights = dequantize_reference(QuantizedMatrix(unpack_natural(natural), container.params))
            mismatch = _first_difference(reference_gemm(a, weights), baseline, "reference")
            if mismatch:
                raise VerificationFailure("pipelines differ from the reference GEMM", mismatch)
        except VerificationFailure as failure:
            print(util.format_record({**record, "status": "FAIL", **failure.location}), file=out)
            raise

    rows_k, cols_n = container.packed.shape
    record.update({"status": "PASS", "tiles": (rows_k // 16) * (cols_n // 8), "max_abs_c": float(np.abs(baseline).max())})
    print(util.format_record(record), file=out)
    logger.info(f"Verified {container_path} on {gemm.shape}")
    return 0


def cmd_simulate(app, container_path, problem, smem_layout=None, seed=None, metric=None, csv_path=None, out=sys.stdout):
    """Run both pipelines and report shared-memory bank conflicts side by side.

    :param smem_layout: baseline write-back layout preset
    :type smem_layout: str
    :param metric: ``bank_sum`` or ``wavefront``
    :type metric: str

    :rtype: int
    """
    seed = app.settings.DEFAULT_SEED if seed is None else seed
    metric = metric or app.settings.CONFLICT_METRIC
    container = read_container(container_path)
    gemm = _problem_for(container, problem)
    layout = app.presets.get_smem_layout(smem_layout)

    with tracer.start_as_current_span("command.simulate"):
        natural, quick = _both_layouts(container)
        a = _activations(gemm, seed)
        baseline_c, baseline = run_baseline_pipeline(a, natural, container.params, container.schedule, layout, metric=metric)
        quick_c, direct = run_quick_pipeline(a, quick, container.params, container.schedule, metric=metric)

    same = baseline_c.tobytes() == quick_c.tobytes()
    records = [
        {"seed": seed, "smem_layout": layout.name, **report.to_record_dict(), "c_bit_identical": same}
        for report in (baseline, direct)
    ]
    for record in records:
        print(util.format_record(record), file=out)
    if csv_path:
        util.write_csv(csv_path, records)
    return 0


def cmd_cost(
    app,
    problem,
    tiles="64x64x64",
    hardware=None,
    variant="both",
    stages=1,
    warps=4,
    regs=128,
    group_size=None,
    tradeoff=False,
    batches=None,
    csv_path=None,
    out=sys.stdout,
):
    """Shared-memory footprint, occupancy and DRAM traffic per kernel variant.

    Infeasible configurations are reported with a diagnostic, not an error.

    :param tiles: block tile ``MxNxK``
    :type tiles: str
    :param variant: ``baseline``, ``quick`` or ``both``
    :type variant: str
    :param tradeoff: also evaluate QUICK at doubled block_tile_n
    :type tradeoff: bool
    :param batches: comma-separated batch sizes; replaces M and sweeps the trade-off
    :type batches: str

    :rtype: int
    """
    group_size = group_size or app.settings.DEFAULT_GROUP_SIZE
    m, n, k = util.parse_dims(problem)
    gemm = GemmProblem(m=m, n=n, k=k)
    tile_m, tile_n, tile_k = util.parse_dims(tiles)
    hw = app.presets.get_hardware(hardware)
    cfg = TileConfig(
        block_tile_m=tile_m,
        block_tile_n=tile_n,
        block_tile_k=tile_k,
        warps_per_block=warps,
        pipeline_stages=stages,
        regs_per_thread=regs,
    )

    header = {"hardware": hw.name, **hw.to_record_dict(), "problem": gemm.shape, "group_size": group_size}
    header.pop("name")
    print(util.format_record(header), file=out)

    if batches:
        return _cost_sweep(gemm, cfg, hw, util.parse_batches(batches), group_size, csv_path, out)

    variants = ("baseline", "quick") if variant == "both" else (variant,)
    reports = [costmodel.cost_report(gemm, cfg.model_copy(update={"variant": v}), hw, group_size) for v in variants]
    summary = None
    if tradeoff:
        result = costmodel.tile_tradeoff(gemm, cfg, hw, group_size)
        reports.append(result.quick_wide_tile)
        summary = {"tradeoff_holds": result.holds, "wide_tile": result.quick_wide_tile.tiles}

    records = [report.to_record_dict() for report in reports]
    for record in records:
        print(util.format_record(record), file=out)
    if summary:
        print(util.format_record(summary), file=out)
    if csv_path:
        util.write_csv(csv_path, records)
    return 0


def _cost_sweep(gemm, cfg, hw, batches, group_size, csv_path, out) -> int:
    with tracer.start_as_current_span("command.cost.sweep"):
        points = costmodel.batch_sweep(gemm, cfg, hw, batches, group_size)
    records = [point.to_record_dict() for point in points]
    for record in records:
        print(util.format_record(record), file=out)
    crossover = costmodel.traffic_crossover(points)
    print(util.format_record({"crossover_batch": crossover}), file=out)
    logger.info(f"Swept {len(points)} batch sizes on {hw.name}; crossover at {crossover}")
    if csv_path:
        util.write_csv(csv_path, records)
    return 0
