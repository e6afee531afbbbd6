"""
Functional emulation of one warp running the mixed-precision GEMM inner loop.

Baseline: direct load of natural words -> dequantize -> shared-memory
write-back -> ldmatrix -> mma.
QUICK: direct load of interleaved words -> dequantize in registers -> mma.

Both accumulate every output element in ascending k at single precision, so
their C must be bit-identical to each other and to :func:`reference_gemm`.
"""

import numpy as np

from quicksim.errors import ShapeError
from quicksim.layout import LANES, check_quick_shape, dequant_order_permutation, quick_word_index
from quicksim.logger import logger, tracer
from quicksim.models import BaselineSmemLayout, ConflictReport, KernelSchedule
from quicksim.models.schedule import MMA_K, MMA_M, MMA_N
from quicksim.quantcore import Layout, PackedWeights, QuantParams, dequant_words_parallel
from quicksim.warpsim.fragments import Fragment, FragmentSet, emulate_ldmatrix
from quicksim.warpsim.smem import AccessKind, ConflictMetric, SharedMemoryModel, TraceRecorder, conflict_count


def _as_half(matrix) -> np.ndarray:
    return np.asarray(matrix).astype(np.float16)


def reference_gemm(a, w_dequant, accumulators=None) -> np.ndarray:
    """Triple-loop oracle: half inputs, single-precision accumulation in ascending k."""
    a32 = _as_half(a).astype(np.float32)
    w32 = _as_half(w_dequant).astype(np.float32)
    if a32.ndim != 2 or w32.ndim != 2 or a32.shape[1] != w32.shape[0]:
        raise ShapeError(f"cannot multiply {a32.shape} by {w32.shape}")
    acc = _initial_accumulators(accumulators, (a32.shape[0], w32.shape[1]))
    for k in range(a32.shape[1]):
        acc = acc + a32[:, k, None] * w32[None, k, :]
    return acc


def _initial_accumulators(accumulators, shape) -> np.ndarray:
    if accumulators is None:
        return np.zeros(shape, dtype=np.float32)
    acc = np.array(accumulators, dtype=np.float32)
    if acc.shape != shape:
        raise ShapeError(f"accumulators must be {shape}, got {acc.shape}")
    return acc


def _pad_rows(a16: np.ndarray, acc: np.ndarray, tile_m: int) -> tuple[np.ndarray, np.ndarray]:
    """Zero rows up to a multiple of ``tile_m``; padded rows never reach real outputs."""
    extra = -a16.shape[0] % tile_m
    return np.pad(a16, ((0, extra), (0, 0))), np.pad(acc, ((0, extra), (0, 0)))


def _check_problem(a: np.ndarray, packed: PackedWeights, params: QuantParams, schedule: KernelSchedule) -> None:
    rows_k, cols_n = packed.shape
    m, k = a.shape
    if k != rows_k:
        raise ShapeError(f"activations have K={k}, weights have K={rows_k}")
    if m <= 0:
        raise ShapeError(f"M={m} must be positive")
    if cols_n % schedule.tile_n or rows_k % schedule.tile_k:
        raise ShapeError(f"weights {packed.shape} do not divide into {schedule.tile_k}x{schedule.tile_n} warp tiles")
    if params.scales.shape != (rows_k // params.group_size, cols_n):
        raise ShapeError(f"quantization params {params.scales.shape} do not match weights {packed.shape}")
    check_quick_shape(packed.shape, schedule)


def _mma_column(a16: np.ndarray, acc: np.ndarray, b: Fragment, n0: int, k0: int, schedule: KernelSchedule) -> None:
    """Runs one B fragment against every 16-row slice of A, updating ``acc`` in place."""
    for m_warp in range(0, a16.shape[0], schedule.tile_m):
        for m0 in range(m_warp, m_warp + schedule.tile_m, MMA_M):
            a = Fragment.from_tile("a", a16[m0:m0 + MMA_M, k0:k0 + MMA_K])
            c = Fragment.from_tile("c", acc[m0:m0 + MMA_M, n0:n0 + MMA_N])
            acc[m0:m0 + MMA_M, n0:n0 + MMA_N] = FragmentSet(a, b, c).step().to_tile()


def load_quick_b_fragments(
    packed: PackedWeights, params: QuantParams, n_block: int, k_pair: int, schedule: KernelSchedule | None = None
) -> tuple[Fragment, Fragment]:
    """Direct per-lane load of one QUICK word, dequantized into the B fragments of K-tiles 2p and 2p+1."""
    schedule = schedule or KernelSchedule()
    packed.require(Layout.QUICK)
    lanes = np.arange(LANES)
    words = packed.words[quick_word_index(packed.shape, schedule, n_block, k_pair, lanes)]

    n = n_block * MMA_N + lanes // 4
    k_first = k_pair * schedule.k_rows_per_word
    groups = np.repeat([k_first // params.group_size, (k_first + MMA_K) // params.group_size], 4)
    scales = params.scales[groups[None, :], n[:, None]]
    zeros = params.zeros[groups[None, :], n[:, None]]

    values = dequant_words_parallel(words, scales, zeros)
    return Fragment.full("b", values[:, :4]), Fragment.full("b", values[:, 4:])


def _writeback(
    shared: SharedMemoryModel,
    recorder: TraceRecorder,
    packed: PackedWeights,
    params: QuantParams,
    layout: BaselineSmemLayout,
    n_block: int,
    local_block: int,
    k0: int,
) -> None:
    """One warp store: lane l dequantizes natural word (n_block, k0 + l) and writes its row."""
    rows_k, _ = packed.shape
    lanes = np.arange(LANES)
    words = packed.words[n_block * rows_k + k0 + lanes]

    order = dequant_order_permutation()
    columns = n_block * MMA_N + order.as_array()
    groups = (k0 + lanes) // params.group_size
    scales = params.scales[groups[:, None], columns[None, :]]
    zeros = params.zeros[groups[:, None], columns[None, :]]

    # Extraction order -> column order is a register move before the 128-bit store.
    values = order.inverse().apply(dequant_words_parallel(words, scales, zeros))
    addresses = layout.address(lanes, local_block * MMA_N)
    shared.store_half(addresses, values)
    recorder.record(lanes, addresses, 16, AccessKind.STORE)


def _ldmatrix_b(
    shared: SharedMemoryModel, recorder: TraceRecorder, layout: BaselineSmemLayout, local_block: int, k_tile: int
) -> Fragment:
    """ldmatrix.x2.trans of the two 8×8 blocks of one 16×8 K-tile."""
    rows = k_tile * MMA_K + np.arange(16)
    addresses = layout.address(rows, local_block * MMA_N)
    values, _ = emulate_ldmatrix(shared, addresses, 2, trans=True, recorder=recorder, alignment=layout.row_alignment)
    return Fragment.full("b", values)


def load_baseline_b_fragments(
    packed: PackedWeights,
    params: QuantParams,
    n_block: int,
    k_pair: int,
    schedule: KernelSchedule | None = None,
    smem_layout: BaselineSmemLayout | None = None,
) -> tuple[Fragment, Fragment]:
    """Write-back of one 32×8 natural tile followed by ldmatrix of its two K-tiles."""
    schedule = schedule or KernelSchedule()
    layout = smem_layout or BaselineSmemLayout()
    packed.require(Layout.NATURAL)
    shared = SharedMemoryModel(schedule.k_rows_per_word * layout.row_stride_bytes)
    recorder = TraceRecorder()
    _writeback(shared, recorder, packed, params, layout, n_block, 0, k_pair * schedule.k_rows_per_word)
    return _ldmatrix_b(shared, recorder, layout, 0, 0), _ldmatrix_b(shared, recorder, layout, 0, 1)


def run_baseline_pipeline(
    a,
    packed: PackedWeights,
    params: QuantParams,
    schedule: KernelSchedule | None = None,
    smem_layout: BaselineSmemLayout | None = None,
    accumulators=None,
    metric: ConflictMetric | str = ConflictMetric.BANK_SUM,
) -> tuple[np.ndarray, ConflictReport]:
    """Dequantize, write back to shared memory, ldmatrix, mma.

    The warp stages 32 K-rows of a ``smem_layout.tile_n``-column slab at a
    time: one store instruction per 8-column block (lane l owns row l), then
    one ldmatrix.x2.trans per (K-tile, block).
    """
    schedule = schedule or KernelSchedule()
    layout = smem_layout or BaselineSmemLayout()
    packed.require(Layout.NATURAL)
    a16 = _as_half(a)
    _check_problem(a16, packed, params, schedule)
    rows_k, cols_n = packed.shape
    problem = f"{a16.shape[0]}x{cols_n}x{rows_k}"

    with tracer.start_as_current_span("warpsim.run_baseline_pipeline") as span:
        span.set_attribute("quicksim.problem", problem)
        span.set_attribute("quicksim.smem_layout", layout.name)
        acc = _initial_accumulators(accumulators, (a16.shape[0], cols_n))
        a_rows, acc_rows = _pad_rows(a16, acc, schedule.tile_m)
        chunk = schedule.k_rows_per_word
        shared = SharedMemoryModel(chunk * layout.row_stride_bytes)
        recorder = TraceRecorder()

        for slab in range(0, cols_n, layout.tile_n):
            blocks = range(slab // MMA_N, min(cols_n, slab + layout.tile_n) // MMA_N)
            for k0 in range(0, rows_k, chunk):
                for n_block in blocks:
                    _writeback(shared, recorder, packed, params, layout, n_block, n_block - blocks[0], k0)
                for k_tile in range(schedule.k_tiles_per_load):
                    for n_block in blocks:
                        b = _ldmatrix_b(shared, recorder, layout, n_block - blocks[0], k_tile)
                        _mma_column(a_rows, acc_rows, b, n_block * MMA_N, k0 + k_tile * MMA_K, schedule)

        acc = acc_rows[: a16.shape[0]]
        report = conflict_count(recorder.trace(), metric).model_copy(update={"pipeline": "baseline", "problem": problem})
        logger.info(f"Baseline pipeline {problem}: {report.to_record()}")
        return acc, report


def run_quick_pipeline(
    a,
    packed: PackedWeights,
    params: QuantParams,
    schedule: KernelSchedule | None = None,
    accumulators=None,
    metric: ConflictMetric | str = ConflictMetric.BANK_SUM,
) -> tuple[np.ndarray, ConflictReport]:
    """Direct load of interleaved words, dequantize in registers, mma. No shared-memory weight traffic."""
    schedule = schedule or KernelSchedule()
    packed.require(Layout.QUICK)
    a16 = _as_half(a)
    _check_problem(a16, packed, params, schedule)
    rows_k, cols_n = packed.shape
    problem = f"{a16.shape[0]}x{cols_n}x{rows_k}"

    with tracer.start_as_current_span("warpsim.run_quick_pipeline") as span:
        span.set_attribute("quicksim.problem", problem)
        acc = _initial_accumulators(accumulators, (a16.shape[0], cols_n))
        a_rows, acc_rows = _pad_rows(a16, acc, schedule.tile_m)
        recorder = TraceRecorder()

        for n_warp in range(0, cols_n, schedule.tile_n):
            for k_pair in range(rows_k // schedule.k_rows_per_word):
                for n_block in range(n_warp // MMA_N, (n_warp + schedule.tile_n) // MMA_N):
                    fragments = load_quick_b_fragments(packed, params, n_block, k_pair, schedule)
                    for k_tile, b in enumerate(fragments):
                        k0 = k_pair * schedule.k_rows_per_word + k_tile * MMA_K
                        _mma_column(a_rows, acc_rows, b, n_block * MMA_N, k0, schedule)

        acc = acc_rows[: a16.shape[0]]
        report = conflict_count(recorder.trace(), metric).model_copy(update={"pipeline": "quick", "problem": problem})
        logger.info(f"QUICK pipeline {problem}: {report.to_record()}")
        return acc, report


def first_fragment_mismatch(
    natural: PackedWeights,
    quick: PackedWeights,
    params: QuantParams,
    schedule: KernelSchedule | None = None,
    smem_layout: BaselineSmemLayout | None = None,
) -> dict | None:
    """Compares directly loaded QUICK fragments with ldmatrix fragments, tile by tile.

    Returns the first differing (n_block, k_tile, lane, slot) or None.
    """
    schedule = schedule or KernelSchedule()
    rows_k, cols_n = natural.shape
    for n_block in range(cols_n // MMA_N):
        for k_pair in range(rows_k // schedule.k_rows_per_word):
            expected = load_baseline_b_fragments(natural, params, n_block, k_pair, schedule, smem_layout)
            actual = load_quick_b_fragments(quick, params, n_block, k_pair, schedule)
            for k_tile, (want, got) in enumerate(zip(expected, actual)):
                if not want.equals(got):
                    lane, slot = np.argwhere(want.values.view(np.uint16) != got.values.view(np.uint16))[0]
                    return {
                        "stage": "fragment",
                        "n_block": n_block,
                        "k_tile": 2 * k_pair + k_tile,
                        "lane": int(lane),
                        "slot": int(slot),
                    }
    return None
