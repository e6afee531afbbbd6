# flake8: noqa
from quicksim.warpsim.fragments import Fragment, FragmentSet, emulate_ldmatrix, emulate_mma_16x8x16
from quicksim.warpsim.pipelines import (
    first_fragment_mismatch,
    load_baseline_b_fragments,
    load_quick_b_fragments,
    reference_gemm,
    run_baseline_pipeline,
    run_quick_pipeline,
)
from quicksim.warpsim.smem import (
    AccessKind,
    BankTrace,
    ConflictMetric,
    SharedMemoryModel,
    TraceRecorder,
    bank_of,
    conflict_count,
)
