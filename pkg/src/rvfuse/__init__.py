"""RV32IM fusion workbench.

Profile RV32IM programs for fusible instruction patterns, rewrite them onto
custom instructions (mac, add2i, fusedmac, zero-overhead loops), simulate
the processor variant ladder v0..v4 and report cycles, speedup, energy per
inference and memory footprint.
"""

from .isa import (
    Variant,
    Instruction,
    encode,
    decode,
    extensions_of,
    required_variant,
    EncodingError,
    ILLEGAL,
)
from .asm import (
    AsmError,
    Program,
    assemble,
    disassemble,
    load_bin,
    save_bin,
    DATA_BASE,
)
from .sim import (
    BudgetExceeded,
    CycleModel,
    MachineState,
    RunResult,
    SimTrap,
    new_state,
    run,
    step,
    trace,
)
from .profiler import (
    ImmediateHistogram,
    PatternReport,
    SplitChoice,
    count_patterns,
    count_patterns_static,
    coverage,
    immediate_histogram,
    select_split,
)
from .rewriter import (
    RewriteStats,
    apply_add2i,
    apply_fusedmac,
    apply_mac,
    apply_zol,
    retarget,
)
from .workloads import (
    DEFAULT_SEED,
    GoldenResult,
    KernelSpec,
    bundled_workloads,
    codegen,
    codegen_source,
    data_layout,
    extract_outputs,
    lenet5_star,
    microkernels,
    oracle,
    random_tensors,
    read_tensor,
    write_tensor,
)
from .evaluator import (
    BenchRow,
    CorrectnessError,
    EnergyParams,
    bench_matrix,
    energy,
    report,
)

__version__ = "0.1.0"
