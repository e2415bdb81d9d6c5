"""Accelerator simulator: functional ISA semantics plus a cycle-approximate
three-controller timing model."""

from .addresses import (
    ACC_BIT,
    ACCUMULATE_BIT,
    ADDR_MASK,
    FULL_WIDTH_BIT,
    GARBAGE_ADDR,
    ROW_MASK,
    LocalAddress,
    decode_local_address,
    encode_local_address,
    is_garbage,
)
from .config import AcceleratorConfig, TimingParams, instance_a, instance_b
from .engine import (
    available_backends,
    backend_name,
    compile_kernel,
    compute_feedback,
    make_buffers,
    run_compiled,
    run_functional,
    run_timed,
)
from .errors import LoweringError, SimulationError
from .events import check_trace, event_from_json, event_to_json
from .lower import LoweredProgram, lower_kernel
from .report import (
    CONTROLLERS,
    KIND_NAMES,
    MachineTrace,
    PerfReport,
    report_from_counters,
    trace_from_counters,
)

__all__ = [
    "ACC_BIT", "ACCUMULATE_BIT", "ADDR_MASK", "FULL_WIDTH_BIT", "GARBAGE_ADDR",
    "ROW_MASK", "LocalAddress", "decode_local_address", "encode_local_address",
    "is_garbage", "AcceleratorConfig", "TimingParams", "instance_a",
    "instance_b", "available_backends", "backend_name", "compile_kernel",
    "compute_feedback", "make_buffers", "run_compiled", "run_functional",
    "run_timed", "LoweringError", "SimulationError", "check_trace",
    "event_from_json", "event_to_json", "LoweredProgram", "lower_kernel",
    "CONTROLLERS", "KIND_NAMES", "MachineTrace", "PerfReport",
    "report_from_counters", "trace_from_counters",
]
