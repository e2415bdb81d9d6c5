"""Backend selection and the public simulation entry points.

Two interchangeable engines execute lowered kernels: a compiled extension
(``tensopt.sim._engine_cy``) and a pure-Python fallback (``engine_py``).
They are contractually bit-identical; ``TENSOPT_SIM_BACKEND=py|c`` forces a
choice, otherwise the compiled engine is used when present.
"""

from __future__ import annotations

import os

import numpy as np

from ..dsl.nodes import KernelProgram
from . import engine_py
from .config import AcceleratorConfig
from .lower import DTYPE_NUMPY, LoweredProgram, lower_kernel
from .report import (
    MachineTrace,
    PerfReport,
    compute_feedback,
    report_from_counters,
    trace_from_counters,
)

__all__ = [
    "available_backends", "backend_name", "compile_kernel", "compute_feedback",
    "make_buffers", "run_compiled", "run_functional", "run_timed",
]

_resolved = None


def _compiled_module():
    try:
        from . import _engine_cy
        return _engine_cy
    except ImportError:
        return None


def _get_backend(name: str | None = None):
    """Resolve a backend module from an explicit name or the environment."""
    global _resolved
    if name is None:
        name = os.environ.get("TENSOPT_SIM_BACKEND", "").strip().lower() or None
    if name is not None:
        if name in ("py", "python"):
            return engine_py, "python"
        if name in ("c", "cy", "compiled"):
            mod = _compiled_module()
            if mod is None:
                raise RuntimeError(
                    "the compiled engine was requested but is not built; "
                    "reinstall the package or set TENSOPT_SIM_BACKEND=py")
            return mod, "compiled"
        raise ValueError(f"unknown simulation backend {name!r}")
    if _resolved is None:
        mod = _compiled_module()
        _resolved = (mod, "compiled") if mod is not None else (engine_py, "python")
    return _resolved


def backend_name() -> str:
    """Name of the engine that will run by default: 'compiled' or 'python'."""
    return _get_backend()[1]


def available_backends() -> list[str]:
    names = ["python"]
    if _compiled_module() is not None:
        names.insert(0, "compiled")
    return names


def compile_kernel(p: KernelProgram, cfg: AcceleratorConfig) -> LoweredProgram:
    """Lower a parsed kernel for the given accelerator (raises LoweringError)."""
    return lower_kernel(p, cfg)


def make_buffers(low: LoweredProgram, inputs: dict) -> list[np.ndarray]:
    """Build the flat DRAM buffers for a run, copying the named inputs.

    Every kernel parameter must be supplied with its exact declared shape and
    element type; locals start zeroed.
    """
    param_names = {info.name for info in low.arrays if info.is_param}
    unknown = set(inputs) - param_names
    if unknown:
        raise ValueError(f"unknown input(s): {sorted(unknown)}")
    buffers: list[np.ndarray] = []
    for info in low.arrays:
        want = np.dtype(DTYPE_NUMPY[info.dtype_code])
        if not info.is_param:
            buffers.append(np.zeros(info.size_elems, dtype=want))
            continue
        if info.name not in inputs:
            raise ValueError(f"missing input {info.name!r}")
        arr = np.asarray(inputs[info.name])
        if tuple(arr.shape) != info.shape:
            raise ValueError(f"input {info.name!r} has shape {tuple(arr.shape)}, "
                             f"expected {info.shape}")
        if arr.dtype != want:
            raise ValueError(f"input {info.name!r} has dtype {arr.dtype}, "
                             f"expected {want}")
        buffers.append(np.ascontiguousarray(arr).reshape(-1).copy())
    return buffers


def run_compiled(low: LoweredProgram, inputs: dict, timed: bool = True,
                 record_events: bool = False, backend: str | None = None):
    """Execute a lowered kernel; returns (outputs, counters, events).

    outputs maps every parameter name to its (possibly mutated) array in the
    declared shape; the caller's input arrays are never modified.
    """
    mod, _ = _get_backend(backend)
    buffers = make_buffers(low, inputs)
    counters, events = mod.execute(low, buffers, timed, record_events)
    outputs = {info.name: buffers[i].reshape(info.shape)
               for i, info in enumerate(low.arrays) if info.is_param}
    return outputs, counters, events


def run_functional(p: KernelProgram, cfg: AcceleratorConfig, inputs: dict,
                   backend: str | None = None) -> tuple[dict, MachineTrace]:
    """Execute a kernel functionally (no timing model)."""
    low = lower_kernel(p, cfg)
    outputs, counters, _ = run_compiled(low, inputs, timed=False,
                                        backend=backend)
    return outputs, trace_from_counters(counters)


def run_timed(p: KernelProgram, cfg: AcceleratorConfig, inputs: dict,
              record_events: bool = False, backend: str | None = None,
              ) -> tuple[dict, PerfReport, MachineTrace]:
    """Execute a kernel with the timing model.

    Functional results are identical to run_functional; the MachineTrace
    carries the event log when record_events is set.
    """
    low = lower_kernel(p, cfg)
    outputs, counters, events = run_compiled(low, inputs, timed=True,
                                             record_events=record_events,
                                             backend=backend)
    return outputs, report_from_counters(counters, cfg), \
        trace_from_counters(counters, events)
